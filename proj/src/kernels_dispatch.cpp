#include <atomic>
#include <cstdlib>
#include <cstring>
#include <string>

#include "phasemem/errors.hpp"
#include "phasemem/kernels.hpp"

namespace phasemem::kernels {

#if PHASEMEM_KERNELS_AVX2
const Ops& avx2_ops();  // defined in kernels_avx2.cpp
#endif

bool avx2_available() {
#if PHASEMEM_KERNELS_AVX2
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

Lane pick_lane() {
  if (const char* env = std::getenv("PHASEMEM_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return Lane::scalar;
    if (std::strcmp(env, "avx2") == 0) {
      if (!avx2_available())
        throw config_error("PHASEMEM_KERNELS=avx2 but AVX2+FMA is unavailable");
      return Lane::avx2;
    }
    if (std::strcmp(env, "auto") != 0)
      throw config_error(std::string("unknown PHASEMEM_KERNELS value: ") + env);
  }
  return avx2_available() ? Lane::avx2 : Lane::scalar;
}

std::atomic<Lane>& lane_slot() {
  static std::atomic<Lane> lane{pick_lane()};
  return lane;
}

}  // namespace

Lane active_lane() { return lane_slot().load(std::memory_order_relaxed); }

const char* lane_name(Lane lane) {
  return lane == Lane::avx2 ? "avx2" : "scalar";
}

void force_lane(Lane lane) {
  if (lane == Lane::avx2 && !avx2_available())
    throw config_error("AVX2+FMA kernels are unavailable on this machine");
  lane_slot().store(lane, std::memory_order_relaxed);
}

const Ops& ops_for(Lane lane) {
#if PHASEMEM_KERNELS_AVX2
  if (lane == Lane::avx2) return avx2_ops();
#endif
  return scalar_ops();
}

const Ops& ops() { return ops_for(active_lane()); }

}  // namespace phasemem::kernels
