#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace phasemem::levels {

/// One (J, parity) resonance class: how many levels it holds and their mean
/// spacing. Per-class spacing supports a J-dependent mean spacing.
struct SpinClass {
  int spin = 0;         // total spin J >= 0
  int parity = +1;      // +1 or -1
  int count = 2;        // number of levels in the class, >= 2
  double spacing = 1.0; // mean level spacing D > 0

  void validate() const;
};

/// Spacing statistics of the generated spectrum.
enum class SpacingModel { picket, poisson, wigner };

/// Strictly increasing resonance energies for one spin class.
struct LevelSequence {
  SpinClass cls;
  std::vector<double> energies;

  double span() const { return energies.empty() ? 0.0 : energies.back() - energies.front(); }
};

/// Generate a level sequence. Deterministic for fixed (class, model, seed).
/// picket: exactly equispaced. poisson: exponential spacings. wigner:
/// spacings from p(s) = (pi s / 2) exp(-pi s^2 / 4), sampled by inverse CDF.
LevelSequence generate_levels(const SpinClass& cls, SpacingModel model, std::uint64_t seed);

/// All index pairs (mu, nu) with |E_mu - E_nu - r| <= window. Sorted by mu.
/// The default window used throughout the toolkit is 2.5 * D.
std::vector<std::pair<int, int>> pair_bins(const LevelSequence& a, const LevelSequence& b,
                                           double r, double window);

SpacingModel spacing_model_from_string(const std::string& name);
const char* to_string(SpacingModel model);

}  // namespace phasemem::levels
