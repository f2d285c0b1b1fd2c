#pragma once

// State-update rules for Werner states: fidelity conversion, memory decay,
// entanglement swap, recurrence distillation, and the per-attempt link
// combiners used by both engines.

#include <limits>

#include "repchain/pmf.hpp"

namespace repchain {

/// Coherence time meaning "memories never decohere".
inline constexpr double kNoDecoherence = std::numeric_limits<double>::infinity();

/// Werner parameter w of rho(w) = w |Phi+><Phi+| + (1 - w) I/4, in [0, 1].
class WernerParam {
 public:
  constexpr WernerParam() = default;
  /// Throws std::domain_error outside [0, 1].
  explicit WernerParam(double w);

  /// Accepts values that left [0, 1] by at most 1e-12 of round-off and
  /// clamps them; larger excursions throw NumericalError.
  static WernerParam from_computed(double w);

  constexpr double value() const { return w_; }

  friend constexpr bool operator==(WernerParam, WernerParam) = default;

 private:
  double w_ = 0.0;
};

/// A delivered link: delivery time and Werner parameter at that time.
struct LinkSample {
  TimeStep t = 0;
  WernerParam w;

  friend constexpr bool operator==(const LinkSample&, const LinkSample&) = default;
};

/// (1 + 3w) / 4.
double fidelity_from_werner(WernerParam w);
/// (4F - 1) / 3; requires F in [1/4, 1].
WernerParam werner_from_fidelity(double fidelity);

/// w exp(-dt / t_coh). Requires dt >= 0 and t_coh > 0 (infinity allowed).
WernerParam decay(WernerParam w, double dt, double t_coh);

/// Werner parameter after a successful swap of two Werner states.
WernerParam swap_werner(WernerParam a, WernerParam b);

/// Both links are needed, so the combined link is ready at the later time.
TimeStep g_T(TimeStep t_a, TimeStep t_b);

/// Swap output where the earlier link decays while waiting for the later one.
WernerParam g_W(const LinkSample& a, const LinkSample& b, double t_coh);

LinkSample g(const LinkSample& a, const LinkSample& b, double t_coh);

/// Swap of two links each spanning 2^level hops, including the 2^level steps
/// of heralding during which the output decays.
LinkSample g_with_comm_time(const LinkSample& a, const LinkSample& b, double t_coh, int level);

/// Success probability of recurrence distillation, (1 + wA wB) / 2.
double p_dist(WernerParam a, WernerParam b);

/// Output Werner parameter of a successful distillation attempt.
WernerParam w_dist(WernerParam a, WernerParam b);

/// Inputs as they enter distillation at the later delivery time: the
/// earlier link has decayed by |tA - tB|. On a tie neither decays.
struct AlignedPair {
  WernerParam a;
  WernerParam b;
};
AlignedPair align_for_distillation(const LinkSample& a, const LinkSample& b, double t_coh);

/// Distillation counterpart of g(): later delivery time, distilled output
/// of the time-aligned inputs.
LinkSample g_D(const LinkSample& a, const LinkSample& b, double t_coh);

}  // namespace repchain
