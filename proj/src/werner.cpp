#include "repchain/werner.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace repchain {

namespace {

constexpr double kRoundoff = 1e-12;

double decay_factor(double dt, double t_coh) {
  if (std::isinf(t_coh)) return 1.0;
  return std::exp(-dt / t_coh);
}

TimeStep time_apart(TimeStep a, TimeStep b) { return a > b ? a - b : b - a; }

void require_coherence_time(double t_coh) {
  if (!(t_coh > 0.0)) throw std::invalid_argument("coherence time must be positive");
}

}  // namespace

WernerParam::WernerParam(double w) : w_(w) {
  if (!(w >= 0.0 && w <= 1.0)) {
    std::ostringstream msg;
    msg << "Werner parameter " << w << " outside [0, 1]";
    throw std::domain_error(msg.str());
  }
}

WernerParam WernerParam::from_computed(double w) {
  if (w < 0.0 && w > -kRoundoff) return WernerParam(0.0);
  if (w > 1.0 && w < 1.0 + kRoundoff) return WernerParam(1.0);
  if (!(w >= 0.0 && w <= 1.0)) {
    std::ostringstream msg;
    msg << "computed Werner parameter " << w << " left [0, 1] beyond round-off";
    throw NumericalError(msg.str());
  }
  return WernerParam(w);
}

double fidelity_from_werner(WernerParam w) { return (1.0 + 3.0 * w.value()) / 4.0; }

WernerParam werner_from_fidelity(double fidelity) {
  if (!(fidelity >= 0.25 && fidelity <= 1.0)) {
    std::ostringstream msg;
    msg << "fidelity " << fidelity << " outside [1/4, 1]";
    throw std::domain_error(msg.str());
  }
  return WernerParam::from_computed((4.0 * fidelity - 1.0) / 3.0);
}

WernerParam decay(WernerParam w, double dt, double t_coh) {
  if (!(dt >= 0.0)) throw std::invalid_argument("decay time must be nonnegative");
  require_coherence_time(t_coh);
  return WernerParam(w.value() * decay_factor(dt, t_coh));
}

WernerParam swap_werner(WernerParam a, WernerParam b) { return WernerParam(a.value() * b.value()); }

TimeStep g_T(TimeStep t_a, TimeStep t_b) { return std::max(t_a, t_b); }

WernerParam g_W(const LinkSample& a, const LinkSample& b, double t_coh) {
  require_coherence_time(t_coh);
  const double wait = static_cast<double>(time_apart(a.t, b.t));
  return WernerParam(a.w.value() * b.w.value() * decay_factor(wait, t_coh));
}

LinkSample g(const LinkSample& a, const LinkSample& b, double t_coh) {
  return {g_T(a.t, b.t), g_W(a, b, t_coh)};
}

LinkSample g_with_comm_time(const LinkSample& a, const LinkSample& b, double t_coh, int level) {
  if (level < 0 || level > 62) throw std::invalid_argument("link level out of range");
  const TimeStep heralding = TimeStep{1} << level;
  const LinkSample swapped = g(a, b, t_coh);
  return {swapped.t + heralding,
          WernerParam(swapped.w.value() * decay_factor(static_cast<double>(heralding), t_coh))};
}

double p_dist(WernerParam a, WernerParam b) { return (1.0 + a.value() * b.value()) / 2.0; }

WernerParam w_dist(WernerParam a, WernerParam b) {
  const double wa = a.value();
  const double wb = b.value();
  return WernerParam::from_computed((1.0 + wa + wb + 5.0 * wa * wb) / (6.0 * p_dist(a, b)) - 1.0 / 3.0);
}

AlignedPair align_for_distillation(const LinkSample& a, const LinkSample& b, double t_coh) {
  require_coherence_time(t_coh);
  const double wait = static_cast<double>(time_apart(a.t, b.t));
  if (a.t <= b.t) return {decay(a.w, wait, t_coh), b.w};
  return {a.w, decay(b.w, wait, t_coh)};
}

LinkSample g_D(const LinkSample& a, const LinkSample& b, double t_coh) {
  const AlignedPair in = align_for_distillation(a, b, t_coh);
  return {g_T(a.t, b.t), w_dist(in.a, in.b)};
}

}  // namespace repchain
