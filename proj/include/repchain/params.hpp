#pragma once

#include "repchain/pmf.hpp"
#include "repchain/werner.hpp"

namespace repchain {

/// Parameters of a 2^n-segment repeater chain running SWAP-ONLY (d = 0) or
/// d-DIST-SWAP.
struct ProtocolParams {
  double p_gen = 1.0;
  double p_swap = 1.0;
  double w0 = 1.0;
  /// Joint memory coherence time in units of L0/c; infinity disables decay.
  double t_coh = kNoDecoherence;
  /// Nesting level; the chain has 2^n segments.
  int n = 0;
  /// Distillation rounds before every swap.
  int d = 0;
  bool include_comm_time = false;
  TimeStep t_trunc = 1;

  /// Throws std::invalid_argument naming the first out-of-range field.
  void validate() const;

  WernerParam initial_werner() const { return WernerParam(w0); }
  TimeStep segments() const { return TimeStep{1} << n; }
};

/// Nesting level for a power-of-two segment count; rejects anything else.
int nesting_level_from_segments(TimeStep segments);

}  // namespace repchain
