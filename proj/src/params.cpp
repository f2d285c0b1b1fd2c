#include "repchain/params.hpp"

#include <sstream>
#include <stdexcept>
#include <string>

namespace repchain {

namespace {

void fail(const std::string& field, const std::string& requirement, double value) {
  std::ostringstream msg;
  msg << field << " must be " << requirement << ", got " << value;
  throw std::invalid_argument(msg.str());
}

}  // namespace

void ProtocolParams::validate() const {
  if (!(p_gen > 0.0 && p_gen <= 1.0)) fail("p_gen", "in (0, 1]", p_gen);
  if (!(p_swap > 0.0 && p_swap <= 1.0)) fail("p_swap", "in (0, 1]", p_swap);
  if (!(w0 >= 0.0 && w0 <= 1.0)) fail("w0", "in [0, 1]", w0);
  if (!(t_coh > 0.0)) fail("t_coh", "positive (or infinite)", t_coh);
  // 2^n must stay representable alongside the time axis.
  if (n < 0 || n > 40) fail("n", "in [0, 40]", n);
  if (d < 0 || d > 20) fail("d", "in [0, 20]", d);
  if (t_trunc < 0) fail("t_trunc", "nonnegative", static_cast<double>(t_trunc));
}

int nesting_level_from_segments(TimeStep segments) {
  if (segments < 1 || (segments & (segments - 1)) != 0) {
    std::ostringstream msg;
    msg << "segment count " << segments
        << " is not a power of two; the nested protocol needs N = 2^n segments";
    throw std::invalid_argument(msg.str());
  }
  int n = 0;
  while ((TimeStep{1} << n) < segments) ++n;
  return n;
}

}  // namespace repchain
