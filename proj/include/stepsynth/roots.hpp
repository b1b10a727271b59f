#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>

#include <boost/math/tools/toms748_solve.hpp>

#include "stepsynth/errors.hpp"

namespace stepsynth {

// Root of f in [lo, hi] by TOMS 748; f(lo) and f(hi) must not share a sign.
template <class F>
double bracket_root(const F& f, double lo, double hi, const std::string& what = "root") {
  const double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (!std::isfinite(flo) || !std::isfinite(fhi) || (flo > 0) == (fhi > 0)) {
    throw RootBracketFailure(what + ": no sign change on [" + std::to_string(lo) + ", " +
                             std::to_string(hi) + "]");
  }
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(
      f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(52), iters);
  const double a = r.first, b = r.second;
  return std::abs(f(a)) <= std::abs(f(b)) ? a : b;
}

}  // namespace stepsynth
