#pragma once

#include <cmath>
#include <cstdint>

#include <boost/multiprecision/cpp_int.hpp>

namespace csgm {

// Exact arithmetic for flow ratios and threshold comparisons. Integer-cent
// amounts divided along paths stay exactly representable, so two independent
// computations of the same flow agree bit-for-bit.
using Rational = boost::multiprecision::cpp_rational;

// Thresholds arrive as doubles from CLI flags; they are interpreted at
// nano-unit precision so that e.g. 0.4 means exactly 2/5 rather than the
// nearest binary double.
inline Rational decimal_rational(double x) {
  const auto nanos = static_cast<std::int64_t>(std::llround(x * 1e9));
  return Rational(nanos, 1000000000LL);
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace csgm
