#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace mfl {

/// Signed real stored as sign * exp(log_abs). The contraction constants span
/// magnitudes far below the smallest double (exp(-1e5) is common), so they
/// are carried in this form and only converted for display.
struct LogReal {
  int sign = 0;  // -1, 0, +1
  double log_abs = -std::numeric_limits<double>::infinity();

  static LogReal zero() { return {}; }
  static LogReal from_log(double log_abs, int sign = 1) { return {sign, log_abs}; }
  static LogReal from(double x) {
    if (x == 0.0) return {};
    return {x > 0 ? 1 : -1, std::log(std::fabs(x))};
  }

  /// May underflow to 0 or overflow to +-inf.
  double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
  double log10_abs() const { return log_abs / std::log(10.0); }
  bool positive() const { return sign > 0; }

  LogReal operator-() const { return {-sign, log_abs}; }

  friend LogReal operator*(LogReal a, LogReal b) {
    if (a.sign == 0 || b.sign == 0) return {};
    return {a.sign * b.sign, a.log_abs + b.log_abs};
  }
  friend LogReal operator/(LogReal a, LogReal b) {
    if (a.sign == 0) return {};
    return {a.sign * b.sign, a.log_abs - b.log_abs};
  }
  friend LogReal operator+(LogReal a, LogReal b) {
    if (a.sign == 0) return b;
    if (b.sign == 0) return a;
    if (a.log_abs < b.log_abs) std::swap(a, b);
    const double gap = b.log_abs - a.log_abs;  // <= 0
    if (a.sign == b.sign) return {a.sign, a.log_abs + std::log1p(std::exp(gap))};
    if (gap == 0.0) return {};
    return {a.sign, a.log_abs + std::log1p(-std::exp(gap))};
  }
  friend LogReal operator-(LogReal a, LogReal b) { return a + (-b); }

  friend bool operator<(LogReal a, LogReal b) {
    if (a.sign != b.sign) return a.sign < b.sign;
    if (a.sign == 0) return false;
    return a.sign > 0 ? a.log_abs < b.log_abs : a.log_abs > b.log_abs;
  }
  friend bool operator<=(LogReal a, LogReal b) { return !(b < a); }
  friend bool operator>=(LogReal a, LogReal b) { return !(a < b); }
  friend bool operator>(LogReal a, LogReal b) { return b < a; }
};

inline LogReal min(LogReal a, LogReal b) { return b < a ? b : a; }

}  // namespace mfl
