#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace eulab {

/// Extended nonnegative real: a finite value or the distinguished INFINITE.
/// Arithmetic saturates at INFINITE and never traps.
class ExtendedValue {
 public:
  ExtendedValue() : v_(0.0) {}
  explicit ExtendedValue(double v) : v_(v) {}

  static ExtendedValue infinite() {
    return ExtendedValue(std::numeric_limits<double>::infinity());
  }

  bool is_infinite() const { return std::isinf(v_); }
  bool is_finite() const { return !std::isinf(v_); }

  /// Raw value; +inf when INFINITE.
  double value() const { return v_; }

  /// Finite value accessor; throws if INFINITE.
  double finite_value() const {
    if (is_infinite()) throw std::domain_error("ExtendedValue: value is INFINITE");
    return v_;
  }

  ExtendedValue operator+(const ExtendedValue& o) const {
    if (is_infinite() || o.is_infinite()) return infinite();
    return ExtendedValue(v_ + o.v_);
  }
  ExtendedValue& operator+=(const ExtendedValue& o) {
    *this = *this + o;
    return *this;
  }

  /// Add a finite real; INFINITE absorbs.
  ExtendedValue plus_finite(double d) const {
    if (is_infinite()) return infinite();
    return ExtendedValue(v_ + d);
  }

  /// Subtract a finite real; INFINITE absorbs.
  ExtendedValue minus_finite(double d) const {
    if (is_infinite()) return infinite();
    return ExtendedValue(v_ - d);
  }

  /// Scale by a nonnegative factor. 0 * INFINITE is taken as INFINITE
  /// (the l.s.c. convention: scaling cannot recover finiteness).
  ExtendedValue scaled(double c) const {
    if (c < 0.0) throw std::domain_error("ExtendedValue: negative scale");
    if (is_infinite()) return infinite();
    return ExtendedValue(c * v_);
  }

  bool operator==(const ExtendedValue& o) const { return v_ == o.v_; }
  bool operator<(const ExtendedValue& o) const { return v_ < o.v_; }
  bool operator<=(const ExtendedValue& o) const { return v_ <= o.v_; }

 private:
  double v_;
};

}  // namespace eulab
