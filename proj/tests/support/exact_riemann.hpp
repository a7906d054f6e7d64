#pragma once

// Self-contained exact solver for the 1D polytropic Riemann problem,
// independent of the library under test. Star-region pressure via Newton
// iteration on the two-shock/two-rarefaction pressure function; similarity
// sampling covers shocks, contacts and rarefaction fans.

#include <cmath>
#include <stdexcept>

namespace oracle {

struct Side {
  double rho;
  double u;
  double p;
};

class ExactRiemann {
 public:
  ExactRiemann(const Side& left, const Side& right, double gamma)
      : L_(left), R_(right), g_(gamma) {
    cl_ = std::sqrt(g_ * L_.p / L_.rho);
    cr_ = std::sqrt(g_ * R_.p / R_.rho);
    if (2.0 / (g_ - 1.0) * (cl_ + cr_) <= R_.u - L_.u)
      throw std::domain_error("exact riemann: vacuum-generating data");
    solve_pstar();
  }

  double p_star() const { return pstar_; }
  double u_star() const { return ustar_; }

  double rho_star_left() const { return rho_behind(L_, cl_); }
  double rho_star_right() const { return rho_behind(R_, cr_); }

  // State at similarity coordinate xi = (x - x_split) / t.
  Side sample(double xi) const {
    if (xi <= ustar_) return sample_side(L_, cl_, -1.0, xi);
    return sample_side(R_, cr_, +1.0, xi);
  }

 private:
  double rho_behind(const Side& s, double) const {
    const double r = pstar_ / s.p;
    const double b = (g_ - 1.0) / (g_ + 1.0);
    if (pstar_ > s.p) return s.rho * (r + b) / (b * r + 1.0);
    return s.rho * std::pow(r, 1.0 / g_);
  }

  // f_K(p) and its derivative (Toro-style branch functions).
  static void branch(const Side& s, double c, double g, double p, double& f, double& df) {
    if (p > s.p) {
      const double A = 2.0 / ((g + 1.0) * s.rho);
      const double B = (g - 1.0) / (g + 1.0) * s.p;
      const double q = std::sqrt(A / (p + B));
      f = (p - s.p) * q;
      df = q * (1.0 - 0.5 * (p - s.p) / (B + p));
    } else {
      const double e = 0.5 * (g - 1.0) / g;
      f = 2.0 * c / (g - 1.0) * (std::pow(p / s.p, e) - 1.0);
      df = std::pow(p / s.p, -0.5 * (g + 1.0) / g) / (s.rho * c);
    }
  }

  void solve_pstar() {
    // Primitive-variable initial guess, floored away from zero.
    double p = 0.5 * (L_.p + R_.p) -
               0.125 * (R_.u - L_.u) * (L_.rho + R_.rho) * (cl_ + cr_);
    p = std::max(p, 1e-8 * std::min(L_.p, R_.p));
    for (int it = 0; it < 200; ++it) {
      double fl, dfl, fr, dfr;
      branch(L_, cl_, g_, p, fl, dfl);
      branch(R_, cr_, g_, p, fr, dfr);
      const double f = fl + fr + (R_.u - L_.u);
      const double step = f / (dfl + dfr);
      double pn = p - step;
      if (pn <= 0.0) pn = 0.5 * p;
      if (std::abs(pn - p) <= 1e-15 * pn) {
        p = pn;
        break;
      }
      p = pn;
    }
    pstar_ = p;
    double fl, dfl, fr, dfr;
    branch(L_, cl_, g_, p, fl, dfl);
    branch(R_, cr_, g_, p, fr, dfr);
    ustar_ = 0.5 * (L_.u + R_.u) + 0.5 * (fr - fl);
  }

  // sign = -1 for the left family, +1 for the right.
  Side sample_side(const Side& s, double c, double sign, double xi) const {
    const double b = (g_ - 1.0) / (g_ + 1.0);
    const double r = pstar_ / s.p;
    if (pstar_ > s.p) {
      // Shock: speed from the Rankine-Hugoniot mass flux.
      const double sp = s.u + sign * c * std::sqrt(0.5 * (g_ + 1.0) / g_ * r +
                                                   0.5 * (g_ - 1.0) / g_);
      const bool outside = sign < 0 ? (xi < sp) : (xi > sp);
      if (outside) return s;
      return {s.rho * (r + b) / (b * r + 1.0), ustar_, pstar_};
    }
    // Rarefaction: head moves at u -+ c, tail at u* -+ c*.
    const double cstar = c * std::pow(r, 0.5 * (g_ - 1.0) / g_);
    const double head = s.u + sign * c;
    const double tail = ustar_ + sign * cstar;
    const bool outside = sign < 0 ? (xi < head) : (xi > tail);
    const bool inside = sign < 0 ? (xi > tail) : (xi < head);
    if (outside) return s;
    if (inside) return {s.rho * std::pow(r, 1.0 / g_), ustar_, pstar_};
    const double cf = 2.0 / (g_ + 1.0) * (c - sign * 0.5 * (g_ - 1.0) * (s.u - xi));
    const double uf = 2.0 / (g_ + 1.0) * (-sign * c + 0.5 * (g_ - 1.0) * s.u + xi);
    return {s.rho * std::pow(cf / c, 2.0 / (g_ - 1.0)), uf,
            s.p * std::pow(cf / c, 2.0 * g_ / (g_ - 1.0))};
  }

  Side L_, R_;
  double g_, cl_, cr_;
  double pstar_ = 0.0, ustar_ = 0.0;
};

}  // namespace oracle
