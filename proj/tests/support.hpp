#pragma once

// Shared fixtures and closed-form oracles for the example system
//   eta = exp(xi1 t), gamma = xi2 + xi3 sin(xi4 t).
// Oracles are plain double arithmetic and never go through the expression
// kernel.

#include <cmath>
#include <filesystem>
#include <string>

#include "lyacanon/cascade.hpp"
#include "lyacanon/sysdef.hpp"

namespace testing {

inline std::filesystem::path data_file(const std::string& name) {
  return std::filesystem::path(LYACANON_TEST_DATA) / name;
}

inline std::filesystem::path example_file() { return LYACANON_EXAMPLE_FILE; }

struct Xi {
  double x1 = 1, x2 = 2, x3 = 1, x4 = 1;
};

inline double eta(double t, const Xi& p) { return std::exp(p.x1 * t); }
inline double deta(double t, const Xi& p) { return p.x1 * std::exp(p.x1 * t); }
inline double gamma(double t, const Xi& p) { return p.x2 + p.x3 * std::sin(p.x4 * t); }
inline double dgamma(double t, const Xi& p) { return p.x3 * p.x4 * std::cos(p.x4 * t); }

/// Original right-hand side.
inline void rhs(double t, double x1, double x2, const Xi& p, double& f1, double& f2) {
  const double e = eta(t, p), de = deta(t, p), g = gamma(t, p), dg = dgamma(t, p);
  f1 = (-de * (2 * x1 * x2 - x2 * x2) + de * g + dg * e) / (2 * e * x2);
  f2 = (dg * e - de * (x2 * x2 - g)) / (2 * e * x2);
}

inline double g1(double t, double x1, double x2, const Xi& p) { return (x1 - x2) * eta(t, p); }
inline double g2(double t, double x1, double x2, const Xi& p) {
  return (x2 * x2 - gamma(t, p)) / (x1 - x2);
}

/// General solution x(t; c).
inline void closed_form(double t, double c1, double c2, const Xi& p, double& x1, double& x2) {
  const double root = std::sqrt(c1 * c2 / eta(t, p) + gamma(t, p));
  x1 = c1 / eta(t, p) + root;
  x2 = root;
}

/// Square root shared by the second stage and the forward map.
inline double stage_root(double t, double y1, double c1, double c2, const Xi& p) {
  return std::sqrt(gamma(t, p) + c2 * (y1 + c1 / eta(t, p)));
}

/// x = forward(t, y).
inline void forward(double t, double y1, double y2, double c1, double c2, const Xi& p, double& x1,
                    double& x2) {
  const double s = stage_root(t, y1, c1, c2, p);
  x1 = y1 + y2 + c1 / eta(t, p) + s;
  x2 = y2 + s;
}

/// Canonical right-hand side by the chain rule through the forward map:
///   y1 = x1 - x2 - c1/eta,  y2 = x2 - S(t, y1).
inline void canonical_rhs(double t, double y1, double y2, double c1, double c2, const Xi& p,
                          double& f1, double& f2) {
  double x1, x2, fx1, fx2;
  forward(t, y1, y2, c1, c2, p, x1, x2);
  rhs(t, x1, x2, p, fx1, fx2);
  const double e = eta(t, p);
  f1 = fx1 - fx2 + c1 * deta(t, p) / (e * e);
  const double s = stage_root(t, y1, c1, c2, p);
  const double ds_dt = (dgamma(t, p) - c2 * c1 * deta(t, p) / (e * e)) / (2 * s);
  const double ds_dy1 = c2 / (2 * s);
  f2 = fx2 - ds_dt - ds_dy1 * f1;
}

/// Printed criterion for d f2 / d y2 on {y2 = 0} at xi = (1, 2, 1, 1).
inline double printed_criterion(double t, double y1, double c1, double c2) {
  return -0.5 * (1 + (2 + std::sin(t) + std::cos(t)) / (2 + std::sin(t) + c2 * (y1 + c1 * std::exp(-t))));
}

inline const lyacanon::CanonicalSystem& example_canonical() {
  static const lyacanon::CanonicalSystem cs = lyacanon::build_canonical(lyacanon::bundled_example());
  return cs;
}

}  // namespace testing
