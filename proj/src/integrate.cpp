#include <algorithm>
#include <cmath>
#include <sstream>

#include "lyacanon/program.hpp"
#include "lyacanon/sim.hpp"

namespace lyacanon {

namespace {

// Dormand-Prince 5(4) tableau with the dense-output coefficients of Hairer,
// Norsett and Wanner.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

using Vec = std::vector<double>;

class Rhs {
 public:
  explicit Rhs(const OdeProblem& p) : n_(p.states.size()) {
    if (p.rhs.size() != n_) throw DimensionError("integrate: rhs and state counts differ");
    if (p.context_names.size() != p.context_values.size()) {
      throw DimensionError("integrate: context names and values differ in length");
    }
    std::vector<std::string> slots{std::string(kTimeVar)};
    slots.insert(slots.end(), p.states.begin(), p.states.end());
    slots.insert(slots.end(), p.context_names.begin(), p.context_names.end());
    std::vector<Expr> roots = p.rhs;
    roots.insert(roots.end(), p.guards.begin(), p.guards.end());
    prog_ = Program(roots, slots);
    in_.assign(slots.size(), 0.0);
    std::copy(p.context_values.begin(), p.context_values.end(), in_.begin() + 1 + n_);
    out_.assign(roots.size(), 0.0);
  }

  /// False when the point is outside the domain.
  bool operator()(double t, const Vec& x, Vec& dx) {
    in_[0] = t;
    std::copy(x.begin(), x.end(), in_.begin() + 1);
    if (!prog_.try_eval(in_, out_)) return false;
    for (std::size_t k = n_; k < out_.size(); ++k) {
      if (!(out_[k] > 0)) return false;
    }
    std::copy(out_.begin(), out_.begin() + n_, dx.begin());
    return true;
  }

  /// Throws the evaluation error, for diagnostics at the initial point.
  void explain(double t, const Vec& x) {
    in_[0] = t;
    std::copy(x.begin(), x.end(), in_.begin() + 1);
    prog_.eval(in_, out_);
    for (std::size_t k = n_; k < out_.size(); ++k) {
      if (!(out_[k] > 0)) throw DomainError("initial state violates domain guard " +
                                            std::to_string(k - n_ + 1));
    }
  }

 private:
  std::size_t n_;
  Program prog_;
  Vec in_;
  Vec out_;
};

std::string describe(double t, const Vec& x) {
  std::ostringstream os;
  os.precision(12);
  os << "t=" << t << ", state=(";
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

double error_norm(const Vec& err, const Vec& y0, const Vec& y1, double rtol, double atol) {
  double acc = 0.0;
  for (std::size_t i = 0; i < err.size(); ++i) {
    const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = err[i] / sc;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(std::max<std::size_t>(err.size(), 1)));
}

}  // namespace

Trajectory integrate(const OdeProblem& problem, double t0, double tf, const StatePoint& x0,
                     const IntegrateOptions& options) {
  const std::size_t n = problem.states.size();
  if (x0.size() != n) throw DimensionError("integrate: initial state has wrong length");
  if (!(tf > t0)) throw Error("integrate: tf must exceed t0");
  if (!(options.rel_tol > 0) || !(options.abs_tol > 0)) {
    throw Error("integrate: tolerances must be positive");
  }
  std::vector<double> samples = options.sample_times;
  if (samples.empty()) samples = linspace(t0, tf, kDefaultSamples);
  for (double s : samples) {
    if (s < t0 || s > tf) throw Error("integrate: sample time outside [t0, tf]");
  }
  std::sort(samples.begin(), samples.end());

  Rhs f(problem);
  const double rtol = options.rel_tol;
  const double atol = options.abs_tol;

  Trajectory tr;
  tr.times.reserve(samples.size());
  tr.states.reserve(samples.size());

  Vec y = x0, k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
  if (!f(t0, y, k1)) {
    f.explain(t0, y);
    throw DomainError("initial state is outside the domain: " + describe(t0, y));
  }

  // Initial step: Hairer's heuristic from the size of y and f.
  double h;
  {
    double dy = 0.0, df = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sc = atol + rtol * std::abs(y[i]);
      dy += (y[i] / sc) * (y[i] / sc);
      df += (k1[i] / sc) * (k1[i] / sc);
    }
    dy = std::sqrt(dy / std::max<double>(n, 1));
    df = std::sqrt(df / std::max<double>(n, 1));
    h = (dy < 1e-5 || df < 1e-5) ? 1e-6 : 0.01 * dy / df;
    h = std::min(h, tf - t0);
  }

  double t = t0;
  std::size_t next = 0;
  auto emit_exact = [&](double time, const Vec& state) {
    while (next < samples.size() && samples[next] == time) {
      tr.times.push_back(samples[next]);
      tr.states.push_back(state);
      ++next;
    }
  };
  emit_exact(t0, y);
  tr.step_times.push_back(t0);
  tr.step_states.push_back(y);

  std::size_t steps = 0;
  while (t < tf) {
    if (++steps > options.max_steps) {
      throw IntegrationError("maximum step count exceeded at " + describe(t, y));
    }
    const double h_min = 1e-14 * std::max(1.0, std::abs(t));
    if (h < h_min) {
      throw IntegrationError("step size underflow (domain boundary?) at " + describe(t, y));
    }
    bool last = false;
    if (t + h >= tf) {
      h = tf - t;
      last = true;
    }

    bool ok = true;
    auto stage = [&](double tt, Vec& k) { ok = ok && f(tt, ytmp, k); };
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
    stage(t + c2 * h, k2);
    if (ok) {
      for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
      stage(t + c3 * h, k3);
    }
    if (ok) {
      for (std::size_t i = 0; i < n; ++i) {
        ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
      }
      stage(t + c4 * h, k4);
    }
    if (ok) {
      for (std::size_t i = 0; i < n; ++i) {
        ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
      }
      stage(t + c5 * h, k5);
    }
    if (ok) {
      for (std::size_t i = 0; i < n; ++i) {
        ytmp[i] =
            y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
      }
      stage(t + h, k6);
    }
    if (ok) {
      for (std::size_t i = 0; i < n; ++i) {
        ynew[i] =
            y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
      }
      ytmp = ynew;
      stage(t + h, k7);
    }
    if (!ok) {
      ++tr.rejected;
      h *= 0.25;
      continue;
    }

    for (std::size_t i = 0; i < n; ++i) {
      err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    }
    const double en = error_norm(err, y, ynew, rtol, atol);
    if (!std::isfinite(en)) {
      ++tr.rejected;
      h *= 0.25;
      continue;
    }
    if (en > 1.0) {
      ++tr.rejected;
      h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
      continue;
    }

    // Accepted: dense output for every sample inside (t, t + h].
    const double t_new = last ? tf : t + h;
    Vec r5(n), bspl(n), ydiff(n);
    for (std::size_t i = 0; i < n; ++i) {
      ydiff[i] = ynew[i] - y[i];
      bspl[i] = h * k1[i] - ydiff[i];
      r5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
    }
    while (next < samples.size() && samples[next] <= t_new) {
      const double ts = samples[next];
      Vec ys(n);
      if (ts == t_new) {
        ys = ynew;
      } else {
        const double th = (ts - t) / h;
        const double th1 = 1.0 - th;
        for (std::size_t i = 0; i < n; ++i) {
          ys[i] = y[i] + th * (ydiff[i] +
                               th1 * (bspl[i] + th * ((ydiff[i] - h * k7[i] - bspl[i]) +
                                                      th1 * r5[i])));
        }
      }
      tr.times.push_back(ts);
      tr.states.push_back(std::move(ys));
      ++next;
    }

    ++tr.accepted;
    t = t_new;
    y = ynew;
    k1 = k7;
    tr.step_times.push_back(t);
    tr.step_states.push_back(y);
    const double fac = en == 0.0 ? 10.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 10.0);
    h *= fac;
  }
  return tr;
}

}  // namespace lyacanon
