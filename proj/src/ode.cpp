#include "orbctl/ode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "orbctl/error.hpp"

namespace orbctl {

namespace {

constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                 a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

class Stepper {
 public:
  Stepper(const OdeRhs& f, std::size_t n, const OdeOptions& opt, OdeStats& stats)
      : f_(f), n_(n), opt_(opt), stats_(stats), k1_(n), k2_(n), k3_(n), k4_(n), k5_(n), k6_(n), k7_(n),
        tmp_(n), y_new_(n), r1_(n), r2_(n), r3_(n), r4_(n), r5_(n) {}

  void eval(double t, const std::vector<double>& y, std::vector<double>& out) {
    f_(t, y, out);
    ++stats_.evaluations;
    for (double v : out)
      if (!std::isfinite(v)) fail(ErrorKind::Numerical, "integrator: right-hand side produced a non-finite value");
  }

  double error_scale(double yi, double yn) const { return opt_.atol + opt_.rtol * std::max(std::abs(yi), std::abs(yn)); }

  double initial_step(double t, const std::vector<double>& y, double span) {
    double dnf = 0.0, dny = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double sk = opt_.atol + opt_.rtol * std::abs(y[i]);
      dnf += (k1_[i] / sk) * (k1_[i] / sk);
      dny += (y[i] / sk) * (y[i] / sk);
    }
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
    h = std::min(h, std::min(opt_.max_step, span));
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y[i] + h * k1_[i];
    eval(t + h, tmp_, k2_);
    double der2 = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double sk = opt_.atol + opt_.rtol * std::abs(y[i]);
      der2 += ((k2_[i] - k1_[i]) / sk) * ((k2_[i] - k1_[i]) / sk);
    }
    der2 = std::sqrt(der2) / h;
    const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3) : std::pow(0.01 / der12, 0.2);
    return std::min({100.0 * h, h1, opt_.max_step, span});
  }

  /// Attempts one step of size h from (t, y). Returns the scaled error norm.
  double attempt(double t, const std::vector<double>& y, double h) {
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y[i] + h * a21 * k1_[i];
    eval(t + c2 * h, tmp_, k2_);
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
    eval(t + c3 * h, tmp_, k3_);
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y[i] + h * (a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]);
    eval(t + c4 * h, tmp_, k4_);
    for (std::size_t i = 0; i < n_; ++i)
      tmp_[i] = y[i] + h * (a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
    eval(t + c5 * h, tmp_, k5_);
    for (std::size_t i = 0; i < n_; ++i)
      tmp_[i] = y[i] + h * (a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] + a65 * k5_[i]);
    eval(t + h, tmp_, k6_);
    for (std::size_t i = 0; i < n_; ++i)
      y_new_[i] = y[i] + h * (a71 * k1_[i] + a73 * k3_[i] + a74 * k4_[i] + a75 * k5_[i] + a76 * k6_[i]);
    eval(t + h, y_new_, k7_);
    double err = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double e = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] + e7 * k7_[i]);
      const double sc = error_scale(y[i], y_new_[i]);
      err += (e / sc) * (e / sc);
    }
    return std::sqrt(err / static_cast<double>(n_));
  }

  void prepare_dense(const std::vector<double>& y, double h) {
    for (std::size_t i = 0; i < n_; ++i) {
      const double ydiff = y_new_[i] - y[i];
      const double bspl = h * k1_[i] - ydiff;
      r1_[i] = y[i];
      r2_[i] = ydiff;
      r3_[i] = bspl;
      r4_[i] = ydiff - h * k7_[i] - bspl;
      r5_[i] = h * (d1 * k1_[i] + d3 * k3_[i] + d4 * k4_[i] + d5 * k5_[i] + d6 * k6_[i] + d7 * k7_[i]);
    }
  }

  void dense(double theta, std::span<double> out) const {
    const double theta1 = 1.0 - theta;
    for (std::size_t i = 0; i < n_; ++i)
      out[i] = r1_[i] + theta * (r2_[i] + theta1 * (r3_[i] + theta * (r4_[i] + theta1 * r5_[i])));
  }

  std::vector<double>& k1() { return k1_; }
  std::vector<double>& k7() { return k7_; }
  std::vector<double>& y_new() { return y_new_; }

 private:
  const OdeRhs& f_;
  std::size_t n_;
  const OdeOptions& opt_;
  OdeStats& stats_;
  std::vector<double> k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, y_new_;
  std::vector<double> r1_, r2_, r3_, r4_, r5_;
};

}  // namespace

OdeSolution integrate_dopri5(const OdeRhs& f, std::span<const double> y0, std::span<const double> tgrid,
                             const OdeOptions& options) {
  if (!(options.rtol > 0.0) || !(options.atol > 0.0)) fail(ErrorKind::Input, "integrator: tolerances must be positive");
  if (tgrid.empty()) fail(ErrorKind::Input, "integrator: empty output grid");
  for (std::size_t i = 1; i < tgrid.size(); ++i)
    if (!(tgrid[i] > tgrid[i - 1])) fail(ErrorKind::Input, "integrator: output grid must be strictly increasing");
  const std::size_t n = y0.size();
  OdeSolution sol;
  sol.states = Matrix(tgrid.size(), n);
  for (std::size_t i = 0; i < n; ++i) sol.states(0, i) = y0[i];
  if (tgrid.size() == 1 || n == 0) return sol;

  Stepper st(f, n, options, sol.stats);
  std::vector<double> y(y0.begin(), y0.end());
  double t = tgrid.front();
  const double t_end = tgrid.back();
  st.eval(t, y, st.k1());
  double h = options.initial_step > 0.0 ? std::min(options.initial_step, t_end - t) : st.initial_step(t, y, t_end - t);
  std::size_t next_out = 1;
  bool last_rejected = false;
  std::vector<double> row(n);

  while (next_out < tgrid.size()) {
    if (sol.stats.accepted + sol.stats.rejected >= options.max_steps)
      fail(ErrorKind::Numerical, "integrator: step budget exhausted");
    if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
      std::ostringstream os;
      os << "integrator: step size underflow at t = " << t;
      fail(ErrorKind::Numerical, os.str());
    }
    const bool final_step = t + h * 1.0000001 >= t_end;
    if (final_step) h = t_end - t;
    const double err = st.attempt(t, y, h);
    if (!std::isfinite(err)) {
      h *= 0.2;
      ++sol.stats.rejected;
      last_rejected = true;
      continue;
    }
    if (err <= 1.0) {
      ++sol.stats.accepted;
      const double t_new = final_step ? t_end : t + h;
      st.prepare_dense(y, h);
      while (next_out < tgrid.size() && tgrid[next_out] <= t_new) {
        if (tgrid[next_out] == t_new) {
          for (std::size_t i = 0; i < n; ++i) sol.states(next_out, i) = st.y_new()[i];
        } else {
          st.dense((tgrid[next_out] - t) / h, row);
          for (std::size_t i = 0; i < n; ++i) sol.states(next_out, i) = row[i];
        }
        ++next_out;
      }
      y = st.y_new();
      std::swap(st.k1(), st.k7());
      t = t_new;
      double fac = err == 0.0 ? 10.0 : 0.9 * std::pow(err, -0.2);
      fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 10.0);
      h = std::min(h * fac, options.max_step);
      last_rejected = false;
    } else {
      ++sol.stats.rejected;
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      last_rejected = true;
    }
  }
  return sol;
}

}  // namespace orbctl
