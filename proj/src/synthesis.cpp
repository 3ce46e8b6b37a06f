#include "orbctl/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "orbctl/error.hpp"

namespace orbctl {

namespace {

constexpr int kMaxNewtonIterations = 50;

double symmetry_gap(const Matrix& m) { return (m - m.transpose()).max_abs(); }

double min_eigenvalue(const Matrix& sym) { return symmetric_eigen(symmetrize(sym)).values.front(); }

bool is_hurwitz(const Matrix& a) {
  return eigenvalues(a).abscissa() < -1e-9 * std::max(1.0, a.norm_inf());
}

Matrix input_weighting(const Matrix& b, const Matrix& r) {
  return symmetrize(b * solve_linear(r, b.transpose()));
}

Matrix sub_matrix(const Matrix& m, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
  Matrix out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
  return out;
}

/// Real coefficients c of s^k + c[1] s^{k-1} + ... + c[k] with the given roots.
std::vector<double> monic_polynomial(std::span<const std::complex<double>> roots) {
  std::vector<std::complex<double>> c{1.0};
  for (const auto& root : roots) {
    c.push_back(0.0);
    for (std::size_t i = c.size() - 1; i > 0; --i) c[i] -= root * c[i - 1];
  }
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
  return out;
}

/// Single-input Ackermann formula.
Matrix ackermann(const Matrix& a, const Matrix& b, std::span<const std::complex<double>> poles) {
  const std::size_t k = a.rows();
  Matrix ctrb = controllability_matrix(StateSpace(a, b, Matrix(0, k)));
  if (rank(ctrb) < k) fail(ErrorKind::Synthesis, "pole placement: uncontrollable channel");
  const auto coeffs = monic_polynomial(poles);
  Matrix phi = Matrix::identity(k) * coeffs[k];
  Matrix power = Matrix::identity(k);
  for (std::size_t i = 1; i <= k; ++i) {
    power = power * a;
    phi += power * coeffs[k - i];
  }
  Matrix last_row(1, k);
  last_row(0, k - 1) = 1.0;
  return last_row * solve_linear(ctrb, phi);
}

bool conjugate_match(const std::complex<double>& a, const std::complex<double>& b) {
  return std::abs(a - std::conj(b)) <= 1e-12 * std::max(1.0, std::abs(a));
}

/// Splits the desired set into real poles and conjugate pairs, in given order.
std::vector<std::vector<std::complex<double>>> pole_units(std::span<const std::complex<double>> desired) {
  std::vector<bool> used(desired.size(), false);
  std::vector<std::vector<std::complex<double>>> units;
  for (std::size_t i = 0; i < desired.size(); ++i) {
    if (used[i]) continue;
    const auto& p = desired[i];
    if (!std::isfinite(p.real()) || !std::isfinite(p.imag()))
      fail(ErrorKind::Input, "pole placement: non-finite desired pole");
    used[i] = true;
    if (std::abs(p.imag()) <= 1e-12 * std::max(1.0, std::abs(p))) {
      units.push_back({{p.real(), 0.0}});
      continue;
    }
    bool paired = false;
    for (std::size_t j = i + 1; j < desired.size(); ++j) {
      if (!used[j] && conjugate_match(p, desired[j])) {
        used[j] = true;
        units.push_back({p, std::conj(p)});
        paired = true;
        break;
      }
    }
    if (!paired) fail(ErrorKind::Input, "pole placement: desired poles are not closed under conjugation");
  }
  return units;
}

/// Gain from the Bass method, for systems that do not split into
/// single-input channels: K = Bᵀ Z⁻¹ with (A + βI) Z + Z (A + βI)ᵀ = 2BBᵀ.
Matrix bass_gain(const Matrix& a, const Matrix& b) {
  const std::size_t n = a.rows();
  const double beta = 1.0 + a.norm_inf();
  const Matrix shifted = a + Matrix::identity(n) * beta;
  Matrix z;
  try {
    z = solve_lyapunov(-1.0 * shifted.transpose(), 2.0 * (b * b.transpose()));
    return b.transpose() * inverse(z);
  } catch (const Error&) {
    fail(ErrorKind::Synthesis, "stabilizing seed: pair (A, B) is not controllable");
  }
}

/// Initial stabilizing gain for Newton–Kleinman.
Matrix stabilizing_seed(const Matrix& a, const Matrix& b) {
  const std::size_t n = a.rows(), m = b.cols();
  if (is_hurwitz(a)) return Matrix(m, n);
  const auto channels = decompose_channels(a, b);
  const bool single_input = std::all_of(channels.begin(), channels.end(),
                                        [](const Channel& ch) { return ch.inputs.size() <= 1; });
  if (!single_input) return bass_gain(a, b);
  Matrix k(m, n);
  for (const auto& ch : channels) {
    if (ch.states.empty()) continue;
    const Matrix sub_a = sub_matrix(a, ch.states, ch.states);
    if (ch.inputs.empty()) {
      if (is_hurwitz(sub_a)) continue;
      fail(ErrorKind::Synthesis, "stabilizing seed: unstable states receive no input (not stabilizable)");
    }
    const std::vector<std::complex<double>> poles(ch.states.size(), {-1.0, 0.0});
    const Matrix sub_k = ackermann(sub_a, sub_matrix(b, ch.states, ch.inputs), poles);
    for (std::size_t j = 0; j < ch.states.size(); ++j) k(ch.inputs[0], ch.states[j]) = sub_k(0, j);
  }
  return k;
}

}  // namespace

void Weights::validate(std::size_t states, std::size_t inputs) const {
  if (q.rows() != states || q.cols() != states) fail(ErrorKind::Input, "weights: Q must be n x n");
  if (r.rows() != inputs || r.cols() != inputs) fail(ErrorKind::Input, "weights: R must be m x m");
  if (symmetry_gap(q) > 1e-12 * std::max(1.0, q.max_abs())) fail(ErrorKind::Input, "weights: Q not symmetric");
  if (symmetry_gap(r) > 1e-12 * std::max(1.0, r.max_abs())) fail(ErrorKind::Input, "weights: R not symmetric");
  if (states > 0 && min_eigenvalue(q) < -1e-12 * std::max(1.0, q.max_abs()))
    fail(ErrorKind::Input, "weights: Q must be positive semidefinite");
  if (inputs > 0 && min_eigenvalue(r) <= 0.0) fail(ErrorKind::Input, "weights: R must be positive definite");
}

double care_residual(const Matrix& a, const Matrix& b, const Weights& w, const Matrix& p) {
  const Matrix s = input_weighting(b, w.r);
  return (a.transpose() * p + p * a - p * s * p + w.q).norm_inf();
}

Matrix solve_care(const Matrix& a, const Matrix& b, const Weights& w) {
  if (!a.is_square() || b.rows() != a.rows()) fail(ErrorKind::Dimension, "solve_care: A, B shapes disagree");
  w.validate(a.rows(), b.cols());
  Matrix k = stabilizing_seed(a, b);
  Matrix p;
  bool converged = false;
  for (int it = 0; it < kMaxNewtonIterations; ++it) {
    const Matrix closed = a - b * k;
    if (!is_hurwitz(closed)) fail(ErrorKind::Numerical, "solve_care: Newton iterate lost stability");
    const Matrix next = solve_lyapunov(closed, w.q + k.transpose() * w.r * k);
    const bool first = p.empty();
    const double gap = first ? INFINITY : (next - p).max_abs();
    p = next;
    k = solve_linear(w.r, b.transpose() * p);
    if (!first && gap <= 1e-12 * std::max(1.0, p.max_abs())) {
      converged = true;
      break;
    }
  }
  const double residual = care_residual(a, b, w, p);
  if (!converged && residual > 1e-8 * std::max(1.0, w.q.norm_inf()))
    fail(ErrorKind::Numerical, "solve_care: Newton-Kleinman did not converge");
  if (residual > 1e-8 * std::max(1.0, w.q.norm_inf())) {
    std::ostringstream os;
    os << "solve_care: residual " << residual << " above tolerance";
    fail(ErrorKind::Numerical, os.str());
  }
  return p;
}

SynthesisResult lqr_gain(const Matrix& a, const Matrix& b, const Weights& w) {
  SynthesisResult out;
  out.p = solve_care(a, b, w);
  out.k = solve_linear(w.r, b.transpose() * out.p);
  out.closed_loop_spectrum = eigenvalues(a - b * out.k);
  return out;
}

std::vector<Channel> decompose_channels(const Matrix& a, const Matrix& b) {
  const std::size_t n = a.rows(), m = b.cols();
  std::vector<std::size_t> parent(n + m);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](std::size_t x, std::size_t y) {
    x = find(x);
    y = find(y);
    if (x != y) parent[std::max(x, y)] = std::min(x, y);
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (a(i, j) != 0.0) unite(i, j);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (b(i, j) != 0.0) unite(i, n + j);

  std::vector<Channel> channels;
  std::vector<std::size_t> root_of_channel;
  for (std::size_t node = 0; node < n + m; ++node) {
    const std::size_t root = find(node);
    auto it = std::find(root_of_channel.begin(), root_of_channel.end(), root);
    std::size_t idx = static_cast<std::size_t>(it - root_of_channel.begin());
    if (it == root_of_channel.end()) {
      root_of_channel.push_back(root);
      channels.emplace_back();
    }
    if (node < n)
      channels[idx].states.push_back(node);
    else
      channels[idx].inputs.push_back(node - n);
  }
  return channels;
}

Matrix place_poles(const Matrix& a, const Matrix& b, std::span<const std::complex<double>> desired) {
  if (!a.is_square() || b.rows() != a.rows()) fail(ErrorKind::Dimension, "place_poles: A, B shapes disagree");
  const std::size_t n = a.rows(), m = b.cols();
  if (desired.size() != n) fail(ErrorKind::Input, "place_poles: need one desired pole per state");
  auto units = pole_units(desired);
  std::vector<bool> taken(units.size(), false);

  Matrix k(m, n);
  for (const auto& ch : decompose_channels(a, b)) {
    if (ch.states.empty()) continue;
    if (ch.inputs.empty()) fail(ErrorKind::Synthesis, "place_poles: uncontrollable states (no input reaches them)");
    if (ch.inputs.size() > 1)
      fail(ErrorKind::Synthesis, "place_poles: coupled multi-input channel is not supported");
    std::vector<std::complex<double>> poles;
    for (std::size_t u = 0; u < units.size() && poles.size() < ch.states.size(); ++u) {
      if (taken[u] || poles.size() + units[u].size() > ch.states.size()) continue;
      taken[u] = true;
      poles.insert(poles.end(), units[u].begin(), units[u].end());
    }
    if (poles.size() != ch.states.size())
      fail(ErrorKind::Input, "place_poles: desired conjugate pairs cannot be split across channels");
    const Matrix sub_k = ackermann(sub_matrix(a, ch.states, ch.states), sub_matrix(b, ch.states, ch.inputs), poles);
    for (std::size_t j = 0; j < ch.states.size(); ++j) k(ch.inputs[0], ch.states[j]) = sub_k(0, j);
  }
  return k;
}

Matrix observer_gain(const Matrix& a, const Matrix& c, double speed_factor,
                     std::span<const std::complex<double>> base_poles, std::vector<std::string>* warnings) {
  if (!std::isfinite(speed_factor) || speed_factor <= 0.0)
    fail(ErrorKind::Input, "observer_gain: speed factor must be positive");
  if ((speed_factor < 3.0 || speed_factor > 5.0) && warnings != nullptr) {
    std::ostringstream os;
    os << "observer speed factor " << speed_factor << " is outside the recommended range [3, 5]";
    warnings->push_back(os.str());
  }
  std::vector<std::complex<double>> poles(base_poles.begin(), base_poles.end());
  for (auto& p : poles) p *= speed_factor;
  try {
    return place_poles(a.transpose(), c.transpose(), poles).transpose();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Synthesis)
      fail(ErrorKind::Synthesis, std::string("observer_gain: (A, C) not observable per channel: ") + e.what());
    throw;
  }
}

SeparationLoop assemble_separation_loop(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& k,
                                        const Matrix& l) {
  const std::size_t n = a.rows();
  const Matrix bk = b * k;
  const Matrix lc = l * c;
  SeparationLoop out;
  out.error_form = Matrix(2 * n, 2 * n);
  out.error_form.set_block(0, 0, a - bk);
  out.error_form.set_block(0, n, bk);
  out.error_form.set_block(n, n, a - lc);
  out.estimate_form = Matrix(2 * n, 2 * n);
  out.estimate_form.set_block(0, 0, a);
  out.estimate_form.set_block(0, n, -bk);
  out.estimate_form.set_block(n, 0, lc);
  out.estimate_form.set_block(n, n, a - bk - lc);
  return out;
}

std::optional<Matrix> hinf_riccati(const Matrix& a, const Matrix& b, const Matrix& g, const Weights& w,
                                   double gamma, const Matrix* seed) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) fail(ErrorKind::Input, "hinf_riccati: gamma must be positive");
  const Matrix s = input_weighting(b, w.r) - (g * g.transpose()) * (1.0 / (gamma * gamma));
  Matrix p = seed != nullptr ? *seed : solve_care(a, b, w);
  const double q_scale = std::max(1.0, w.q.norm_inf());
  for (int it = 0; it < kMaxNewtonIterations; ++it) {
    const Matrix closed = a - s * p;
    if (!is_hurwitz(closed)) return std::nullopt;
    Matrix next;
    try {
      next = solve_lyapunov(closed, w.q + p * s * p);
    } catch (const Error&) {
      return std::nullopt;
    }
    const double gap = (next - p).max_abs();
    p = next;
    if (!p.all_finite()) return std::nullopt;
    if (gap <= 1e-10 * std::max(1.0, p.max_abs())) {
      const double p_scale = std::max(1.0, p.max_abs());
      const double residual = (a.transpose() * p + p * a - p * s * p + w.q).norm_inf();
      if (residual > 1e-8 * q_scale * p_scale * p_scale) return std::nullopt;
      if (min_eigenvalue(p) < -1e-10 * p_scale) return std::nullopt;
      if (!is_hurwitz(a - s * p)) return std::nullopt;
      const Matrix k = solve_linear(w.r, b.transpose() * p);
      if (!is_hurwitz(a - b * k)) return std::nullopt;
      return p;
    }
  }
  return std::nullopt;
}

SynthesisResult hinf_state_feedback(const Matrix& a, const Matrix& b, const Matrix& g, const Weights& w,
                                    GammaRange range) {
  if (!(range.lo > 0.0) || !(range.hi > range.lo) || !std::isfinite(range.hi))
    fail(ErrorKind::Input, "hinf_state_feedback: need 0 < gamma_lo < gamma_hi");
  if (g.rows() != a.rows()) fail(ErrorKind::Dimension, "hinf_state_feedback: G row count must equal state count");
  Matrix lqr_p;
  try {
    lqr_p = solve_care(a, b, w);
  } catch (const Error& e) {
    fail(ErrorKind::Synthesis, std::string("hinf_state_feedback: no stabilizing LQR solution: ") + e.what());
  }
  auto best = hinf_riccati(a, b, g, w, range.hi, &lqr_p);
  if (!best) {
    std::ostringstream os;
    os << "hinf_state_feedback: gamma_hi = " << range.hi << " is infeasible";
    fail(ErrorKind::Range, os.str());
  }
  double hi = range.hi, lo = range.lo;
  if (auto at_lo = hinf_riccati(a, b, g, w, lo, &*best)) {
    hi = lo;
    best = std::move(at_lo);
  }
  while (hi - lo > 1e-3 * lo) {
    const double mid = 0.5 * (lo + hi);
    if (auto p = hinf_riccati(a, b, g, w, mid, &*best)) {
      hi = mid;
      best = std::move(p);
    } else {
      lo = mid;
    }
  }
  SynthesisResult out;
  out.p = *best;
  out.k = solve_linear(w.r, b.transpose() * out.p);
  out.gamma = hi;
  out.closed_loop_spectrum = eigenvalues(a - b * out.k);
  return out;
}

StateSpace hinf_performance_system(const Matrix& a, const Matrix& b, const Matrix& g, const Weights& w,
                                   const Matrix& k) {
  const Matrix c = vstack(sqrt_psd(w.q), -1.0 * (sqrt_psd(w.r) * k));
  return StateSpace(a - b * k, g, c);
}

std::vector<double> default_hinf_grid(const Matrix& a) {
  double log_sum = 0.0;
  std::size_t count = 0;
  for (const auto& lambda : eigenvalues(a)) {
    const double mag = std::abs(lambda);
    if (mag > 0.0) {
      log_sum += std::log10(mag);
      ++count;
    }
  }
  const double centre = count > 0 ? log_sum / static_cast<double>(count) : 0.0;
  auto grid = log_grid(std::pow(10.0, centre - 3.0), std::pow(10.0, centre + 3.0), 2000);
  grid.insert(grid.begin(), 0.0);
  return grid;
}

double hinf_norm(const StateSpace& sys, std::span<const double> grid) {
  if (stability_class(sys.a()) != StabilityClass::AsymptoticallyStable)
    fail(ErrorKind::Range, "hinf_norm: undefined for a system that is not asymptotically stable");
  std::vector<double> owned;
  if (grid.empty()) {
    owned = default_hinf_grid(sys.a());
    grid = owned;
  }
  auto gain = [&](double w) { return max_singular_value(transfer_eval(sys, {0.0, w})); };
  std::size_t best = 0;
  double peak = -1.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = gain(grid[i]);
    if (v > peak) {
      peak = v;
      best = i;
    }
  }
  double lo = best > 0 ? grid[best - 1] : grid[best];
  double hi = best + 1 < grid.size() ? grid[best + 1] : grid[best];
  const double ratio = 0.5 * (3.0 - std::sqrt(5.0));
  double x1 = lo + ratio * (hi - lo), x2 = hi - ratio * (hi - lo);
  double f1 = gain(x1), f2 = gain(x2);
  for (int it = 0; it < 80 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
    if (f1 > f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = lo + ratio * (hi - lo);
      f1 = gain(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = hi - ratio * (hi - lo);
      f2 = gain(x2);
    }
  }
  return std::max({peak, f1, f2});
}

}  // namespace orbctl
