#include "orbctl/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "orbctl/error.hpp"

namespace orbctl {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

bool spectrum_order(const std::complex<double>& a, const std::complex<double>& b) {
  if (a.real() != b.real()) return a.real() > b.real();
  return a.imag() > b.imag();
}

template <class T>
double magnitude(const T& v) {
  return std::abs(v);
}

// In-place LU with partial pivoting on an n x n row-major array. Returns false
// when a pivot falls to or below `tol`.
template <class T>
bool lu_factor(std::vector<T>& a, std::size_t n, std::vector<std::size_t>& piv, double tol) {
  piv.resize(n);
  std::iota(piv.begin(), piv.end(), 0);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = magnitude(a[k * n + k]);
    for (std::size_t i = k + 1; i < n; ++i) {
      double v = magnitude(a[i * n + k]);
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (best <= tol) return false;
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[p * n + j]);
      std::swap(piv[k], piv[p]);
    }
    const T pivot = a[k * n + k];
    for (std::size_t i = k + 1; i < n; ++i) {
      const T f = a[i * n + k] / pivot;
      a[i * n + k] = f;
      if (f == T(0)) continue;
      for (std::size_t j = k + 1; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
    }
  }
  return true;
}

// Solves with a factorization from lu_factor; b is n x nrhs row-major.
template <class T>
std::vector<T> lu_solve(const std::vector<T>& lu, std::size_t n, const std::vector<std::size_t>& piv,
                        const std::vector<T>& b, std::size_t nrhs) {
  std::vector<T> x(n * nrhs);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < nrhs; ++c) x[i * nrhs + c] = b[piv[i] * nrhs + c];
  for (std::size_t c = 0; c < nrhs; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      T s = x[i * nrhs + c];
      for (std::size_t k = 0; k < i; ++k) s -= lu[i * n + k] * x[k * nrhs + c];
      x[i * nrhs + c] = s;
    }
    for (std::size_t ii = n; ii-- > 0;) {
      T s = x[ii * nrhs + c];
      for (std::size_t k = ii + 1; k < n; ++k) s -= lu[ii * n + k] * x[k * nrhs + c];
      x[ii * nrhs + c] = s / lu[ii * n + ii];
    }
  }
  return x;
}

template <class T>
double pivot_tolerance(const std::vector<T>& a, std::size_t n) {
  double scale = 0.0;
  for (const T& v : a) scale = std::max(scale, magnitude(v));
  return static_cast<double>(n) * kEps * scale;
}

}  // namespace

// ---------------------------------------------------------------------------
// Spectrum

Spectrum::Spectrum(std::vector<std::complex<double>> values) : values_(std::move(values)) {
  std::sort(values_.begin(), values_.end(), spectrum_order);
}

double Spectrum::abscissa() const {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& v : values_) best = std::max(best, v.real());
  return best;
}

Spectrum Spectrum::merged(const Spectrum& other) const {
  std::vector<std::complex<double>> all(values_);
  all.insert(all.end(), other.values_.begin(), other.values_.end());
  return Spectrum(std::move(all));
}

double spectrum_distance(const Spectrum& a, const Spectrum& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  // Greedy nearest matching; sorted order alone mis-pairs near-ties in real part.
  std::vector<bool> used(b.size(), false);
  double worst = 0.0;
  for (const auto& va : a) {
    std::size_t best_j = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j]) continue;
      double d = std::abs(va - b[j]);
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    used[best_j] = true;
    worst = std::max(worst, best);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Singular values and rank

std::vector<double> singular_values(const Matrix& m) {
  if (m.empty()) return {};
  Matrix u = m.rows() >= m.cols() ? m : m.transpose();
  const std::size_t rows = u.rows();
  const std::size_t cols = u.cols();

  for (int sweep = 0; sweep < 80; ++sweep) {
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < cols; ++i) {
      for (std::size_t j = i + 1; j < cols; ++j) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
          alpha += u(r, i) * u(r, i);
          beta += u(r, j) * u(r, j);
          gamma += u(r, i) * u(r, j);
        }
        if (gamma == 0.0 || std::abs(gamma) <= kEps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t r = 0; r < rows; ++r) {
          const double ui = u(r, i);
          const double uj = u(r, j);
          u(r, i) = c * ui - s * uj;
          u(r, j) = s * ui + c * uj;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sv(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < rows; ++r) s += u(r, c) * u(r, c);
    sv[c] = std::sqrt(s);
  }
  std::sort(sv.begin(), sv.end(), std::greater<>());
  return sv;
}

std::size_t rank(const Matrix& m, std::optional<double> tol) {
  if (m.empty()) fail(ErrorKind::Input, "rank of an empty matrix");
  const auto sv = singular_values(m);
  const double threshold =
      tol.value_or(static_cast<double>(std::max(m.rows(), m.cols())) * kEps * sv.front());
  return static_cast<std::size_t>(
      std::count_if(sv.begin(), sv.end(), [&](double s) { return s > threshold; }));
}

// ---------------------------------------------------------------------------
// Linear solves

Matrix solve_linear(const Matrix& a, const Matrix& b) {
  if (!a.is_square()) fail(ErrorKind::Dimension, "solve_linear: coefficient matrix not square");
  if (b.rows() != a.rows()) fail(ErrorKind::Dimension, "solve_linear: right-hand side row mismatch");
  const std::size_t n = a.rows();
  std::vector<double> lu(a.data().begin(), a.data().end());
  std::vector<std::size_t> piv;
  if (!lu_factor(lu, n, piv, pivot_tolerance(lu, n)))
    fail(ErrorKind::Singular, "solve_linear: matrix is numerically singular");

  std::vector<double> rhs(b.data().begin(), b.data().end());
  std::vector<double> x = lu_solve(lu, n, piv, rhs, b.cols());

  // One step of iterative refinement.
  Matrix xm(n, b.cols(), x);
  Matrix r = b - a * xm;
  std::vector<double> rv(r.data().begin(), r.data().end());
  std::vector<double> dx = lu_solve(lu, n, piv, rv, b.cols());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += dx[i];

  Matrix out(n, b.cols());
  std::copy(x.begin(), x.end(), out.data().begin());
  if (!out.all_finite()) fail(ErrorKind::Singular, "solve_linear: solution overflowed");
  return out;
}

ComplexMatrix solve_linear(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows != a.cols) fail(ErrorKind::Dimension, "solve_linear: coefficient matrix not square");
  if (b.rows != a.rows) fail(ErrorKind::Dimension, "solve_linear: right-hand side row mismatch");
  const std::size_t n = a.rows;
  std::vector<std::complex<double>> lu(a.data);
  std::vector<std::size_t> piv;
  if (!lu_factor(lu, n, piv, pivot_tolerance(lu, n)))
    fail(ErrorKind::Singular, "solve_linear: complex matrix is numerically singular");
  ComplexMatrix out(n, b.cols);
  out.data = lu_solve(lu, n, piv, b.data, b.cols);
  return out;
}

Matrix inverse(const Matrix& a) { return solve_linear(a, Matrix::identity(a.rows())); }

// ---------------------------------------------------------------------------
// Matrix exponential

Matrix expm(const Matrix& m, double t) {
  if (!m.is_square()) fail(ErrorKind::Dimension, "expm: matrix not square");
  if (!std::isfinite(t)) fail(ErrorKind::Input, "expm: non-finite time");
  const std::size_t n = m.rows();
  if (t == 0.0 || n == 0) return Matrix::identity(n);

  Matrix x = m * t;
  const double norm = x.norm_inf();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  if (squarings > 1000) fail(ErrorKind::Range, "expm: argument norm too large");
  x *= std::ldexp(1.0, -squarings);

  constexpr double c[] = {1.0,        0.5,          5.0 / 44.0,        1.0 / 66.0,
                          1.0 / 792.0, 1.0 / 15840.0, 1.0 / 665280.0};
  Matrix power = Matrix::identity(n);
  Matrix num = Matrix::identity(n);
  Matrix den = Matrix::identity(n);
  for (int k = 1; k <= 6; ++k) {
    power = power * x;
    num += power * c[k];
    den += power * ((k % 2 == 0) ? c[k] : -c[k]);
  }
  Matrix e = solve_linear(den, num);
  for (int i = 0; i < squarings; ++i) {
    e = e * e;
    if (!e.all_finite()) fail(ErrorKind::Range, "expm: result overflow");
  }
  if (!e.all_finite()) fail(ErrorKind::Range, "expm: result overflow");
  return e;
}

// ---------------------------------------------------------------------------
// Lyapunov

Matrix solve_lyapunov(const Matrix& a, const Matrix& q) {
  if (!a.is_square()) fail(ErrorKind::Dimension, "solve_lyapunov: a not square");
  if (q.rows() != a.rows() || q.cols() != a.cols())
    fail(ErrorKind::Dimension, "solve_lyapunov: q shape differs from a");
  const std::size_t n = a.rows();

  const Spectrum spec = eigenvalues(a);
  const double tol = 1e-8 * std::max(1.0, a.norm_inf());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j)
      if (std::abs(spec[i] + spec[j]) <= tol)
        fail(ErrorKind::NoUniqueSolution,
             "solve_lyapunov: eigenvalue pair of a sums to zero; solution not unique");

  // Unknown P(r, c) lives at r * n + c; equation (i, j) reads
  // sum_k a(k, i) P(k, j) + sum_k P(i, k) a(k, j) = -q(i, j).
  const std::size_t nn = n * n;
  Matrix kron(nn, nn);
  Matrix rhs(nn, 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t row = i * n + j;
      for (std::size_t k = 0; k < n; ++k) {
        kron(row, k * n + j) += a(k, i);
        kron(row, i * n + k) += a(k, j);
      }
      rhs(row, 0) = -q(i, j);
    }
  }
  Matrix vec;
  try {
    vec = solve_linear(kron, rhs);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Singular)
      fail(ErrorKind::NoUniqueSolution, "solve_lyapunov: Kronecker system singular");
    throw;
  }
  Matrix p(n, n);
  for (std::size_t i = 0; i < nn; ++i) p.data()[i] = vec(i, 0);
  return symmetrize(p);
}

// ---------------------------------------------------------------------------
// Symmetric eigenproblem

SymmetricEigen symmetric_eigen(const Matrix& m) {
  if (!m.is_square()) fail(ErrorKind::Dimension, "symmetric_eigen: matrix not square");
  const std::size_t n = m.rows();
  Matrix a = symmetrize(m);
  Matrix v = Matrix::identity(n);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off <= kEps * kEps * std::max(1e-300, a.norm_fro() * a.norm_fro())) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t =
            std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  SymmetricEigen out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
  }
  return out;
}

Matrix sqrt_psd(const Matrix& m) {
  const auto eig = symmetric_eigen(m);
  const double tol = 1e-10 * std::max(1.0, m.max_abs());
  if (!eig.values.empty() && eig.values.front() < -tol)
    fail(ErrorKind::Input, "sqrt_psd: matrix is not positive semidefinite");
  const std::size_t n = m.rows();
  Matrix root(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = std::sqrt(std::max(0.0, eig.values[k]));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) root(i, j) += s * eig.vectors(i, k) * eig.vectors(j, k);
  }
  return symmetrize(root);
}

double max_singular_value(const ComplexMatrix& h) {
  if (h.rows == 0 || h.cols == 0) return 0.0;
  if (h.rows == 1 && h.cols == 1) return std::abs(h.data[0]);
  // Gram matrix on the smaller side, embedded as a real symmetric matrix
  // [[Re, -Im], [Im, Re]] whose eigenvalues are those of the Gram matrix, doubled.
  const bool tall = h.rows >= h.cols;
  const std::size_t k = tall ? h.cols : h.rows;
  Matrix embed(2 * k, 2 * k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      std::complex<double> g = 0.0;
      if (tall) {
        for (std::size_t r = 0; r < h.rows; ++r) g += std::conj(h(r, i)) * h(r, j);
      } else {
        for (std::size_t c = 0; c < h.cols; ++c) g += h(i, c) * std::conj(h(j, c));
      }
      embed(i, j) = g.real();
      embed(i + k, j + k) = g.real();
      embed(i, j + k) = -g.imag();
      embed(i + k, j) = g.imag();
    }
  }
  const auto eig = symmetric_eigen(embed);
  return std::sqrt(std::max(0.0, eig.values.back()));
}

}  // namespace orbctl
