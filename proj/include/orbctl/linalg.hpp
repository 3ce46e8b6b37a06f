#pragma once

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "orbctl/matrix.hpp"

namespace orbctl {

/// Eigenvalues with multiplicity, ordered by descending real part and then by
/// descending imaginary part.
class Spectrum {
 public:
  Spectrum() = default;
  explicit Spectrum(std::vector<std::complex<double>> values);

  std::span<const std::complex<double>> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  const std::complex<double>& operator[](std::size_t i) const { return values_[i]; }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  /// Largest real part (the spectral abscissa). Undefined for an empty spectrum.
  double abscissa() const;

  /// Multiset union.
  Spectrum merged(const Spectrum& other) const;

 private:
  std::vector<std::complex<double>> values_;
};

/// Largest elementwise gap between two spectra of equal size after both are
/// sorted; infinity when the sizes differ.
double spectrum_distance(const Spectrum& a, const Spectrum& b);

/// All eigenvalues of a square matrix: balancing, Householder reduction to
/// upper Hessenberg form, then Francis double-shift QR.
Spectrum eigenvalues(const Matrix& m);

/// Singular values in descending order (one-sided Jacobi).
std::vector<double> singular_values(const Matrix& m);

/// Numerical rank. With no tolerance the threshold is
/// max(rows, cols) * eps * largest singular value.
std::size_t rank(const Matrix& m, std::optional<double> tol = std::nullopt);

/// Solves a * x = b by LU with partial pivoting.
Matrix solve_linear(const Matrix& a, const Matrix& b);
ComplexMatrix solve_linear(const ComplexMatrix& a, const ComplexMatrix& b);

Matrix inverse(const Matrix& a);

/// exp(m * t) by scaling and squaring around a [6/6] Padé kernel; the scaled
/// argument has infinity norm at most 0.5.
Matrix expm(const Matrix& m, double t = 1.0);

/// Symmetric P with aᵀP + P a + q = 0 (dense Kronecker vectorization).
Matrix solve_lyapunov(const Matrix& a, const Matrix& q);

struct SymmetricEigen {
  std::vector<double> values;  // ascending
  Matrix vectors;              // columns are eigenvectors
};

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
SymmetricEigen symmetric_eigen(const Matrix& m);

/// Principal square root of a symmetric positive semidefinite matrix.
Matrix sqrt_psd(const Matrix& m);

/// Largest singular value of a complex matrix.
double max_singular_value(const ComplexMatrix& m);

}  // namespace orbctl
