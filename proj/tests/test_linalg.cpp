#include <Eigen/Dense>

#include <random>

#include "support.hpp"

using namespace orbctl;
using orbctl::test::expect_matrix_near;
using orbctl::test::multiset_distance;
using cd = std::complex<double>;

namespace {

Matrix random_matrix(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Matrix m(n, n);
  for (auto& v : m.data()) v = d(rng);
  return m;
}

std::vector<cd> eigen_oracle(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) e(r, c) = m(r, c);
  Eigen::EigenSolver<Eigen::MatrixXd> es(e, false);
  return {es.eigenvalues().begin(), es.eigenvalues().end()};
}

}  // namespace

TEST(Matrix, RejectsNonFiniteEntries) {
  EXPECT_THROW(Matrix({{1.0, NAN}}), Error);
  EXPECT_THROW(Matrix(1, 1, INFINITY), Error);
}

TEST(Matrix, ShapeMismatchIsDimensionError) {
  try {
    (void)(Matrix::identity(2) * Matrix::identity(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Dimension);
  }
}

TEST(Matrix, StackingAndBlocks) {
  const Matrix a{{1, 2}, {3, 4}};
  const Matrix h = hstack(a, Matrix::identity(2));
  EXPECT_EQ(h.cols(), 4u);
  EXPECT_EQ(h.block(0, 2, 2, 2), Matrix::identity(2));
  const Matrix v = vstack(a, a);
  EXPECT_EQ(v.rows(), 4u);
  EXPECT_EQ(v.block(2, 0, 2, 2), a);
  EXPECT_EQ(a.transpose()(0, 1), 3.0);
}

TEST(Eigenvalues, Diagonal) {
  const Spectrum s = eigenvalues(Matrix{{2, 0}, {0, 3}});
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(s[0].real(), 3.0, 1e-14);
  EXPECT_NEAR(s[1].real(), 2.0, 1e-14);
}

TEST(Eigenvalues, RotationGenerator) {
  const Spectrum s = eigenvalues(Matrix{{0, 1}, {-1, 0}});
  EXPECT_LT(std::abs(s[0] - cd(0, 1)), 1e-14);
  EXPECT_LT(std::abs(s[1] - cd(0, -1)), 1e-14);
}

TEST(Eigenvalues, SaddleChannel) {
  const double w2 = natural_frequency_sq(test::default_r0());
  EXPECT_NEAR(w2, 4.104e-7, 1e-9);
  const Spectrum s = eigenvalues(Matrix{{0, 1}, {w2, 0}});
  EXPECT_NEAR(s[0].real(), 6.406e-4, 1e-6);
  EXPECT_NEAR(s[1].real(), -6.406e-4, 1e-6);
  EXPECT_NEAR(s[0].real(), std::sqrt(w2), 1e-15);
}

TEST(Eigenvalues, RejectsNonSquareAndEmpty) {
  EXPECT_THROW(eigenvalues(Matrix(2, 3)), Error);
  EXPECT_THROW(eigenvalues(Matrix()), Error);
}

TEST(Eigenvalues, OrderingIsDescendingRealThenImag) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Spectrum s = eigenvalues(random_matrix(rng, 6));
    for (std::size_t i = 1; i < s.size(); ++i) {
      EXPECT_TRUE(s[i - 1].real() > s[i].real() ||
                  (s[i - 1].real() == s[i].real() && s[i - 1].imag() >= s[i].imag()));
    }
  }
}

TEST(Eigenvalues, MatchesEigenOnRandomMatrices) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 9;
    const Matrix m = random_matrix(rng, n, trial % 3 == 0 ? 1e3 : 1.0);
    const double scale = std::max(1.0, m.norm_fro());
    EXPECT_LT(multiset_distance(test::as_vector(eigenvalues(m)), eigen_oracle(m)), 1e-9 * scale) << "trial " << trial;
  }
}

TEST(Eigenvalues, TraceAndConjugateClosure) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix m = random_matrix(rng, 7);
    const Spectrum s = eigenvalues(m);
    cd sum = 0.0;
    for (const auto& z : s) sum += z;
    double trace = 0.0;
    for (std::size_t i = 0; i < 7; ++i) trace += m(i, i);
    EXPECT_NEAR(sum.real(), trace, 1e-10);
    EXPECT_NEAR(sum.imag(), 0.0, 1e-10);
    std::vector<cd> conj;
    for (const auto& z : s) conj.push_back(std::conj(z));
    EXPECT_LT(multiset_distance(test::as_vector(s), conj), 1e-10);
  }
}

TEST(Rank, Basics) {
  EXPECT_EQ(rank(Matrix::identity(4)), 4u);
  EXPECT_EQ(rank(Matrix{{1, 2}, {2, 4}}), 1u);
  EXPECT_EQ(rank(Matrix(3, 3)), 0u);
}

TEST(Rank, InvariantUnderTransposeAndBoundedByShape) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> d;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 1 + trial % 4;
    Matrix u(5, k), v(k, 6);
    for (auto& x : u.data()) x = d(rng);
    for (auto& x : v.data()) x = d(rng);
    const Matrix m = u * v;
    EXPECT_EQ(rank(m), k);
    EXPECT_EQ(rank(m.transpose()), k);
  }
}

TEST(SolveLinear, Basics) {
  const Matrix b{{1}, {2}, {3}};
  expect_matrix_near(solve_linear(Matrix::identity(3), b), b, 1e-15);
  expect_matrix_near(solve_linear(Matrix{{2, 0}, {0, 4}}, Matrix{{1}, {1}}), Matrix{{0.5}, {0.25}}, 1e-15);
}

TEST(SolveLinear, SingularIsReported) {
  try {
    solve_linear(Matrix{{1, 1}, {1, 1}}, Matrix{{1}, {0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Singular);
  }
}

TEST(SolveLinear, ResidualOnRandomSystems) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix a = random_matrix(rng, 6) + 6.0 * Matrix::identity(6);
    Matrix b(6, 2);
    for (auto& x : b.data()) x = std::uniform_real_distribution<double>(-1, 1)(rng);
    EXPECT_LT((a * solve_linear(a, b) - b).max_abs(), 1e-12);
    EXPECT_LT((a * inverse(a) - Matrix::identity(6)).max_abs(), 1e-12);
  }
}

TEST(Expm, ClosedForms) {
  const Matrix m{{1, 2}, {3, 4}};
  expect_matrix_near(expm(m, 0.0), Matrix::identity(2), 0.0);
  expect_matrix_near(expm(Matrix{{0.3, 0}, {0, -2.0}}), Matrix{{std::exp(0.3), 0}, {0, std::exp(-2.0)}}, 1e-14);
  expect_matrix_near(expm(Matrix{{0, 1}, {0, 0}}), Matrix{{1, 1}, {0, 1}}, 1e-15);
  const double t = 2.5;
  expect_matrix_near(expm(Matrix{{0, 1}, {-1, 0}}, t),
                     Matrix{{std::cos(t), std::sin(t)}, {-std::sin(t), std::cos(t)}}, 1e-13);
}

TEST(Expm, SemigroupProperty) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix m = random_matrix(rng, 4);
    const Matrix lhs = expm(m, 0.7) * expm(m, 0.6);
    const Matrix rhs = expm(m, 1.3);
    EXPECT_LT((lhs - rhs).max_abs(), 1e-11 * std::max(1.0, rhs.max_abs()));
  }
}

TEST(Lyapunov, ClosedForms) {
  expect_matrix_near(solve_lyapunov(-Matrix::identity(2), Matrix::identity(2)), 0.5 * Matrix::identity(2), 1e-14);
  expect_matrix_near(solve_lyapunov(Matrix{{-1, 0}, {0, -2}}, Matrix::identity(2)), Matrix{{0.5, 0}, {0, 0.25}},
                     1e-14);
}

TEST(Lyapunov, ResonantSpectrumHasNoUniqueSolution) {
  try {
    solve_lyapunov(Matrix{{0, 1}, {0, 0}}, Matrix::identity(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoUniqueSolution);
  }
}

TEST(Lyapunov, ResidualAndSymmetryOnStableMatrices) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 30; ++trial) {
    Matrix a = random_matrix(rng, 5);
    a -= (eigenvalues(a).abscissa() + 1.0) * Matrix::identity(5);
    const Matrix q = Matrix::identity(5);
    const Matrix p = solve_lyapunov(a, q);
    EXPECT_LT((a.transpose() * p + p * a + q).max_abs(), 1e-10 * std::max(1.0, p.max_abs()));
    EXPECT_LT((p - p.transpose()).max_abs(), 1e-12 * std::max(1.0, p.max_abs()));
    EXPECT_GT(symmetric_eigen(p).values.front(), 0.0);
  }
}

TEST(SymmetricEigen, SqrtPsdSquaresBack) {
  const Matrix m{{4, 1, 0}, {1, 3, 1}, {0, 1, 2}};
  const Matrix s = sqrt_psd(m);
  expect_matrix_near(s * s, m, 1e-12);
  const auto e = symmetric_eigen(m);
  EXPECT_TRUE(std::is_sorted(e.values.begin(), e.values.end()));
}

TEST(SingularValues, Diagonal) {
  const auto sv = singular_values(Matrix{{3, 0}, {0, -5}});
  ASSERT_EQ(sv.size(), 2u);
  EXPECT_NEAR(sv[0], 5.0, 1e-14);
  EXPECT_NEAR(sv[1], 3.0, 1e-14);
}
