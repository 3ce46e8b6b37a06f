#include <numbers>

#include "orbctl/lti.hpp"
#include "orbctl/ode.hpp"
#include "orbctl/synthesis.hpp"
#include "support.hpp"

using namespace orbctl;
using orbctl::test::expect_matrix_near;
using cd = std::complex<double>;

namespace {

StateSpace first_order() { return StateSpace(Matrix{{-1}}, Matrix{{1}}, Matrix{{1}}); }

cd det_plus_identity(const ComplexMatrix& l) {
  if (l.rows == 1) return 1.0 + l(0, 0);
  return (1.0 + l(0, 0)) * (1.0 + l(1, 1)) - l(0, 1) * l(1, 0);
}

/// Net counter-clockwise turns of det(I + L(jω)) around the origin as ω runs
/// over the real line.
double winding_number(const StateSpace& loop) {
  std::vector<double> omegas{0.0};
  for (double w : log_grid(1e-9, 1e5, 20000)) omegas.push_back(w);
  std::vector<double> line;
  for (auto it = omegas.rbegin(); it != omegas.rend(); ++it)
    if (*it > 0.0) line.push_back(-*it);
  line.insert(line.end(), omegas.begin(), omegas.end());
  double total = 0.0;
  cd prev = det_plus_identity(transfer_eval(loop, cd(0.0, line.front())));
  for (std::size_t i = 1; i < line.size(); ++i) {
    const cd cur = det_plus_identity(transfer_eval(loop, cd(0.0, line[i])));
    total += std::arg(cur / prev);
    prev = cur;
  }
  return total / (2.0 * std::numbers::pi);
}

}  // namespace

TEST(StateSpace, ValidatesShapesAndDefaultsFeedthrough) {
  const StateSpace s(Matrix::identity(2), Matrix(2, 1), Matrix(3, 2));
  EXPECT_EQ(s.d().rows(), 3u);
  EXPECT_EQ(s.d().cols(), 1u);
  EXPECT_THROW(StateSpace(Matrix(2, 3), Matrix(2, 1), Matrix(1, 2)), Error);
  EXPECT_THROW(StateSpace(Matrix::identity(2), Matrix(3, 1), Matrix(1, 2)), Error);
  EXPECT_THROW(StateSpace(Matrix::identity(2), Matrix(2, 1), Matrix(1, 3)), Error);
}

TEST(Controllability, DoubleIntegrator) {
  const StateSpace s(Matrix{{0, 1}, {0, 0}}, Matrix{{0}, {1}}, Matrix{{1, 0}});
  const Matrix ctrb = controllability_matrix(s);
  EXPECT_EQ(ctrb, (Matrix{{0, 1}, {1, 0}}));
  EXPECT_EQ(rank(ctrb), 2u);
}

TEST(Controllability, NoActuation) {
  const StateSpace s(Matrix{{0, 1}, {0, 0}}, Matrix(2, 1), Matrix{{1, 0}});
  const Matrix ctrb = controllability_matrix(s);
  EXPECT_EQ(ctrb.max_abs(), 0.0);
  EXPECT_EQ(rank(ctrb), 0u);
}

TEST(Controllability, PlantHasFullRank) {
  const Matrix ctrb = controllability_matrix(test::default_plant());
  EXPECT_EQ(ctrb.rows(), 4u);
  EXPECT_EQ(ctrb.cols(), 8u);
  EXPECT_EQ(rank(ctrb), 4u);
}

TEST(Observability, IdentityZeroAndPlant) {
  const Matrix a{{1, 2, 0}, {0, -1, 3}, {4, 0, 0.5}};
  EXPECT_EQ(rank(observability_matrix(StateSpace(a, Matrix(3, 1), Matrix::identity(3)))), 3u);
  EXPECT_EQ(rank(observability_matrix(StateSpace(a, Matrix(3, 1), Matrix(2, 3)))), 0u);
  const StateSpace plant = test::default_plant();
  EXPECT_EQ(plant.c(), (Matrix{{1, 0, 0, 0}, {0, 1, 0, 0}}));
  EXPECT_EQ(rank(observability_matrix(plant)), 4u);
}

TEST(StabilityClass, Cases) {
  EXPECT_EQ(stability_class(-Matrix::identity(3)), StabilityClass::AsymptoticallyStable);
  EXPECT_EQ(stability_class(Matrix{{0, 1}, {-1, 0}}), StabilityClass::MarginallyStable);
  EXPECT_EQ(stability_class(test::default_plant().a()), StabilityClass::Unstable);
}

TEST(TransferEval, DcGains) {
  EXPECT_NEAR(std::abs(transfer_eval(first_order(), 0.0)(0, 0) - 1.0), 0.0, 1e-15);
  const StateSpace plant = test::default_plant();
  const double w2 = natural_frequency_sq(test::default_r0());
  const ComplexMatrix h = transfer_eval(plant, 0.0);
  EXPECT_NEAR(h(0, 0).real(), -1.0 / w2, 1e-6 / w2);
  EXPECT_NEAR(h(0, 0).real(), -2.4367e6, 1e-3 * 2.4367e6);
  EXPECT_NEAR(std::abs(h(0, 1)), 0.0, 1e-9);
}

TEST(TransferEval, RollOffAndPoleGuard) {
  const StateSpace plant = test::default_plant();
  double prev = INFINITY;
  for (double w : {1.0, 10.0, 100.0, 1000.0}) {
    const double mag = max_singular_value(transfer_eval(plant, cd(0, w)));
    EXPECT_LT(mag, prev);
    prev = mag;
  }
  EXPECT_LT(prev, 1e-5);
  try {
    transfer_eval(first_order(), cd(-1.0, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Singular);
  }
}

TEST(FrequencyResponse, FirstOrderCorner) {
  const double grid[] = {1.0};
  const auto pts = frequency_response(first_order(), grid);
  ASSERT_TRUE(pts[0].ok);
  EXPECT_NEAR(std::abs(pts[0].response(0, 0)), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(std::arg(pts[0].response(0, 0)) * 180.0 / std::numbers::pi, -45.0, 1e-12);
}

TEST(FrequencyResponse, ConjugateSymmetry) {
  const StateSpace plant = test::default_plant();
  for (double w : log_grid(1e-4, 10.0, 25)) {
    const ComplexMatrix pos = transfer_eval(plant, cd(0, w));
    const ComplexMatrix neg = transfer_eval(plant, cd(0, -w));
    for (std::size_t i = 0; i < pos.data.size(); ++i)
      EXPECT_LT(std::abs(neg.data[i] - std::conj(pos.data[i])), 1e-9 * std::max(1.0, std::abs(pos.data[i])));
  }
}

TEST(FrequencyResponse, FlagsBadPointsWithoutAborting) {
  const StateSpace rotation(Matrix{{0, 1}, {-1, 0}}, Matrix{{0}, {1}}, Matrix{{1, 0}});
  const double grid[] = {0.5, 1.0, 2.0};
  const auto pts = frequency_response(rotation, grid);
  EXPECT_TRUE(pts[0].ok);
  EXPECT_FALSE(pts[1].ok);
  EXPECT_FALSE(pts[1].error.empty());
  EXPECT_TRUE(pts[2].ok);
  const double bad[] = {-1.0, 1.0};
  EXPECT_THROW(frequency_response(first_order(), bad), Error);
  EXPECT_TRUE(frequency_response(first_order(), bad, false)[0].ok);
}

TEST(LogGrid, EndpointsAndMonotone) {
  const auto g = log_grid();
  ASSERT_EQ(g.size(), 400u);
  EXPECT_DOUBLE_EQ(g.front(), 1e-5);
  EXPECT_DOUBLE_EQ(g.back(), 10.0);
  EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
}

TEST(Nyquist, LqrLoopWindingMatchesOpenLoopUnstablePoles) {
  const StateSpace plant = test::default_plant();
  const auto lqr = lqr_gain(plant.a(), plant.b(), {Matrix::identity(4), Matrix::identity(2)});
  ASSERT_EQ(stability_class(plant.a() - plant.b() * lqr.k), StabilityClass::AsymptoticallyStable);
  const StateSpace loop(plant.a(), plant.b(), lqr.k);
  int rhp = 0;
  for (const auto& z : eigenvalues(plant.a())) rhp += z.real() > 0.0;
  EXPECT_EQ(rhp, 2);
  EXPECT_NEAR(winding_number(loop), rhp, 1e-3);
}

TEST(Nyquist, ReturnDifferenceDeterminantIsPolynomialRatio) {
  const StateSpace plant = test::default_plant();
  const auto lqr = lqr_gain(plant.a(), plant.b(), {Matrix::identity(4), Matrix::identity(2)});
  const StateSpace loop(plant.a(), plant.b(), lqr.k);
  const Spectrum open = eigenvalues(plant.a());
  const Spectrum closed = eigenvalues(plant.a() - plant.b() * lqr.k);
  for (double w : {1e-3, 0.1, 0.7, 3.0}) {
    const cd s(0, w);
    cd ratio = 1.0;
    for (std::size_t i = 0; i < 4; ++i) ratio *= (s - closed[i]) / (s - open[i]);
    EXPECT_LT(std::abs(det_plus_identity(transfer_eval(loop, s)) - ratio), 1e-8 * std::abs(ratio));
  }
}

TEST(ZeroInput, FrozenAndDecay) {
  const double x0[] = {1.0, -2.0};
  const double grid[] = {0.0, 1.0, 5.0};
  const Matrix frozen = zero_input_response(Matrix(2, 2), x0, grid);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(frozen(k, 0), 1.0);
    EXPECT_EQ(frozen(k, 1), -2.0);
  }
  const double one[] = {1.0};
  const double t[] = {0.0, 1.0};
  EXPECT_NEAR(zero_input_response(Matrix{{-1}}, one, t)(1, 0), std::exp(-1.0), 1e-15);
}

TEST(ZeroInput, RadialOffsetGrowsAlongUnstableMode) {
  const StateSpace plant = test::default_plant();
  const double w = std::sqrt(natural_frequency_sq(test::default_r0()));
  const double x0[] = {0.1, 0.0, 0.0, 0.0};
  const auto grid = uniform_grid(20000.0, 1000.0);
  const Matrix zi = zero_input_response(plant.a(), x0, grid);
  const OdeSolution numeric = integrate_dopri5(
      [&](double, std::span<const double> x, std::span<double> dx) {
        const auto v = plant.a() * x;
        std::copy(v.begin(), v.end(), dx.begin());
      },
      x0, grid, {1e-12, 1e-15});
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double expect = 0.1 * std::cosh(w * grid[k]);
    EXPECT_NEAR(zi(k, 0), expect, 1e-10 * expect);
    EXPECT_NEAR(zi(k, 2), 0.1 * w * std::sinh(w * grid[k]), 1e-10 * expect);
    EXPECT_NEAR(numeric.states(k, 0), expect, 1e-8 * expect);
    EXPECT_EQ(zi(k, 1), 0.0);
  }
  EXPECT_GT(zi(grid.size() - 1, 0), 1e4 * 0.1);
}

TEST(ZeroState, IntegratorAndNoForcing) {
  const StateSpace integ(Matrix{{0}}, Matrix{{1}}, Matrix{{1}});
  const auto grid = uniform_grid(3.0, 0.5);
  const Matrix x = zero_state_response(integ, Matrix(grid.size(), 1, 1.0), grid);
  for (std::size_t k = 0; k < grid.size(); ++k) EXPECT_NEAR(x(k, 0), grid[k], 1e-14);
  const Matrix zero = zero_state_response(test::default_plant(), Matrix(grid.size(), 2), grid);
  EXPECT_EQ(zero.max_abs(), 0.0);
}

TEST(ZeroState, SuperpositionMatchesIntegration) {
  const StateSpace plant = test::default_plant();
  const Vec2 a = srp_accel(SrpConfig{}, SpacecraftParams{});
  const double x0[] = {5.0, -3.0, 1e-3, 2e-3};
  const auto grid = uniform_grid(4000.0, 10.0);
  Matrix u(grid.size(), 2);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    u(k, 0) = a[0];
    u(k, 1) = a[1];
  }
  const Matrix sum = zero_input_response(plant.a(), x0, grid) + zero_state_response(plant, u, grid);
  const OdeSolution numeric = integrate_dopri5(
      [&](double, std::span<const double> x, std::span<double> dx) {
        const auto v = plant.a() * x;
        for (std::size_t i = 0; i < 4; ++i) dx[i] = v[i];
        dx[2] += a[0];
        dx[3] += a[1];
      },
      x0, grid, {1e-12, 1e-14});
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      num = std::max(num, std::abs(sum(k, i) - numeric.states(k, i)));
      den = std::max(den, std::abs(numeric.states(k, i)));
    }
    EXPECT_LT(num, 1e-8 * den) << "sample " << k;
  }
}

TEST(StepResponse, FirstOrder) {
  const auto r = step_response(first_order(), 1.0, 0.01);
  ASSERT_EQ(r.outputs.size(), 1u);
  EXPECT_NEAR(r.times.back(), 1.0, 1e-15);
  EXPECT_NEAR(r.outputs[0](r.times.size() - 1, 0), 1.0 - std::exp(-1.0), 1e-12);
}

TEST(StepResponse, SettlesToDcGain) {
  const StateSpace sys(Matrix{{-1, 2}, {-3, -4}}, Matrix{{1}, {0.5}}, Matrix{{1, 1}});
  const Matrix dc = -1.0 * (sys.c() * solve_linear(sys.a(), sys.b()));
  const auto r = step_response(sys, 30.0, 0.01);
  EXPECT_NEAR(r.outputs[0](r.times.size() - 1, 0), dc(0, 0), 1e-9);
}

TEST(StepResponse, ObserverLoopSettles) {
  const Scenario& s = test::default_scenario();
  const Design d = design_scenario(s, Method::ObserverLqr);
  const auto loop = assemble_separation_loop(d.plant.a(), d.plant.b(), d.plant.c(), d.lqr.k, d.l);
  const StateSpace closed(loop.estimate_form, vstack(d.plant.b(), d.plant.b()),
                          hstack(d.plant.c(), Matrix(2, 4)));
  const auto r = step_response(closed, 20.0, 0.01);
  const auto y = r.outputs[0].col(0);
  std::vector<double> dev(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) dev[k] = std::abs(y[k] - y.back());
  const auto ts = settling_time(r.times, dev, 0.02 * std::abs(y.back()));
  ASSERT_TRUE(ts.has_value());
  EXPECT_GT(*ts, 0.0);
  EXPECT_LT(*ts, 20.0);
}

TEST(SettlingTime, Definition) {
  const double t[] = {0, 1, 2, 3, 4};
  const double inside[] = {0, 0, 0, 0, 0};
  EXPECT_EQ(settling_time(t, inside, 0.1), 0.0);
  const double late[] = {1, 1, 0.05, 0.2, 0.05};
  EXPECT_EQ(settling_time(t, late, 0.1), 4.0);
  const double never[] = {0, 0, 0, 0, 1};
  EXPECT_FALSE(settling_time(t, never, 0.1).has_value());
}

TEST(Series, MatchesProductOfTransfers) {
  const StateSpace plant = test::default_plant();
  const auto lqr = lqr_gain(plant.a(), plant.b(), {Matrix::identity(4), Matrix::identity(2)});
  const Matrix l = observer_gain(plant.a(), plant.c(), 4.0, std::vector<cd>{-1.0, -1.0, -1.0, -1.0});
  const StateSpace comp = observer_compensator(plant.a(), plant.b(), plant.c(), lqr.k, l);
  const StateSpace chain = series(plant, comp);
  for (double w : {0.01, 0.5, 2.0}) {
    const ComplexMatrix direct = transfer_eval(chain, cd(0, w));
    const ComplexMatrix product = transfer_eval(comp, cd(0, w)) * transfer_eval(plant, cd(0, w));
    for (std::size_t i = 0; i < direct.data.size(); ++i)
      EXPECT_LT(std::abs(direct.data[i] - product.data[i]), 1e-9 * std::max(1.0, std::abs(product.data[i])));
  }
}

TEST(UniformGrid, EndsAtHorizon) {
  const auto g = uniform_grid(1.0, 0.3);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_DOUBLE_EQ(g.back(), 1.0);
  EXPECT_EQ(uniform_grid(4000.0, 0.1).size(), 40001u);
}
