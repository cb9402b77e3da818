#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include <roughlab/fbm.hpp>
#include <roughlab/kl.hpp>
#include <roughlab/rough_path.hpp>
#include <roughlab/solvers.hpp>
#include <roughlab/vector_fields.hpp>

#include "test_util.hpp"

using namespace roughlab;
using nlohmann::json;

namespace {

GridPath scalar_path(const TimeGrid& grid, double (*f)(double)) {
  Eigen::MatrixXd values(grid.num_points(), 1);
  for (int k = 0; k < grid.num_points(); ++k) values(k, 0) = f(grid.point(k)) - f(0.0);
  return GridPath(grid, values);
}

double sup_state_diff(const SolutionPath& a, const SolutionPath& b) {
  return (a.states - b.states).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(Young, ScalarLinearClosedForm) {
  // dy = y dh integrates to a exp(h_t).
  TimeGrid grid(1.0, 64);
  GridPath h = scalar_path(grid, [](double t) { return 0.5 * std::sin(2.0 * M_PI * t) + 0.3 * t; });
  VectorFieldSystem vf = catalog("scalar-linear");
  Eigen::VectorXd a = Eigen::VectorXd::Constant(1, 0.7);
  SolutionPath y = solve_young(h, vf, a, 32);
  double worst = 0.0;
  for (int k = 0; k <= 64; ++k) worst = std::max(worst, std::abs(y.states(k, 0) - 0.7 * std::exp(h.values(k, 0))));
  EXPECT_LT(worst, 1e-8);
  EXPECT_EQ(y.method, "young");
}

TEST(Young, ConstantAndLinearDriftExactness) {
  // Constant drift: y = a + b t reproduced to machine precision by RK4.
  json drift_const = json::array({json{{"0,0", 1.5}}, json{{"0,0", -0.25}}});
  VectorFieldSystem vf = catalog("polynomial", json{{"e", 2}, {"d", 1}, {"drift", drift_const}});
  TimeGrid grid(2.0, 16);
  Eigen::VectorXd a(2);
  a << 0.1, 0.2;
  SolutionPath y = solve_young(GridPath::zero(grid, 1), vf, a, 4);
  for (int k = 0; k <= 16; ++k) {
    double t = grid.point(k);
    EXPECT_NEAR(y.states(k, 0), 0.1 + 1.5 * t, 1e-13);
    EXPECT_NEAR(y.states(k, 1), 0.2 - 0.25 * t, 1e-13);
  }

  // Linear drift: y = a e^t with RK4's fifth-order local error.
  json drift_lin = json::array({json{{"1", 1.0}}});
  VectorFieldSystem lin = catalog("polynomial", json{{"e", 1}, {"d", 1}, {"drift", drift_lin}});
  TimeGrid g1(1.0, 32);
  SolutionPath ye = solve_young(GridPath::zero(g1, 1), lin, Eigen::VectorXd::Constant(1, 1.0), 8);
  EXPECT_NEAR(ye.terminal()[0], std::exp(1.0), 1e-10);
}

TEST(Young, AdditiveFollowsDriver) {
  TimeGrid grid(1.0, 32);
  GridPath h = testutil::random_path(grid, 2, 3, 0.4);
  VectorFieldSystem vf = catalog("additive", json{{"dim", 2}});
  Eigen::VectorXd a(2);
  a << -0.3, 0.8;
  SolutionPath y = solve_young(h, vf, a, 2);
  for (int k = 0; k <= 32; ++k)
    EXPECT_LT((y.states.row(k).transpose() - (a + h.values.row(k).transpose())).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Rough, PureAreaHeisenbergExact) {
  // A driver with zero level 1 and constant area rate A dt per interval moves
  // the third coordinate linearly: y_t = (0, 0, A t).
  const double A = 0.8;
  TimeGrid grid(1.0, 16);
  GeometricRoughPath x = zero_rough_path(grid, 2, 2, 2.2);
  for (int k = 0; k < 16; ++k) {
    x.intervals[static_cast<std::size_t>(k)].x2(0, 1) = A * grid.dt();
    x.intervals[static_cast<std::size_t>(k)].x2(1, 0) = -A * grid.dt();
  }
  VectorFieldSystem vf = catalog("heisenberg");
  SolutionPath y = solve_rde(x, vf, Eigen::Vector3d::Zero());
  for (int k = 0; k <= 16; ++k) {
    EXPECT_NEAR(y.states(k, 0), 0.0, 1e-14);
    EXPECT_NEAR(y.states(k, 1), 0.0, 1e-14);
    EXPECT_NEAR(y.states(k, 2), A * grid.point(k), 1e-13);
  }
  EXPECT_EQ(y.method, "rough-euler");
}

TEST(Rough, CircleLiftMatchesAreaOracle) {
  // Lifted circles of frequency n enclose area pi r^2 n; the heisenberg
  // third coordinate reads it off.
  const double r = 0.5;
  VectorFieldSystem vf = catalog("heisenberg");
  for (int n : {1, 2, 3}) {
    TimeGrid grid(1.0, 512);
    Eigen::MatrixXd values(grid.num_points(), 2);
    for (int k = 0; k < grid.num_points(); ++k) {
      double th = 2.0 * M_PI * n * grid.point(k);
      values(k, 0) = r * (std::cos(th) - 1.0);
      values(k, 1) = r * std::sin(th);
    }
    GeometricRoughPath x = lift(GridPath(grid, values), 2, 2.2);
    SolutionPath y = solve_rde(x, vf, Eigen::Vector3d::Zero());
    double area = M_PI * r * r * n;
    EXPECT_NEAR(y.terminal()[2], area, 2e-3 * area);
    EXPECT_NEAR(y.terminal()[0], 0.0, 1e-3);
    EXPECT_NEAR(y.terminal()[1], 0.0, 1e-3);
  }
}

TEST(Rough, MatchesYoungOnSmoothLifts) {
  // The step-2 scheme on the lift converges to the Young solution with
  // empirical order at least one under grid doubling.
  VectorFieldSystem vf = catalog("elliptic-rot2d");
  Eigen::Vector2d a(0.3, -0.1);
  std::vector<double> errs;
  for (int K : {64, 128, 256}) {
    TimeGrid grid(1.0, K);
    GridPath h = testutil::smooth_path(grid, 2, 0.4, 0.7);
    SolutionPath rough = solve_rde(lift(h, 2, 2.2), vf, a);
    SolutionPath young = solve_young(h, vf, a, 32);
    errs.push_back(sup_state_diff(rough, young));
  }
  EXPECT_GE(std::log2(errs[0] / errs[1]), 1.0);
  EXPECT_GE(std::log2(errs[1] / errs[2]), 1.0);
}

TEST(Rough, Level3SchemeRefinesLevel2) {
  // With the level-3 terms included the defect against the Young solution
  // shrinks at fixed K on a smooth driver.
  VectorFieldSystem vf = catalog("elliptic-rot2d");
  Eigen::Vector2d a(0.1, -0.2);
  TimeGrid grid(1.0, 64);
  GridPath h = testutil::smooth_path(grid, 2, 0.5, 0.3);
  SolutionPath young = solve_young(h, vf, a, 32);
  double e2 = sup_state_diff(solve_rde(lift(h, 2, 2.2), vf, a), young);
  double e3 = sup_state_diff(solve_rde(lift(h, 3, 3.1), vf, a), young);
  EXPECT_LT(e3, e2);
}

TEST(Rough, TranslationCompatibility) {
  // Solving the translated lift equals solving the Young equation for the sum.
  VectorFieldSystem vf = catalog("elliptic-rot2d");
  Eigen::Vector2d a(0.2, 0.4);
  TimeGrid grid(1.0, 256);
  GridPath k = testutil::smooth_path(grid, 2, 0.05, 1.1);
  GridPath h = testutil::smooth_path(grid, 2, 0.04, 0.2);
  SolutionPath via_translate = solve_rde(young_translate(lift(k, 2, 2.2), h), vf, a);
  SolutionPath direct = solve_young(h + k, vf, a, 32);
  EXPECT_LT(sup_state_diff(via_translate, direct), 1e-6);
}

TEST(Variation, ScalarLinearClosedForms) {
  // Psi(h) = a e^{h}: first variation a e^{h_t} l_t, second a e^{h_t} l_t^2.
  TimeGrid grid(1.0, 64);
  GridPath h = scalar_path(grid, [](double t) { return 0.4 * std::sin(2.0 * M_PI * t); });
  GridPath l = scalar_path(grid, [](double t) { return 0.3 * std::cos(M_PI * t) - 0.3 + 0.5 * t; });
  VectorFieldSystem vf = catalog("scalar-linear");
  Eigen::VectorXd a = Eigen::VectorXd::Constant(1, 0.9);
  VariationBundle vb = solve_variation(h, l, vf, a, 32);
  double worst1 = 0.0, worst2 = 0.0;
  for (int k = 0; k <= 64; ++k) {
    double expected1 = 0.9 * std::exp(h.values(k, 0)) * l.values(k, 0);
    double expected2 = 0.9 * std::exp(h.values(k, 0)) * l.values(k, 0) * l.values(k, 0);
    worst1 = std::max(worst1, std::abs(vb.xi1(k, 0) - expected1));
    worst2 = std::max(worst2, std::abs(vb.xi2(k, 0) - expected2));
  }
  EXPECT_LT(worst1, 1e-8);
  EXPECT_LT(worst2, 1e-7);
}

TEST(Variation, LinearityAndQuadraticScaling) {
  TimeGrid grid(1.0, 32);
  VectorFieldSystem vf = catalog("elliptic-rot2d");
  Eigen::Vector2d a(0.1, 0.3);
  GridPath h = testutil::random_path(grid, 2, 5, 0.3);
  GridPath l1 = testutil::random_path(grid, 2, 6, 0.3);
  GridPath l2 = testutil::random_path(grid, 2, 7, 0.3);
  VariationBundle b1 = solve_variation(h, l1, vf, a, 8);
  VariationBundle b2 = solve_variation(h, l2, vf, a, 8);
  VariationBundle bc = solve_variation(h, l1 * 2.0 + l2 * (-0.5), vf, a, 8);
  EXPECT_LT((bc.xi1 - (b1.xi1 * 2.0 - b2.xi1 * 0.5)).cwiseAbs().maxCoeff(), 1e-10);
  // Second variation is homogeneous of degree 2.
  VariationBundle bs = solve_variation(h, l1 * 3.0, vf, a, 8);
  EXPECT_LT((bs.xi2 - b1.xi2 * 9.0).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((bs.xi1 - b1.xi1 * 3.0).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Variation, FiniteDifferenceRatios) {
  VectorFieldSystem vf = catalog("elliptic-rot2d");
  Eigen::Vector2d a(0.25, -0.4);
  TimeGrid grid(1.0, 32);
  for (std::uint64_t seed : {41u, 42u, 43u, 44u, 45u}) {
    GridPath h = testutil::random_path(grid, 2, seed, 0.25);
    // The direction is kept large: the second-difference quotient divides by
    // eps^2, so its signal must clear the solver's rounding floor (~1e-7).
    GridPath l = testutil::random_path(grid, 2, seed + 50, 0.6);
    VariationBundle vb = solve_variation(h, l, vf, a, 8);
    Eigen::VectorXd xi1 = vb.xi1_terminal(), xi2 = vb.xi2_terminal();
    auto terminal = [&](double s) { return solve_young(h + l * s, vf, a, 8).terminal(); };
    Eigen::VectorXd base = terminal(0.0);
    auto errs = [&](double s) {
      Eigen::VectorXd plus = terminal(s), minus = terminal(-s);
      double e1 = ((plus - minus) / (2.0 * s) - xi1).norm();
      double e2 = ((plus - 2.0 * base + minus) / (s * s) - xi2).norm();
      return std::pair<double, double>(e1, e2);
    };
    auto [e1a, e2a] = errs(1e-3);
    auto [e1b, e2b] = errs(5e-4);
    if (e1b > 1e-9) {
      EXPECT_GE(e1a / e1b, 3.5);
      EXPECT_LE(e1a / e1b, 4.5);
    }
    if (e2b > 1e-6) {
      EXPECT_GE(e2a / e2b, 3.5);
      EXPECT_LE(e2a / e2b, 4.5);
    }
  }
}

TEST(Variation, PolarizationIdentity) {
  // xi2 in direction l1 + l2 minus the two diagonals gives twice the
  // symmetric cross term, recovered here by polarization.
  TimeGrid grid(1.0, 32);
  VectorFieldSystem vf = catalog("heisenberg");
  Eigen::Vector3d a(0.2, -0.1, 0.0);
  GridPath h = testutil::random_path(grid, 2, 8, 0.3);
  GridPath l1 = testutil::random_path(grid, 2, 9, 0.3);
  GridPath l2 = testutil::random_path(grid, 2, 10, 0.3);
  Eigen::VectorXd sum = solve_variation(h, l1 + l2, vf, a, 8).xi2_terminal();
  Eigen::VectorXd dif = solve_variation(h, l1 - l2, vf, a, 8).xi2_terminal();
  Eigen::VectorXd d1 = solve_variation(h, l1, vf, a, 8).xi2_terminal();
  Eigen::VectorXd d2 = solve_variation(h, l2, vf, a, 8).xi2_terminal();
  // (sum - dif) / 4 = cross term; sum + dif = 2 d1 + 2 d2.
  EXPECT_LT(((sum + dif) - 2.0 * (d1 + d2)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Jacobian, ScalarLinearFlow) {
  // J_t = e^{h_t} for dy = y dh.
  TimeGrid grid(1.0, 64);
  GridPath h = scalar_path(grid, [](double t) { return 0.5 * std::sin(2.0 * M_PI * t); });
  VectorFieldSystem vf = catalog("scalar-linear");
  JacobianFlow flow = jacobian_flow(h, vf, Eigen::VectorXd::Constant(1, 0.8), 8);
  for (int k = 0; k <= 64; ++k) {
    EXPECT_NEAR(flow.J[static_cast<std::size_t>(k)](0, 0), std::exp(h.values(k, 0)), 1e-8);
    EXPECT_NEAR(flow.Jinv[static_cast<std::size_t>(k)](0, 0), std::exp(-h.values(k, 0)), 1e-8);
  }
  EXPECT_THROW(jacobian_flow(h, vf, Eigen::VectorXd::Constant(1, 0.8), 7), std::invalid_argument);
}

TEST(Jacobian, DuhamelMatchesDirectVariation) {
  Eigen::Vector2d a(0.3, 0.2);
  TimeGrid grid(1.0, 32);
  for (const char* name : {"elliptic-rot2d", "scalar-linear"}) {
    VectorFieldSystem vf = catalog(name);
    Eigen::VectorXd start = name == std::string("scalar-linear") ? Eigen::VectorXd::Constant(1, 0.7)
                                                                 : Eigen::VectorXd(a);
    for (std::uint64_t seed : {101u, 102u, 103u, 104u, 105u, 106u, 107u, 108u, 109u, 110u}) {
      GridPath h = testutil::random_path(grid, vf.d, seed, 0.25);
      GridPath l = testutil::random_path(grid, vf.d, seed + 900, 0.25);
      VariationBundle vb = solve_variation(h, l, vf, start, 32);
      JacobianFlow flow = jacobian_flow(h, vf, start, 32);
      Eigen::MatrixXd duh = duhamel_first_variation(flow, l);
      EXPECT_LT((duh - vb.xi1).cwiseAbs().maxCoeff(), 1e-6) << name;
    }
  }
}

TEST(Jacobian, FlowRecordsSolutionStates) {
  TimeGrid grid(1.0, 16);
  VectorFieldSystem vf = catalog("elliptic-rot2d");
  Eigen::Vector2d a(0.1, -0.2);
  GridPath h = testutil::random_path(grid, 2, 12, 0.4);
  JacobianFlow flow = jacobian_flow(h, vf, a, 8);
  SolutionPath y = solve_young(h, vf, a, 8);
  EXPECT_LT((flow.states - y.states).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Variation, RoughRouteMatchesYoungRoute) {
  // Driving the extended system with the lift of (h, l) reproduces the Young
  // variation solution on smooth data.
  VectorFieldSystem vf = catalog("elliptic-rot2d");
  Eigen::Vector2d a(0.2, 0.1);
  TimeGrid grid(1.0, 128);
  GridPath h = testutil::smooth_path(grid, 2, 0.2, 0.4);
  GridPath l = testutil::smooth_path(grid, 2, 0.15, 1.3);
  VariationBundle young_route = solve_variation(h, l, vf, a, 16);
  GeometricRoughPath x = lift(h, 2, 2.2);
  VariationBundle rough_route = solve_variation(x, l, vf, a);
  EXPECT_LT((rough_route.y.states - young_route.y.states).cwiseAbs().maxCoeff(), 1e-4);
  EXPECT_LT((rough_route.xi1 - young_route.xi1).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_LT((rough_route.xi2 - young_route.xi2).cwiseAbs().maxCoeff(), 1e-2);
}

TEST(Guard, DivergenceRaisesWithFirstBadTime) {
  // Quadratic drift blows up in finite time once the trusted ball is huge.
  json drift = json::array({json{{"2", 1.0}}});
  VectorFieldSystem vf =
      catalog("polynomial", json{{"e", 1}, {"d", 1}, {"drift", drift}, {"radius", 1e9}, {"width", 1e2}});
  TimeGrid grid(1.0, 64);
  Eigen::VectorXd a = Eigen::VectorXd::Constant(1, 2.0);
  try {
    solve_young(GridPath::zero(grid, 1), vf, a, 4);
    FAIL() << "expected divergence";
  } catch (const divergence_error& ex) {
    EXPECT_GT(ex.first_bad_time(), 0.3);
    EXPECT_LT(ex.first_bad_time(), 0.8);
  }
}

TEST(Csv, SolutionAndVariationWriters) {
  TimeGrid grid(1.0, 4);
  VectorFieldSystem vf = catalog("additive", json{{"dim", 2}});
  GridPath h = testutil::random_path(grid, 2, 2, 0.3);
  SolutionPath y = solve_young(h, vf, Eigen::Vector2d::Zero(), 2);
  std::ostringstream os;
  write_solution_csv(os, y);
  std::istringstream in(os.str());
  std::string line;
  ASSERT_TRUE(std::getline(in, line));
  EXPECT_EQ(line, "t,y_0,y_1");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  EXPECT_EQ(rows, 5);

  VariationBundle vb = solve_variation(h, h, vf, Eigen::Vector2d::Zero(), 2);
  std::ostringstream os2;
  write_variation_csv(os2, vb);
  std::istringstream in2(os2.str());
  ASSERT_TRUE(std::getline(in2, line));
  EXPECT_EQ(line, "t,y_0,y_1,xi1_0,xi1_1,xi2_0,xi2_1");
}
