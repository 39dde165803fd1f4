#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "softlogic/nary.hpp"

using namespace softlogic;

namespace {

std::vector<double> row_of(const Matrix& m, std::size_t r) {
  auto s = m.row(r);
  return {s.begin(), s.end()};
}

}  // namespace

TEST(NaryForward, UnaryCaseMatchesAlgorithm) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int s = 0; s < 1000; ++s) {
    BeliefTable a(1, 1);
    a.entries(0, 0) = u(gen);
    a.entries(0, 1) = u(gen);
    Matrix y(1, 1);
    y(0, 0) = u(gen);
    EXPECT_EQ(nary_forward(y, a).z[0], unary_forward(y(0, 0), {a.entries(0, 0), a.entries(0, 1)}));
  }
}

TEST(NaryForward, SaturatedAndLookup) {
  const ParamTable theta = catalog_params(*find_catalog("and"));
  Matrix y(1, 2);
  y(0, 0) = 10.0;
  y(0, 1) = 10.0;
  EXPECT_EQ(nary_forward(y, theta).z[0], 1.0);
  // exact marginal trails the lookup by about exp(-|y| + |table|)
  EXPECT_NEAR(nary_forward_exact(y, params_to_table(theta))[0], 1.0, 1e-3);
  y(0, 1) = -10.0;
  EXPECT_EQ(nary_forward(y, theta).z[0], -1.0);
}

TEST(NaryForward, IntermediateTablesAreSubSelections) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  BeliefTable a(3, 1);
  for (double& v : a.entries.flat()) v = u(gen);
  Matrix y(1, 3);
  y(0, 0) = 20.0;  // antecedent 1 true
  y(0, 1) = -20.0;
  y(0, 2) = 20.0;
  const NaryResult r = nary_forward(y, a);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(r.state.tables[1](0, j), a.entries(0, 2 * j + 1), 1e-12);
  EXPECT_NEAR(r.z[0], a.entries(0, 0b101), 1e-12);
}

TEST(NaryForward, ChannelsAreIndependent) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  BeliefTable a(2, 3);
  for (double& v : a.entries.flat()) v = u(gen);
  Matrix y(3, 2);
  for (double& v : y.flat()) v = u(gen);
  const auto z = nary_forward(y, a).z;
  for (std::size_t k = 0; k < 3; ++k) {
    BeliefTable one(2, Matrix::from_rows({row_of(a.entries, k)}));
    Matrix yk = Matrix::from_rows({row_of(y, k)});
    EXPECT_EQ(nary_forward(yk, one).z[0], z[k]);
  }
}

TEST(NaryForward, ProximityToExact) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  for (int n = 1; n <= 5; ++n)
    for (int s = 0; s < 200; ++s) {
      BeliefTable a(n, 1);
      for (double& v : a.entries.flat()) v = u(gen);
      Matrix y(1, static_cast<std::size_t>(n));
      for (double& v : y.flat()) v = u(gen);
      const double exact = oracle::marginal(row_of(y, 0), row_of(a.entries, 0));
      EXPECT_NEAR(nary_forward_exact(y, a)[0], exact, 1e-9);
      EXPECT_LE(std::abs(nary_forward(y, a).z[0] - exact), n * std::log(4.0) + 1e-9);
    }
}

TEST(NaryForward, RejectsBadShapes) {
  const BeliefTable a(2, 2);
  EXPECT_THROW(nary_forward(Matrix(2, 3), a), std::invalid_argument);
  EXPECT_THROW(nary_forward(Matrix(1, 2), a), std::invalid_argument);
  EXPECT_THROW(nary_forward(Matrix(1, 9), BeliefTable(9, 1)), std::invalid_argument);
  Matrix y(2, 2);
  y(0, 0) = std::nan("");
  EXPECT_THROW(nary_forward(y, a), std::invalid_argument);
}

TEST(NaryBackward, MatchesFiniteDifferencesInParameterSpace) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const double h = 1e-6;
  for (int n = 1; n <= 5; ++n)
    for (int s = 0; s < 40; ++s) {
      ParamTable theta(n, 2);
      for (double& v : theta.entries.flat()) v = u(gen);
      Matrix y(2, static_cast<std::size_t>(n));
      for (double& v : y.flat()) v = 3.0 * u(gen);
      const std::vector<double> up{0.7, -1.3};
      auto loss = [&](const Matrix& yy, const ParamTable& t) {
        const auto z = nary_forward(yy, t).z;
        return up[0] * z[0] + up[1] * z[1];
      };
      const NaryResult r = nary_forward(y, theta);
      const NaryGrad g = nary_backward(r.state, theta, up);
      for (std::size_t i = 0; i < theta.entries.size(); ++i) {
        ParamTable p = theta, m = theta;
        p.entries.flat()[i] += h;
        m.entries.flat()[i] -= h;
        const double fd = (loss(y, p) - loss(y, m)) / (2 * h);
        EXPECT_NEAR(fd, g.params.flat()[i], 1e-5 * std::max(1.0, std::abs(fd)));
      }
      for (std::size_t i = 0; i < y.size(); ++i) {
        Matrix p = y, m = y;
        p.flat()[i] += h;
        m.flat()[i] -= h;
        const double fd = (loss(p, theta) - loss(m, theta)) / (2 * h);
        EXPECT_NEAR(fd, g.antecedents.flat()[i], 1e-5 * std::max(1.0, std::abs(fd)));
      }
    }
}

TEST(NaryBackward, RejectsStaleState) {
  ParamTable theta(2, 1);
  theta.entries(0, 1) = 1.0;
  Matrix y(1, 2);
  const NaryResult r = nary_forward(y, theta);
  theta.entries(0, 2) = 0.5;
  EXPECT_THROW(nary_backward(r.state, theta, std::vector<double>{1.0}), std::invalid_argument);
  EXPECT_THROW(nary_table_backward(r.state, std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST(NaryBackward, SingleNonzeroTableGradient) {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  for (int s = 0; s < 2000; ++s) {
    const int n = 1 + s % 5;
    BeliefTable a(n, 1);
    for (double& v : a.entries.flat()) v = u(gen);
    Matrix y(1, static_cast<std::size_t>(n));
    for (double& v : y.flat()) v = 2.0 * u(gen);
    const NaryGrad g = nary_table_backward(nary_forward(y, a).state, std::vector<double>{1.0});
    int nonzero = 0;
    for (double v : g.params.flat()) nonzero += v != 0.0;
    EXPECT_LE(nonzero, 1);
  }
}

TEST(ExactBackward, TableGradientIsVertexWeight) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int n = 1; n <= 4; ++n) {
    BeliefTable a(n, 1);
    for (double& v : a.entries.flat()) v = u(gen);
    Matrix y(1, static_cast<std::size_t>(n));
    for (double& v : y.flat()) v = u(gen);
    const ExactGrad g = nary_backward_exact(y, a, std::vector<double>{2.0});
    for (std::size_t j = 0; j < a.entries.cols(); ++j)
      EXPECT_NEAR(g.table(0, j), 2.0 * oracle::vertex_weight(row_of(y, 0), j), 1e-12);
  }
}

TEST(ExactBackward, AttenuationAtUniformUncertainty) {
  BeliefTable a(4, 1);
  for (std::size_t j = 0; j < 16; ++j) a.entries(0, j) = 1.0 + 0.25 * static_cast<double>(j);
  const Matrix y(1, 4);
  const ExactGrad eg = nary_backward_exact(y, a, std::vector<double>{1.0});
  double sum = 0.0;
  for (double g : eg.table.flat()) {
    EXPECT_NEAR(g, 1.0 / 16.0, 1e-12);
    sum += g;
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
  const NaryGrad lg = nary_table_backward(nary_forward(y, a).state, std::vector<double>{1.0});
  EXPECT_EQ(lg.params(0, 0), 1.0);  // the minimum entry carries everything
  for (std::size_t j = 1; j < 16; ++j) EXPECT_EQ(lg.params(0, j), 0.0);
}

TEST(Irrelevance, SignFlipInvariance) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int s = 0; s < 500; ++s) {
    const int n = 1 + s % 5;
    const int chosen = 1 + (s / 5) % n;
    ParamTable theta(n, 1);
    for (std::size_t j = 0; j < theta.entries.cols(); ++j)
      theta.entries(0, j) = bit_of(j, chosen) ? 0.0 : u(gen);
    Matrix y(1, static_cast<std::size_t>(n));
    for (double& v : y.flat()) v = 2.0 * u(gen);
    const double z = nary_forward(y, theta).z[0];
    y(0, static_cast<std::size_t>(chosen - 1)) = -y(0, static_cast<std::size_t>(chosen - 1));
    EXPECT_EQ(nary_forward(y, theta).z[0], z);
  }
}

TEST(Ail, Formulas) {
  EXPECT_EQ(ail(AilKind::and_, 0.0, 0.0), 0.0);
  EXPECT_EQ(ail(AilKind::and_, 2.0, 3.0), 2.0);
  EXPECT_EQ(ail(AilKind::and_, -2.0, -3.0), -5.0);
  EXPECT_EQ(ail(AilKind::or_, -2.0, -3.0), -2.0);
  EXPECT_EQ(ail(AilKind::or_, 2.0, 3.0), 5.0);
  EXPECT_EQ(ail(AilKind::xnor, -2.0, 3.0), -2.0);
  EXPECT_EQ(ail(AilKind::xnor, -4.0, -3.0), 3.0);
  EXPECT_FALSE(parse_ail("nand"));
}

TEST(Ail, RecoveredByHardTables) {
  for (AilKind kind : {AilKind::and_, AilKind::or_, AilKind::xnor}) {
    BeliefTable a(2, 1);
    const auto truth = ail_truth_table(kind);
    for (std::size_t j = 0; j < 4; ++j) a.entries(0, j) = 100.0 * truth[j];
    Matrix y(1, 2);
    for (double y1 = -10.0; y1 <= 10.0; y1 += 0.5)
      for (double y2 = -10.0; y2 <= 10.0; y2 += 0.5) {
        y(0, 0) = y1;
        y(0, 1) = y2;
        EXPECT_NEAR(nary_forward(y, a).z[0], ail(kind, y1, y2), 1e-9);
      }
  }
}
