#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "simid/solver.hpp"

using namespace simid;

namespace {

std::vector<double> flat(const Channel& ch) {
  std::vector<double> t;
  for (std::size_t x = 0; x < ch.input_size(); ++x)
    for (std::size_t u = 0; u < ch.output_size(); ++u) t.push_back(ch(x, u));
  return t;
}

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("binary R(D) against the closed form") {
    for (double p : {0.5, 0.3, 0.11}) {
      for (double d : {0.01, 0.05, 0.1, 0.2}) {
        const auto rep = rate_distortion(Pmf::bernoulli(p), DistortionMatrix::hamming(2), d, 1e-7);
        CHECK(rep.optimal_rate == doctest::Approx(static_cast<double>(oracle::binary_rd(p, d))).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("m-ary uniform R(D) against log m - h(D) - D log(m-1)") {
    for (std::size_t m : {3, 4}) {
      for (double d : {0.05, 0.2, 0.4}) {
        const auto rep = rate_distortion(Pmf::uniform(m), DistortionMatrix::hamming(m), d, 1e-7);
        const double want =
            std::log2(static_cast<double>(m)) - static_cast<double>(oracle::h2(d)) - d * std::log2(m - 1.0);
        CHECK(rep.optimal_rate == doctest::Approx(want).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("report is self-consistent") {
    oracle::Gen g(31);
    for (int t = 0; t < 40; ++t) {
      const std::size_t n = 2 + g.below(2), k = 2 + g.below(2);
      const auto px = g.pmf(n, 0.05);
      std::vector<double> c(n * k);
      for (auto& v : c) v = g.uniform(-1, 1);
      const ScoreTable table(n, k, c);
      const Pmf p(px);
      const double s0 = table.best_constant(p), smax = table.best_pointwise(p);
      if (smax - s0 < 1e-3) continue;
      const double thr = s0 + g.uniform(0.2, 0.8) * (smax - s0);
      const auto rep = min_mi_linear_constraint(p, {table, thr}, k, 1e-6);
      REQUIRE(rep.status == SolverStatus::Optimal);
      const double mi = static_cast<double>(oracle::mutual_information(px, flat(rep.channel), k));
      CHECK(std::abs(mi - rep.optimal_rate) <= 1e-9);
      CHECK(table.expected(p, rep.channel) >= thr - 1e-9);
      CHECK(rep.duality_gap <= 1e-6);
      CHECK(rep.duality_gap >= -1e-9);
    }
  }

  TEST_CASE("statuses") {
    const Pmf p = Pmf::uniform(2);
    const ScoreTable c(2, 2, {1, -1, -1, 1});
    auto inactive = min_mi_linear_constraint(p, {c, -0.5}, 2, 1e-5);
    CHECK(inactive.status == SolverStatus::ConstraintInactive);
    CHECK(inactive.optimal_rate == 0.0);
    auto infeasible = min_mi_linear_constraint(p, {c, 1.5}, 2, 1e-5);
    CHECK(infeasible.status == SolverStatus::Infeasible);
    CHECK(std::isinf(infeasible.optimal_rate));
    // threshold at the pointwise maximum: deterministic identity channel, rate H(X)
    auto edge = min_mi_linear_constraint(p, {c, 1.0}, 2, 1e-6);
    CHECK(edge.optimal_rate == doctest::Approx(1.0).epsilon(1e-5));
  }

  TEST_CASE("argument checks") {
    const Pmf p = Pmf::uniform(2);
    const ScoreTable c(2, 2, {1, -1, -1, 1});
    CHECK_THROWS_AS(min_mi_linear_constraint(p, {c, 0.2}, 2, 0.0), BadTolerance);
    CHECK_THROWS_AS(min_mi_linear_constraint(p, {c, 0.2}, 2, 0.5), BadTolerance);
    CHECK_THROWS_AS(min_mi_linear_constraint(p, {c, 0.2}, 3, 1e-4), DimensionMismatch);
    CHECK_THROWS_AS(ScoreTable(2, 2, {1, 2, 3}), DimensionMismatch);
    CHECK_THROWS_AS(rate_distortion(p, DistortionMatrix::hamming(2), 2.0, 1e-4), DomainError);
  }

  TEST_CASE("zero-probability source letters") {
    const Pmf p({0.5, 0.0, 0.5});
    const auto rep = rate_distortion(p, DistortionMatrix::hamming(3), 0.1, 1e-7);
    CHECK(rep.optimal_rate == doctest::Approx(static_cast<double>(oracle::binary_rd(0.5, 0.1))).epsilon(1e-6));
    CHECK(rep.channel.input_size() == 3);
  }

  TEST_CASE("distortion-rate inverts rate-distortion") {
    const Pmf p = Pmf::uniform(2);
    for (double r : {0.1, 0.5, 0.9}) {
      const auto dr = distortion_rate(p, DistortionMatrix::hamming(2), r, 1e-7);
      CHECK(dr.d_of_r == doctest::Approx(static_cast<double>(oracle::h2_inverse(1 - r))).epsilon(1e-5));
      CHECK(dr.rate <= r + 1e-7);
    }
    const auto zero = distortion_rate(Pmf({0.7, 0.3}), DistortionMatrix::hamming(2), 0.0, 1e-6);
    CHECK(zero.d_of_r == doctest::Approx(0.3));
  }

  TEST_CASE("max score certificate") {
    oracle::Gen g(32);
    for (int t = 0; t < 20; ++t) {
      const Pmf p(g.pmf(3, 0.05));
      std::vector<double> c(9);
      for (auto& v : c) v = g.uniform(-1, 1);
      const ScoreTable table(3, 3, c);
      const double r = g.uniform(0.05, 1.2);
      const auto rep = max_score_rate_constraint(p, table, r, 1e-6);
      CHECK(rep.rate <= r + 1e-7);
      CHECK(rep.upper_bound >= rep.score - 1e-9);
      CHECK(rep.upper_bound - rep.score <= 1e-5);
      // and the min-rate solver agrees at the attained score
      const auto back = min_mi_linear_constraint(p, {table, rep.score - 1e-6}, 3, 1e-6);
      CHECK(back.optimal_rate <= r + 1e-4);
    }
  }

  TEST_CASE("grid oracle agrees on small instances") {
    oracle::Gen g(33);
    for (int t = 0; t < 5; ++t) {
      const Pmf p(g.pmf(2, 0.1));
      std::vector<double> c(4);
      for (auto& v : c) v = g.uniform(-1, 1);
      const ScoreTable table(2, 2, c);
      const double s0 = table.best_constant(p), smax = table.best_pointwise(p);
      if (smax - s0 < 1e-2) continue;
      const LinearScore ls{table, s0 + 0.5 * (smax - s0)};
      const double grid = grid_oracle(p, ls, 2, 0.002);
      const auto rep = min_mi_linear_constraint(p, ls, 2, 1e-6);
      CHECK(rep.optimal_rate <= grid + 1e-9);  // grid points are feasible channels
      CHECK(grid - rep.optimal_rate <= 2e-3);
    }
    CHECK_THROWS_AS(grid_oracle(Pmf::uniform(2), {ScoreTable(2, 2, {1, 0, 0, 1}), 0.5}, 2, 1e-3, 10.0),
                    BudgetExceeded);
  }
}
