#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "simid/transport.hpp"

using namespace simid;

namespace {

DistortionMatrix random_matrix(oracle::Gen& g, std::size_t m, std::size_t k) {
  std::vector<double> v(m * k);
  for (auto& x : v) x = g.uniform(0, 2);
  return DistortionMatrix(m, k, v);
}

double max_of_pieces(const std::vector<DualVertex>& vs, const Pmf& p) {
  double best = -1e300;
  for (const auto& v : vs) best = std::max(best, v.evaluate(p));
  return best;
}

}  // namespace

TEST_SUITE("transport") {
  TEST_CASE("binary example") {
    const auto r = rho_bar(Pmf::bernoulli(0.1), Pmf::bernoulli(0.5), DistortionMatrix::hamming(2));
    CHECK(r.value == doctest::Approx(0.4).epsilon(1e-12));
    // witness is a coupling with the right marginals
    CHECK(r.witness.joint[0] + r.witness.joint[1] == doctest::Approx(0.9));
    CHECK(r.witness.joint[0] + r.witness.joint[2] == doctest::Approx(0.5));
  }

  TEST_CASE("identical marginals cost zero under a zero-diagonal distortion") {
    const Pmf p({0.2, 0.5, 0.3});
    CHECK(rho_bar(p, p, DistortionMatrix::hamming(3)).value == doctest::Approx(0.0).epsilon(1e-15));
  }

  TEST_CASE("matches the primal basis enumeration oracle") {
    oracle::Gen g(21);
    for (int t = 0; t < 300; ++t) {
      const std::size_t m = 2 + g.below(3), k = 2 + g.below(3);
      const auto rho = random_matrix(g, m, k);
      const auto p = g.pmf(m), q = g.pmf(k);
      const auto res = rho_bar(Pmf(p), Pmf(q), rho);
      const double want = oracle::rho_bar_primal(p, q, std::vector<double>(rho.data().begin(), rho.data().end()));
      CHECK(std::abs(res.value - want) <= 1e-10);
      // strong duality: alpha.p + beta.q == value
      double dual = 0;
      for (std::size_t i = 0; i < m; ++i) dual += res.dual.alpha[i] * p[i];
      for (std::size_t j = 0; j < k; ++j) dual += res.dual.beta[j] * q[j];
      CHECK(std::abs(dual - res.value) <= 1e-10);
    }
  }

  TEST_CASE("degenerate marginals") {
    // zeros in both marginals force degenerate pivots
    const Pmf p({0.5, 0.0, 0.5}), q({0.0, 0.5, 0.5});
    const auto rho = DistortionMatrix::hamming(3);
    CHECK(rho_bar(p, q, rho).value == doctest::Approx(0.5));
    CHECK(rho_bar(Pmf::point_mass(3, 0), Pmf::point_mass(3, 2), rho).value == doctest::Approx(1.0));
  }

  TEST_CASE("hamming closed form") {
    oracle::Gen g(22);
    for (int t = 0; t < 200; ++t) {
      const std::size_t n = 2 + g.below(4);
      const Pmf p(g.pmf(n)), q(g.pmf(n));
      CHECK(std::abs(rho_bar(p, q, DistortionMatrix::hamming(n)).value - rho_bar_hamming(p, q)) <= 1e-12);
    }
    CHECK_THROWS_AS(rho_bar_hamming(Pmf::uniform(2), Pmf::uniform(3)), DimensionMismatch);
  }

  TEST_CASE("dimension checks") {
    CHECK_THROWS_AS(rho_bar(Pmf::uniform(2), Pmf::uniform(3), DistortionMatrix::hamming(2)), DimensionMismatch);
  }

  TEST_CASE("spanning trees of K_{m,k}") {
    // K_{m,k} has m^(k-1) k^(m-1) spanning trees.
    for (auto [m, k] : {std::pair{2, 2}, {2, 3}, {3, 3}, {3, 4}}) {
      std::size_t count = 0;
      for_each_bipartite_spanning_tree(m, k, 10'000'000, [&](const std::vector<std::size_t>&) { ++count; });
      const double want = std::pow(m, k - 1) * std::pow(k, m - 1);
      CHECK(static_cast<double>(count) == want);
    }
    CHECK_THROWS_AS(for_each_bipartite_spanning_tree(6, 6, 1000, [](const std::vector<std::size_t>&) {}),
                    BudgetExceeded);
  }

  TEST_CASE("dual vertices reproduce rho_bar as a max of linear pieces") {
    oracle::Gen g(23);
    for (int mat = 0; mat < 4; ++mat) {
      const auto rho = random_matrix(g, 3, 3);
      const Pmf q(g.pmf(3));
      const auto vs = dual_vertices(rho, q);
      REQUIRE_FALSE(vs.empty());
      for (int t = 0; t < 100; ++t) {
        const Pmf p(g.pmf(3));
        CHECK(std::abs(max_of_pieces(vs, p) - rho_bar(p, q, rho).value) <= 1e-8);
      }
    }
  }

  TEST_CASE("hamming 3x3 has the six sign-vector pieces") {
    const auto vs = dual_vertices(DistortionMatrix::hamming(3), Pmf({0.8, 0.1, 0.1}));
    CHECK(vs.size() == 6);
    for (const auto& v : vs) {
      // alpha pinned at alpha(0)=0 and takes values in {-1,0,1}
      CHECK(v.alpha[0] == 0.0);
      for (double a : v.alpha) CHECK((a == -1.0 || a == 0.0 || a == 1.0));
    }
  }
}
