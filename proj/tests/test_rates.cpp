#include <doctest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "simid/rates.hpp"

using namespace simid;

namespace {

const Pmf kTernary({0.8, 0.1, 0.1});

std::vector<double> flat(const Channel& ch) {
  std::vector<double> t;
  for (std::size_t x = 0; x < ch.input_size(); ++x)
    for (std::size_t u = 0; u < ch.output_size(); ++u) t.push_back(ch(x, u));
  return t;
}

}  // namespace

TEST_SUITE("rates") {
  TEST_CASE("sign pattern counts") {
    CHECK(sign_pattern_count(2, 2) == 1);
    CHECK(sign_pattern_count(3, 3) == 20);
    CHECK(sign_pattern_count(4, 4) == 1001);
    CHECK(sign_pattern_count(5, 5) == 142506);
    CHECK(sign_pattern_count(2, 3) == 0);
    CHECK(sign_pattern_count(3, 4) == 15);
  }

  TEST_CASE("sign pattern stream yields each admissible pattern once") {
    for (std::size_t x = 2; x <= 4; ++x) {
      for (std::size_t u = 1; u <= x + 1; ++u) {
        const auto all = enumerate_sign_patterns(x, u);
        CHECK(all.size() == sign_pattern_count(x, u));
        std::set<std::vector<std::uint32_t>> seen;
        for (const auto& f : all) {
          CHECK(seen.insert(f.columns()).second);
          for (std::size_t c = 1; c < f.u_size(); ++c) CHECK(f.columns()[c - 1] < f.columns()[c]);
        }
      }
    }
    // |X|=5 is streamed lazily
    SignPatternStream s(5, 5);
    std::uint64_t n = 0;
    while (s.next()) ++n;
    CHECK(n == 142506);
    CHECK_THROWS_AS(SignPatternStream(5, 5, 1000), BudgetExceeded);
  }

  TEST_CASE("sign pattern invariants") {
    CHECK_THROWS_AS(SignPattern(2, {0b00}), InvalidArgument);  // constant column
    CHECK_THROWS_AS(SignPattern(2, {0b11}), InvalidArgument);
    CHECK_THROWS_AS(SignPattern(3, {0b001, 0b001}), InvalidArgument);  // duplicate
    const SignPattern f(2, {0b10, 0b01});
    CHECK(f(0, 0) == 0);
    CHECK(f(1, 0) == 1);
    CHECK(f.to_string() == "01;10");
  }

  TEST_CASE("balanced-column score table") {
    const SignPattern f(2, {0b10, 0b01});  // f = [[0,1],[1,0]]
    const auto c = linear_score_of_pattern(f, Pmf::uniform(2), Pmf::uniform(2));
    CHECK(c(0, 0) == 1.0);
    CHECK(c(0, 1) == -1.0);
    CHECK(c(1, 0) == -1.0);
    CHECK(c(1, 1) == 1.0);
  }

  TEST_CASE("per-(x,u) scores reproduce L_f on random channels") {
    oracle::Gen g(41);
    for (int t = 0; t < 1000; ++t) {
      const std::size_t n = 2 + g.below(3);
      const std::size_t u = 1 + g.below(static_cast<std::size_t>(std::min<std::uint64_t>(sign_pattern_count(n, 1), 4)));
      const auto patterns = enumerate_sign_patterns(n, u);
      const auto& f = patterns[g.below(patterns.size())];
      const auto px = g.pmf(n), py = g.pmf(n);
      std::vector<double> ch;
      for (std::size_t x = 0; x < n; ++x) {
        const auto row = g.pmf(u);
        ch.insert(ch.end(), row.begin(), row.end());
      }
      std::vector<std::vector<int>> ftab(n, std::vector<int>(u));
      for (std::size_t x = 0; x < n; ++x)
        for (std::size_t k = 0; k < u; ++k) ftab[x][k] = f(x, k);
      const auto table = linear_score_of_pattern(f, Pmf(px), Pmf(py));
      const double got = table.expected(Pmf(px), Channel(n, u, ch));
      CHECK(std::abs(got - static_cast<double>(oracle::l_f_direct(ftab, px, py, ch, u))) <= 1e-12);
    }
  }

  TEST_CASE("binary symmetric identification rate") {
    for (double d : {0.05, 0.1, 0.2, 0.3}) {
      const auto res = r_id_hamming(Pmf::uniform(2), Pmf::uniform(2), d, 2, {1e-6});
      CHECK(res.status == RateStatus::Optimal);
      CHECK(res.rate == doctest::Approx(static_cast<double>(oracle::binary_rd(0.5, 0.5 - d))).epsilon(1e-5));
      CHECK(res.winning_pattern.has_value());
      const double mi = static_cast<double>(oracle::mutual_information({0.5, 0.5}, flat(res.achieving_channel), 2));
      CHECK(std::abs(mi - res.rate) <= 1e-9);
    }
  }

  TEST_CASE("zero rate at or below rho_bar and infeasible above the maximum") {
    const Pmf p = Pmf::bernoulli(0.2), q = Pmf::bernoulli(0.5);
    const auto zero = r_id_hamming(p, q, 0.3, 2);
    CHECK(zero.status == RateStatus::ZeroRate);
    CHECK(zero.rate == 0.0);
    CHECK(r_id_hamming(p, q, 0.31, 2).rate > 0.0);
    // max achievable distortion for uniform q is 1/2
    const auto inf = r_id_hamming(Pmf::uniform(2), q, 0.6, 2);
    CHECK(inf.status == RateStatus::Infeasible);
    CHECK(std::isinf(inf.rate));
    CHECK_THROWS_AS(r_id_hamming(p, Pmf::uniform(3), 0.1, 2), DimensionMismatch);
    CHECK_THROWS_AS(r_id_hamming(p, q, 1.5, 2), DomainError);
  }

  TEST_CASE("rate is the minimum over per-pattern values") {
    const auto res = r_id_hamming(kTernary, kTernary, 0.2, 3, {1e-6});
    REQUIRE(res.per_pattern_values.size() == 20);
    double best = INFINITY;
    for (double v : res.per_pattern_values) best = std::min(best, v);
    CHECK(res.rate == best);
    CHECK(res.per_pattern_values[static_cast<std::size_t>(res.winning_index)] == best);
  }

  TEST_CASE("parallel map is deterministic") {
    RateOptions one{1e-5, 1}, four{1e-5, 4};
    for (double d : {0.1, 0.25, 0.32}) {
      const auto a = r_id_hamming(kTernary, kTernary, d, 3, one);
      const auto b = r_id_hamming(kTernary, kTernary, d, 3, four);
      CHECK(a.rate == b.rate);
      CHECK(a.winning_index == b.winning_index);
      CHECK(a.per_pattern_values == b.per_pattern_values);
    }
  }

  TEST_CASE("cardinality |X|+1 never exceeds |X|") {
    for (double d : {0.1, 0.2, 0.3, 0.32, 0.335}) {
      const double u3 = r_id_hamming(kTernary, kTernary, d, 3, {1e-5}).rate;
      const double u4 = r_id_hamming(kTernary, kTernary, d, 4, {1e-5}).rate;
      CHECK(u4 <= u3 + 2e-5);
    }
    const double u3 = r_id_hamming(kTernary, kTernary, 0.32, 3, {1e-5}).rate;
    const double u4 = r_id_hamming(kTernary, kTernary, 0.32, 4, {1e-5}).rate;
    CHECK(u3 - u4 > 1e-3);
  }

  TEST_CASE("general distortion path matches the Hamming path") {
    const auto h = DistortionMatrix::hamming(3);
    for (double d : {0.05, 0.15, 0.25, 0.33}) {
      const auto a = r_id_hamming(kTernary, kTernary, d, 3, {1e-5});
      const auto b = r_id_general(kTernary, kTernary, h, d, 3, {1e-5});
      CHECK(std::abs(a.rate - b.rate) <= 2e-5);
    }
    const Pmf p({0.5, 0.3, 0.2}), q({0.2, 0.3, 0.5});
    CHECK(r_id_general(p, q, h, 0.1, 3).status == RateStatus::ZeroRate);
  }

  TEST_CASE("vertex combinations lose nothing against full assignment enumeration") {
    oracle::Gen g(42);
    for (int t = 0; t < 6; ++t) {
      std::vector<double> v(9);
      for (std::size_t i = 0; i < 9; ++i) v[i] = (i % 4 == 0) ? 0.0 : g.uniform(0.2, 1.5);
      const DistortionMatrix rho(3, 3, v);
      const Pmf p(g.pmf(3, 0.05)), q(g.pmf(3, 0.05));
      const double lo = rho_bar(p, q, rho).value;
      // largest D reachable: best pointwise piece value
      const double d = lo + 0.3 * (0.5 * rho.rho_max() - lo);
      if (d <= lo) continue;
      RateOptions comb{1e-5};
      RateOptions full{1e-5};
      full.full_enumeration = true;
      const auto a = r_id_general(p, q, rho, d, 3, comb);
      const auto b = r_id_general(p, q, rho, d, 3, full);
      CHECK(a.status == b.status);
      if (a.status == RateStatus::Optimal) CHECK(std::abs(a.rate - b.rate) <= 2e-5);
    }
  }

  TEST_CASE("asymmetric distortion against the grid oracle") {
    const DistortionMatrix rho({{0.0, 1.0, 0.5}, {0.3, 0.0, 1.0}, {0.8, 0.6, 0.0}});
    const Pmf p({0.5, 0.3, 0.2});
    const double d = rho_bar(p, p, rho).value + 0.15;
    const auto res = r_id_general(p, p, rho, d, 3, {1e-6});
    REQUIRE(res.status == RateStatus::Optimal);
    CHECK(res.rate >= 0.0);
    CHECK(res.rate <= std::log2(3.0));
    // brute force: min over pieces-assignments evaluated on a coarse channel grid
    const auto pieces = rho_bar_pieces(rho, p);
    double best = INFINITY;
    for (std::size_t a = 0; a < pieces.size(); ++a)
      for (std::size_t b = a + 1; b < pieces.size(); ++b)
        for (std::size_t c = b + 1; c < pieces.size(); ++c) {
          std::vector<double> tab(9);
          const std::size_t pick[3] = {a, b, c};
          for (std::size_t x = 0; x < 3; ++x)
            for (std::size_t u = 0; u < 3; ++u) tab[x * 3 + u] = pieces[pick[u]].alpha[x] + pieces[pick[u]].offset_on_py;
          best = std::min(best, grid_oracle(p, {ScoreTable(3, 3, tab), d}, 3, 0.05));
        }
    CHECK(res.rate <= best + 1e-9);
    CHECK(best - res.rate <= 0.05);
  }

  TEST_CASE("curve: zero below rho_bar, convex and nondecreasing") {
    const auto h = DistortionMatrix::hamming(3);
    const Pmf p({0.5, 0.3, 0.2}), q({0.3, 0.3, 0.4});
    const auto below = r_id_curve(p, q, h, {0.02, 0.05, 0.1}, {1e-5}, false);
    for (const auto& pt : below.envelope.points()) CHECK(pt.r == 0.0);

    std::vector<double> grid;
    for (int k = 1; k <= 16; ++k) grid.push_back(0.34 * k / 17.0);
    const auto c = r_id_curve(kTernary, kTernary, h, grid, {1e-5}, true);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(c.envelope[i].r <= c.raw[i].r + 1e-9);
      CHECK(c.strict_cardinality[i] <= c.raw[i].r + 2e-5);
      if (i > 0) CHECK(c.envelope[i].r >= c.envelope[i - 1].r - 1e-5);
      if (i > 0 && i + 1 < grid.size())
        CHECK(c.envelope[i - 1].r + c.envelope[i + 1].r - 2 * c.envelope[i].r >= -1e-9);
    }
  }

  TEST_CASE("binary symmetric curve matches the closed form") {
    std::vector<double> grid{0.05, 0.1, 0.2, 0.3, 0.4};
    const auto c = r_id_curve(Pmf::uniform(2), Pmf::uniform(2), DistortionMatrix::hamming(2), grid, {1e-5}, false);
    for (std::size_t i = 0; i < grid.size(); ++i)
      CHECK(std::abs(c.envelope[i].r - closed_form_binary_symmetric(0.5, grid[i])) <= 2e-3);
  }

  TEST_CASE("TC equals R_ID in the binary Hamming case") {
    oracle::Gen g(43);
    const auto h = DistortionMatrix::hamming(2);
    for (int t = 0; t < 5; ++t) {
      const Pmf p = Pmf::bernoulli(g.uniform(0.05, 0.95)), q = Pmf::bernoulli(g.uniform(0.05, 0.95));
      const double lo = rho_bar_hamming(p, q);
      const double hi = std::max(p[0] * q[1] + p[1] * q[0], std::max(p[0], p[1]) * 0 + std::max(q[0], q[1]));
      for (double frac : {0.0, 0.3, 0.6}) {
        const double d = std::min(lo + frac * (hi - lo), 0.999);
        const auto id = r_id_hamming(p, q, d, 2, {1e-4});
        const auto tc = r_id_tc(p, q, h, d, 1e-4);
        if (id.status == RateStatus::Infeasible) {
          CHECK(tc.status == SolverStatus::Infeasible);
          continue;
        }
        CHECK(std::abs(id.rate - tc.optimal_rate) <= 2e-4);
      }
    }
    // binary zero-rate case d <= |p - q|
    CHECK(r_id_tc(Pmf::bernoulli(0.2), Pmf::bernoulli(0.6), h, 0.35, 1e-4).optimal_rate == 0.0);
    CHECK(r_id_tc(Pmf::bernoulli(0.2), Pmf::bernoulli(0.6), h, 0.4, 1e-4).optimal_rate <= 1e-4);
  }

  TEST_CASE("triangle-scheme endpoints") {
    const auto h2 = DistortionMatrix::hamming(2);
    CHECK(d_id_lc(Pmf::uniform(2), Pmf::uniform(2), h2, 1.0, 1e-6) == doctest::Approx(0.5).epsilon(1e-4));
    const auto h3 = DistortionMatrix::hamming(3);
    CHECK(d_id_tc(kTernary, Pmf::uniform(3), h3, std::log2(3.0), 1e-6) == doctest::Approx(2.0 / 3.0).epsilon(1e-4));
  }

  TEST_CASE("equiprobable query: TC and LC both equal D0 - D(R)") {
    const Pmf p({0.6, 0.3, 0.1});
    const auto h = DistortionMatrix::hamming(3);
    const Pmf q = Pmf::uniform(3);
    for (double r : {0.2, 0.5, 1.0}) {
      const double dr = distortion_rate(p, h, r, 1e-7).d_of_r;
      const double tc = d_id_tc(p, q, h, r, 1e-5);
      const double lc = d_id_lc(p, q, h, r, 1e-5);
      CHECK(std::abs(tc - (2.0 / 3.0 - dr)) <= 2e-4);
      CHECK(std::abs(lc - (2.0 / 3.0 - dr)) <= 2e-4);
    }
  }

  TEST_CASE("ordering R_ID <= R_TC <= R_LC on the ternary source") {
    const auto h = DistortionMatrix::hamming(3);
    const double tol = 1e-4;
    const LcInverter lc(kTernary, kTernary, h, tol);
    bool strict_tc = false, strict_lc = false;
    for (double d : {0.05, 0.1, 0.15, 0.2, 0.25, 0.3}) {
      const double id = r_id_hamming(kTernary, kTernary, d, 3, {tol}).rate;
      const double tc = r_id_tc(kTernary, kTernary, h, d, tol).optimal_rate;
      const double l = lc.rate_for(d).rate;
      CHECK(id <= tc + 2 * tol);
      CHECK(tc <= l + 4 * tol);
      strict_tc = strict_tc || tc - id > 5e-3;
      strict_lc = strict_lc || l - tc > 5e-3;
    }
    CHECK(strict_tc);
    CHECK(strict_lc);
  }

  TEST_CASE("triangle schemes can need positive rate below rho_bar") {
    // rho_bar = 0.4 here, yet no constant reconstruction reaches D = 0.35
    const Pmf p({0.4, 0.4, 0.2}), q({0.2, 0.2, 0.6});
    const auto h = DistortionMatrix::hamming(3);
    CHECK(rho_bar_hamming(p, q) == doctest::Approx(0.4));
    CHECK(r_id_hamming(p, q, 0.35, 3).rate == 0.0);
    CHECK(r_id_tc(p, q, h, 0.35, 1e-4).optimal_rate > 0.01);
  }

  TEST_CASE("triangle property is required") {
    const DistortionMatrix sq({{0, 1, 4}, {1, 0, 1}, {4, 1, 0}});
    const Pmf p = Pmf::uniform(3);
    CHECK_THROWS_AS(r_id_tc(p, p, sq, 0.1, 1e-4), TriangleViolation);
    CHECK_THROWS_AS(d_id_lc(p, p, sq, 0.5, 1e-4), TriangleViolation);
    CHECK_THROWS_AS(d_id_tc(p, p, sq, 0.5, 1e-4), TriangleViolation);
  }

  TEST_CASE("hamming lower bound") {
    const Pmf p = Pmf::uniform(2);
    CHECK(hamming_lower_bound(p, p, 0.25).value == doctest::Approx(0.18034).epsilon(1e-4));
    CHECK(hamming_lower_bound(p, p, 0.0).value == 0.0);
    CHECK(hamming_lower_bound(Pmf::bernoulli(0.9), Pmf::bernoulli(0.1), 0.1).value == 0.0);
    const auto inf = hamming_lower_bound(p, Pmf::point_mass(2, 0), 0.3);
    CHECK(inf.kl_infinite);
    CHECK(inf.value == 0.0);
    for (double d : {0.1, 0.2, 0.3}) {
      CHECK(hamming_lower_bound(kTernary, kTernary, d).value <= r_id_hamming(kTernary, kTernary, d, 3).rate + 1e-4);
    }
  }

  TEST_CASE("closed form for uniform queries") {
    CHECK(closed_form_binary_symmetric(0.5, 0.1) == doctest::Approx(0.02904941).epsilon(1e-6));
    CHECK(closed_form_binary_symmetric(0.5, 0.5) == doctest::Approx(1.0));
    const double want = static_cast<double>(oracle::h2(0.3) - oracle::h2(0.2));
    CHECK(closed_form_binary_symmetric(0.3, 0.3) == doctest::Approx(want).epsilon(1e-12));
    // R(delta) = 0 for delta >= min(p, 1-p)
    CHECK(closed_form_binary_symmetric(0.3, 0.1) == 0.0);
    CHECK(closed_form_binary_symmetric(0.3, 0.05) == 0.0);
    const auto tc = r_id_tc(Pmf::bernoulli(0.3), Pmf::uniform(2), DistortionMatrix::hamming(2), 0.25, 1e-6);
    CHECK(tc.optimal_rate == doctest::Approx(closed_form_binary_symmetric(0.3, 0.25)).epsilon(1e-4));
    CHECK_THROWS_AS(closed_form_binary_symmetric(1.2, 0.1), DomainError);
  }

  TEST_CASE("upper bound log2|X|") {
    for (double d : {0.2, 0.3, 0.34}) CHECK(r_id_hamming(kTernary, kTernary, d, 3).rate <= std::log2(3.0) + 1e-4);
  }
}
