#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "simid/rng.hpp"
#include "simid/simulator.hpp"

using namespace simid;

namespace {

const Pmf kHalf = Pmf::uniform(2);

Codebook book_for(std::size_t n, double rate, double target_d = -1.0) {
  const auto h = DistortionMatrix::hamming(2);
  const double r_target = target_d < 0 ? rate : 1.0 - binary_entropy(target_d);
  return build_codebook(n, kHalf, covering_target_channel(kHalf, h, r_target), rate);
}

}  // namespace

TEST_SUITE("simulator") {
  TEST_CASE("sequence indexing round trip") {
    for (std::uint64_t i = 0; i < 81; ++i) CHECK(sequence_index(sequence_at(i, 4, 3), 3) == i);
    CHECK(sequence_at(1, 3, 2) == Sequence{0, 0, 1});
    CHECK(sequence_distortion({0, 1, 1}, {1, 1, 0}, DistortionMatrix::hamming(2)) == 2.0);
  }

  TEST_CASE("splitmix streams are reproducible") {
    SplitMix64 a(7), b(7);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    CHECK(stream_seed(1, 0) != stream_seed(1, 1));
    CHECK(stream_seed(1, 0) != stream_seed(2, 0));
    SplitMix64 c(3);
    const double p[] = {0.0, 1.0, 0.0};
    for (int i = 0; i < 50; ++i) CHECK(c.categorical(p) == 1);
  }

  TEST_CASE("tiny codebooks") {
    // n=1 with the identity target needs both letters
    const auto id = build_codebook(1, kHalf, Channel::identity(2), 1.0);
    CHECK(id.codewords.size() == 2);
    CHECK(id.covering_radius_report.residual == 0);
    CHECK(id.covering_radius_report.max_distortion == 0.0);
    // rate 0 leaves a single codeword
    const auto one = book_for(6, 0.0, 0.4);
    CHECK(one.codewords.size() == 1);
  }

  TEST_CASE("signatures match exhaustive nearest-codeword search") {
    const auto cb = book_for(12, 0.5);
    REQUIRE(cb.codewords.size() > 1);
    const std::vector<double> rho{0, 1, 1, 0};
    oracle::Gen g(51);
    for (int t = 0; t < 10000; ++t) {
      Sequence x(12);
      for (auto& v : x) v = static_cast<std::uint8_t>(g.below(2));
      const auto sig = assign_signature(x, cb);
      REQUIRE_FALSE(sig.erased());
      const auto [j, dist] = oracle::nearest(cb.codewords, x, rho, 2);
      CHECK(sig.stored_sum == dist);
      CHECK(*sig.index == j);
    }
  }

  TEST_CASE("general distortion signatures") {
    const DistortionMatrix rho({{0.0, 0.7, 1.0}, {0.4, 0.0, 0.3}, {0.9, 0.5, 0.0}});
    oracle::Gen g(52);
    std::vector<Sequence> words;
    for (int j = 0; j < 9; ++j) {
      Sequence w(5);
      for (auto& v : w) v = static_cast<std::uint8_t>(g.below(3));
      words.push_back(w);
    }
    const auto cb = Codebook::from_codewords(5, 3, words, rho);
    const std::vector<double> flat(rho.data().begin(), rho.data().end());
    for (std::uint64_t i = 0; i < 243; ++i) {
      const auto x = sequence_at(i, 5, 3);
      const auto [j, dist] = oracle::nearest(words, x, flat, 3);
      const auto sig = assign_signature(x, cb);
      CHECK(std::abs(sig.stored_sum - dist) <= 1e-12);
      CHECK(*sig.index == j);
    }
  }

  TEST_CASE("decision rule examples") {
    const auto cb = Codebook::from_codewords(8, 2, {Sequence(8, 0)}, DistortionMatrix::hamming(2));
    const Signature sig{0, 1.0};  // stored distortion 1/8
    // d(xhat,y) = 3 > 1 + 8*0.125: no
    CHECK(decide_triangle(sig, cb, {1, 1, 1, 0, 0, 0, 0, 0}, 0.125) == Decision::No);
    // exactly at the boundary 2 = 1 + 1: maybe
    CHECK(decide_triangle(sig, cb, {1, 1, 0, 0, 0, 0, 0, 0}, 0.125) == Decision::Maybe);
    // erasure always answers maybe
    CHECK(decide_triangle(Signature{}, cb, Sequence(8, 1), 0.0) == Decision::Maybe);
    CHECK(std::string(to_string(Decision::No)) == "no");
  }

  TEST_CASE("exhaustive admissibility at n = 8") {
    for (double d : {0.125, 0.25}) {
      for (double r : {0.25, 0.5}) {
        const auto cb = book_for(8, r);
        const auto rep = exhaustive_admissibility_check(cb, d, 8);
        CHECK(rep.exhaustive);
        CHECK(rep.pass);
        CHECK(rep.pairs_checked == 65536);
        CHECK(rep.similar_pairs > 0);
      }
    }
  }

  TEST_CASE("admissibility check catches an understated stored distortion") {
    const auto cb = book_for(8, 0.5);
    const Signer cheat = [&](const Sequence& x) {
      auto s = assign_signature(x, cb);
      if (s.stored_sum >= 1.0) s.stored_sum -= 1.0;
      return s;
    };
    const auto rep = exhaustive_admissibility_check(cb, 0.125, 8, cheat);
    CHECK_FALSE(rep.pass);
    REQUIRE(rep.witness.has_value());
    const auto& [x, y] = *rep.witness;
    CHECK(sequence_distortion(x, y, DistortionMatrix::hamming(2)) <= 1.0);
  }

  TEST_CASE("typical-only codebooks stay admissible") {
    const auto h = DistortionMatrix::hamming(2);
    const Pmf p = Pmf::bernoulli(0.25);
    CodebookOptions opts;
    opts.typical_only = true;
    opts.gamma = 0.15;
    const auto cb = build_codebook(8, p, covering_target_channel(p, h, 0.5), 0.5, opts);
    CHECK(cb.typical_only);
    const auto rep = exhaustive_admissibility_check(cb, 0.125, 8);
    CHECK(rep.pass);
    bool saw_erasure = false;
    for (auto v : cb.nearest) saw_erasure = saw_erasure || v < 0;
    CHECK(saw_erasure);
  }

  TEST_CASE("typicality") {
    const Pmf p = Pmf::bernoulli(0.25);
    CHECK(is_typical({0, 0, 0, 1, 0, 0, 0, 1}, p, 0.1));
    CHECK_FALSE(is_typical({1, 1, 1, 1, 0, 0, 0, 1}, p, 0.1));
  }

  TEST_CASE("maybe probability") {
    const auto cb = book_for(10, 0.5);
    // D at rho_max: every pair is similar, all maybe
    const auto all = estimate_maybe_probability(cb, kHalf, kHalf, 1.0, 2000, 3);
    CHECK(all.p_maybe_estimate == 1.0);
    CHECK(all.false_negative_count == 0);

    const auto a = estimate_maybe_probability(cb, kHalf, kHalf, 0.1, 20000, 9, 1);
    const auto b = estimate_maybe_probability(cb, kHalf, kHalf, 0.1, 20000, 9, 4);
    CHECK(a.maybe_count == b.maybe_count);
    CHECK(a.similar_count == b.similar_count);
    CHECK(a.false_negative_count == 0);
    CHECK(a.p_maybe_estimate > 0.0);
    CHECK(a.p_maybe_estimate < 1.0);
    CHECK(a.confidence_halfwidth > 0.0);
    const auto c = estimate_maybe_probability(cb, kHalf, kHalf, 0.1, 20000, 10, 1);
    CHECK(c.maybe_count != a.maybe_count);
  }

  TEST_CASE("codebook construction is deterministic") {
    const auto a = book_for(10, 0.5);
    const auto b = book_for(10, 0.5);
    CHECK(a.codewords == b.codewords);
  }
}
