#include "simid/simulator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <string>

#include "simid/parallel.hpp"
#include "simid/rng.hpp"
#include "simid/solver.hpp"

namespace simid {

namespace {

std::uint64_t checked_power(std::size_t base, std::size_t n, std::uint64_t budget, const char* what) {
  std::uint64_t v = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (v > budget / base)
      throw BudgetExceeded(std::string(what) + ": " + std::to_string(base) + "^" + std::to_string(n) +
                           " exceeds budget " + std::to_string(budget));
    v *= base;
  }
  return v;
}

double slack_eps(std::size_t n, const DistortionMatrix& rho) {
  return 1e-9 * (1.0 + static_cast<double>(n) * rho.rho_max());
}

std::vector<std::size_t> letter_counts(const Sequence& s, std::size_t alphabet) {
  std::vector<std::size_t> c(alphabet, 0);
  for (auto a : s) ++c[a];
  return c;
}

bool typical_counts(const std::vector<std::size_t>& counts, std::size_t n, const Pmf& px, double gamma) {
  for (std::size_t a = 0; a < counts.size(); ++a) {
    if (px[a] <= kZeroProb && counts[a] > 0) return false;
    if (std::abs(static_cast<double>(counts[a]) / static_cast<double>(n) - px[a]) > gamma + 1e-12) return false;
  }
  return true;
}

/// Distance from a source sequence (by index) to every codeword; popcount fast
/// path for binary Hamming.
class NearestSearch {
 public:
  NearestSearch(const Codebook& cb) : cb_(cb), binary_hamming_(cb.rho.is_hamming() && cb.rho.rows() == 2) {
    if (binary_hamming_)
      for (const auto& w : cb.codewords) packed_.push_back(sequence_index(w, 2));
  }

  /// (index, sum of rho(xhat_i, x_i)); lowest index wins ties.
  std::pair<std::int32_t, double> operator()(const Sequence& x) const {
    std::int32_t best = -1;
    double best_sum = std::numeric_limits<double>::infinity();
    if (binary_hamming_) {
      const std::uint64_t ix = sequence_index(x, 2);
      for (std::size_t j = 0; j < packed_.size(); ++j) {
        const double d = std::popcount(ix ^ packed_[j]);
        if (d < best_sum) {
          best_sum = d;
          best = static_cast<std::int32_t>(j);
        }
      }
      return {best, best_sum};
    }
    for (std::size_t j = 0; j < cb_.codewords.size(); ++j) {
      const auto& w = cb_.codewords[j];
      double s = 0.0;
      for (std::size_t i = 0; i < x.size() && s < best_sum; ++i) s += cb_.rho(w[i], x[i]);
      if (s < best_sum) {
        best_sum = s;
        best = static_cast<std::int32_t>(j);
      }
    }
    return {best, best_sum};
  }

 private:
  const Codebook& cb_;
  bool binary_hamming_;
  std::vector<std::uint64_t> packed_;
};

/// Fills the nearest table and the covering report over the enumerated space.
void fill_nearest(Codebook& cb) {
  const std::uint64_t space = checked_power(cb.source_alphabet, cb.n, std::numeric_limits<std::uint64_t>::max(), "sequences");
  cb.nearest.assign(space, -1);
  cb.nearest_sum.assign(space, 0.0);
  NearestSearch search(cb);
  std::map<std::vector<std::size_t>, TypeClassReport> classes;
  auto& rep = cb.covering_radius_report;
  rep.max_distortion = 0.0;
  rep.target_sequences = 0;
  for (std::uint64_t i = 0; i < space; ++i) {
    const Sequence x = sequence_at(i, cb.n, cb.source_alphabet);
    const auto counts = letter_counts(x, cb.source_alphabet);
    if (cb.typical_only && !typical_counts(counts, cb.n, cb.px, cb.gamma)) continue;
    ++rep.target_sequences;
    const auto [j, sum] = search(x);
    cb.nearest[i] = j;
    cb.nearest_sum[i] = sum;
    const double per_symbol = sum / static_cast<double>(cb.n);
    auto& cls = classes[counts];
    cls.type = counts;
    ++cls.sequences;
    cls.max_distortion = std::max(cls.max_distortion, per_symbol);
    rep.max_distortion = std::max(rep.max_distortion, per_symbol);
  }
  rep.classes.clear();
  for (auto& [key, cls] : classes) rep.classes.push_back(std::move(cls));
}

/// Enumerates the source sequences covered by a candidate codeword: those
/// whose joint type with it is within the slack of N(a) * W(b|a).
class CoverEnumerator {
 public:
  CoverEnumerator(std::size_t n, std::size_t a_size, std::size_t b_size, const Channel& w, double slack,
                  const Pmf& px, bool typical_only, double gamma)
      : n_(n), a_(a_size), b_(b_size), w_(w), slack_(slack), px_(px), typical_only_(typical_only), gamma_(gamma) {
    weights_.assign(n, 1);
    for (std::size_t i = n; i-- > 1;) weights_[i - 1] = weights_[i] * a_;
  }

  /// Number of covered sequences for any codeword with letter counts m.
  double count(const std::vector<std::size_t>& m) {
    const auto& mats = matrices(m);
    double total = 0.0;
    for (const auto& mat : mats) {
      double prod = 1.0;
      for (std::size_t b = 0; b < b_; ++b) {
        // multinomial(m_b; N(0,b), ..., N(A-1,b))
        double c = 1.0;
        std::size_t placed = 0;
        for (std::size_t a = 0; a < a_; ++a)
          for (std::size_t t = 1; t <= mat[a * b_ + b]; ++t) c = c * static_cast<double>(++placed) / static_cast<double>(t);
        prod *= c;
      }
      total += prod;
    }
    return total;
  }

  template <class Visit>
  void for_each(const Sequence& xhat, Visit&& visit) {
    const auto m = letter_counts(xhat, b_);
    for (const auto& mat : matrices(m)) {
      rem_ = mat;
      expand(xhat, 0, 0, visit);
    }
  }

 private:
  const std::vector<std::vector<std::size_t>>& matrices(const std::vector<std::size_t>& m) {
    auto it = cache_.find(m);
    if (it != cache_.end()) return it->second;
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> mat(a_ * b_, 0);
    build(m, 0, 0, m.empty() ? 0 : m[0], mat, out);
    return cache_.emplace(m, std::move(out)).first->second;
  }

  // Fill column b, row a with counts summing to m_b.
  void build(const std::vector<std::size_t>& m, std::size_t b, std::size_t a, std::size_t left,
             std::vector<std::size_t>& mat, std::vector<std::vector<std::size_t>>& out) {
    if (b == b_) {
      if (admissible(mat)) out.push_back(mat);
      return;
    }
    if (a + 1 == a_) {
      mat[a * b_ + b] = left;
      build(m, b + 1, 0, b + 1 < b_ ? m[b + 1] : 0, mat, out);
      return;
    }
    for (std::size_t k = 0; k <= left; ++k) {
      mat[a * b_ + b] = k;
      build(m, b, a + 1, left - k, mat, out);
    }
  }

  bool admissible(const std::vector<std::size_t>& mat) const {
    std::vector<std::size_t> na(a_, 0);
    for (std::size_t a = 0; a < a_; ++a)
      for (std::size_t b = 0; b < b_; ++b) na[a] += mat[a * b_ + b];
    if (typical_only_ && !typical_counts(na, n_, px_, gamma_)) return false;
    for (std::size_t a = 0; a < a_; ++a)
      for (std::size_t b = 0; b < b_; ++b) {
        const double target = static_cast<double>(na[a]) * w_(a, b);
        if (std::abs(static_cast<double>(mat[a * b_ + b]) - target) >= slack_ - 1e-9) return false;
      }
    return true;
  }

  template <class Visit>
  void expand(const Sequence& xhat, std::size_t pos, std::uint64_t index, Visit& visit) {
    if (pos == n_) {
      visit(index);
      return;
    }
    const std::size_t b = xhat[pos];
    for (std::size_t a = 0; a < a_; ++a) {
      auto& r = rem_[a * b_ + b];
      if (r == 0) continue;
      --r;
      expand(xhat, pos + 1, index + a * weights_[pos], visit);
      ++r;
    }
  }

  std::size_t n_, a_, b_;
  const Channel& w_;
  double slack_;
  const Pmf& px_;
  bool typical_only_;
  double gamma_;
  std::vector<std::uint64_t> weights_;
  std::vector<std::size_t> rem_;
  std::map<std::vector<std::size_t>, std::vector<std::vector<std::size_t>>> cache_;
};

}  // namespace

std::uint64_t sequence_index(const Sequence& s, std::size_t alphabet) {
  std::uint64_t v = 0;
  for (auto a : s) v = v * alphabet + a;
  return v;
}

Sequence sequence_at(std::uint64_t index, std::size_t n, std::size_t alphabet) {
  Sequence s(n);
  for (std::size_t i = n; i-- > 0;) {
    s[i] = static_cast<std::uint8_t>(index % alphabet);
    index /= alphabet;
  }
  return s;
}

double sequence_distortion(const Sequence& a, const Sequence& b, const DistortionMatrix& rho) {
  if (a.size() != b.size()) throw DimensionMismatch("sequence_distortion: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += rho(a[i], b[i]);
  return s;
}

bool is_typical(const Sequence& x, const Pmf& px, double gamma) {
  return typical_counts(letter_counts(x, px.size()), x.size(), px, gamma);
}

Codebook Codebook::from_codewords(std::size_t n, std::size_t source_alphabet, std::vector<Sequence> codewords,
                                  const DistortionMatrix& rho, std::uint64_t sequence_budget) {
  if (codewords.empty()) throw InvalidArgument("codebook: no codewords");
  if (!rho.is_square() || rho.rows() != source_alphabet)
    throw DimensionMismatch("codebook: distortion must be square over the source alphabet");
  if (!rho.satisfies_triangle()) throw TriangleViolation("codebook: distortion lacks the triangle property");
  for (const auto& w : codewords) {
    if (w.size() != n) throw DimensionMismatch("codebook: codeword length differs from n");
    for (auto a : w)
      if (a >= rho.cols()) throw InvalidArgument("codebook: codeword letter outside the alphabet");
  }
  Codebook cb;
  cb.n = n;
  cb.source_alphabet = source_alphabet;
  cb.reconstruction_alphabet = rho.cols();
  cb.codewords = std::move(codewords);
  cb.rate = n == 0 ? 0.0 : std::log2(static_cast<double>(cb.codewords.size())) / static_cast<double>(n);
  cb.rho = rho;
  cb.px = Pmf::uniform(source_alphabet);
  std::uint64_t space = 0;
  try {
    space = checked_power(source_alphabet, n, sequence_budget, "codebook");
  } catch (const BudgetExceeded&) {
    return cb;  // signatures fall back to direct search
  }
  fill_nearest(cb);
  cb.covering_radius_report.covered = space;
  return cb;
}

Channel covering_target_channel(const Pmf& px, const DistortionMatrix& rho, double rate, double tol) {
  return distortion_rate(px, rho.transposed(), rate, tol).achieving_channel;
}

Codebook build_codebook(std::size_t n, const Pmf& px, const Channel& target_channel, double budget_rate,
                        const CodebookOptions& opts) {
  if (n == 0) throw InvalidArgument("build_codebook: blocklength must be positive");
  if (!(budget_rate >= 0.0) || !std::isfinite(budget_rate)) throw DomainError("build_codebook: rate budget must be >= 0");
  if (target_channel.input_size() != px.size())
    throw DimensionMismatch("build_codebook: channel input size differs from |X|");
  const std::size_t a_size = px.size(), b_size = target_channel.output_size();
  const DistortionMatrix rho = opts.rho.rows() == 0 ? DistortionMatrix::hamming(a_size) : opts.rho;
  if (!rho.is_square() || rho.rows() != a_size || b_size != a_size)
    throw DimensionMismatch("build_codebook: distortion and channel must be square over the source alphabet");
  if (!rho.satisfies_triangle()) throw TriangleViolation("build_codebook: distortion lacks the triangle property");
  if (!(opts.joint_slack > 0.0)) throw InvalidArgument("build_codebook: joint slack must be positive");

  const std::uint64_t space = checked_power(a_size, n, opts.sequence_budget, "build_codebook sequences");
  const std::uint64_t candidates = checked_power(b_size, n, opts.sequence_budget, "build_codebook candidates");

  // Codeword budget; typical-only mode reserves one index for the erasure.
  const double raw = std::floor(std::exp2(static_cast<double>(n) * budget_rate) + 1e-9);
  std::uint64_t max_count = raw >= static_cast<double>(candidates) ? candidates : static_cast<std::uint64_t>(raw);
  if (opts.typical_only && max_count > 1) --max_count;
  max_count = std::max<std::uint64_t>(max_count, 1);

  Codebook cb;
  cb.n = n;
  cb.source_alphabet = a_size;
  cb.reconstruction_alphabet = b_size;
  cb.rho = rho;
  cb.typical_only = opts.typical_only;
  cb.gamma = opts.gamma;
  cb.px = px;

  std::vector<std::uint8_t> target(space, 1), covered(space, 0);
  std::uint64_t remaining = space;
  if (opts.typical_only) {
    remaining = 0;
    for (std::uint64_t i = 0; i < space; ++i) {
      target[i] = is_typical(sequence_at(i, n, a_size), px, opts.gamma) ? 1 : 0;
      remaining += target[i];
    }
  }
  const std::uint64_t target_total = remaining;

  CoverEnumerator cover(n, a_size, b_size, target_channel, opts.joint_slack, px, opts.typical_only, opts.gamma);

  // Lazy greedy set cover. Entries carry the pick count at which their gain
  // was computed; a gain is exact only if nothing was picked since.
  struct Entry {
    double gain;
    std::uint64_t index;
    std::uint64_t epoch;
  };
  auto worse = [](const Entry& l, const Entry& r) {
    if (l.gain != r.gain) return l.gain < r.gain;
    return l.index > r.index;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> heap(worse);
  {
    std::map<std::vector<std::size_t>, double> by_type;
    for (std::uint64_t j = 0; j < candidates; ++j) {
      const auto m = letter_counts(sequence_at(j, n, b_size), b_size);
      auto it = by_type.find(m);
      if (it == by_type.end()) it = by_type.emplace(m, cover.count(m)).first;
      heap.push({it->second, j, 0});
    }
  }
  std::uint64_t picks = 0;
  while (picks < max_count && remaining > 0 && !heap.empty()) {
    Entry top = heap.top();
    heap.pop();
    if (top.gain <= 0.0) break;
    const Sequence w = sequence_at(top.index, n, b_size);
    if (top.epoch == picks) {
      cover.for_each(w, [&](std::uint64_t i) {
        if (target[i] && !covered[i]) {
          covered[i] = 1;
          --remaining;
        }
      });
      cb.codewords.push_back(w);
      ++picks;
      continue;
    }
    double gain = 0.0;
    cover.for_each(w, [&](std::uint64_t i) {
      if (target[i] && !covered[i]) gain += 1.0;
    });
    heap.push({gain, top.index, picks});
  }
  if (cb.codewords.empty()) cb.codewords.push_back(sequence_at(0, n, b_size));

  const double count = static_cast<double>(cb.codewords.size());
  cb.rate = std::log2(opts.typical_only ? count + 1.0 : count) / static_cast<double>(n);
  fill_nearest(cb);
  cb.covering_radius_report.target_sequences = target_total;
  cb.covering_radius_report.covered = target_total - remaining;
  cb.covering_radius_report.residual = remaining;
  return cb;
}

Signature assign_signature(const Sequence& x, const Codebook& cb) {
  if (x.size() != cb.n) throw DimensionMismatch("assign_signature: sequence length differs from codebook n");
  Signature sig;
  if (cb.typical_only && !is_typical(x, cb.px, cb.gamma)) return sig;
  if (!cb.nearest.empty()) {
    const std::uint64_t i = sequence_index(x, cb.source_alphabet);
    if (cb.nearest[i] < 0) return sig;
    sig.index = static_cast<std::uint32_t>(cb.nearest[i]);
    sig.stored_sum = cb.nearest_sum[i];
    return sig;
  }
  const auto [j, sum] = NearestSearch(cb)(x);
  sig.index = static_cast<std::uint32_t>(j);
  sig.stored_sum = sum;
  return sig;
}

const char* to_string(Decision d) { return d == Decision::No ? "no" : "maybe"; }

Decision decide_triangle(const Signature& sig, const Codebook& cb, const Sequence& y, double d_threshold) {
  if (y.size() != cb.n) throw DimensionMismatch("decide_triangle: sequence length differs from codebook n");
  if (sig.erased()) return Decision::Maybe;
  const double dy = sequence_distortion(cb.codewords.at(*sig.index), y, cb.rho);
  const double n = static_cast<double>(cb.n);
  return dy > sig.stored_sum + n * d_threshold + slack_eps(cb.n, cb.rho) ? Decision::No : Decision::Maybe;
}

AdmissibilityReport exhaustive_admissibility_check(const Codebook& cb, double d_threshold, std::size_t n,
                                                   const Signer& signer, std::uint64_t pair_budget,
                                                   std::uint64_t samples, std::uint64_t seed) {
  if (n != cb.n) throw DimensionMismatch("admissibility check: n differs from codebook n");
  const Signer sign = signer ? signer : Signer([&](const Sequence& x) { return assign_signature(x, cb); });
  const double limit = static_cast<double>(n) * d_threshold + slack_eps(n, cb.rho);
  const std::size_t a_size = cb.source_alphabet;
  AdmissibilityReport rep;

  auto check = [&](const Sequence& x, const Signature& sig, const Sequence& y) {
    ++rep.pairs_checked;
    if (sequence_distortion(x, y, cb.rho) > limit) return true;
    ++rep.similar_pairs;
    if (decide_triangle(sig, cb, y, d_threshold) == Decision::No) {
      rep.pass = false;
      rep.witness = std::make_pair(x, y);
      return false;
    }
    return true;
  };

  std::uint64_t space = 0;
  bool exhaustive = true;
  try {
    space = checked_power(a_size, n, pair_budget, "admissibility");
    exhaustive = space <= pair_budget / space;
  } catch (const BudgetExceeded&) {
    exhaustive = false;
  }
  rep.exhaustive = exhaustive;
  if (exhaustive) {
    std::vector<Sequence> all;
    all.reserve(space);
    for (std::uint64_t i = 0; i < space; ++i) all.push_back(sequence_at(i, n, a_size));
    for (const auto& x : all) {
      const Signature sig = sign(x);
      for (const auto& y : all)
        if (!check(x, sig, y)) return rep;
    }
    return rep;
  }

  // Sampled: x uniform, y a random perturbation of x at a random rate so that
  // similar pairs are well represented.
  SplitMix64 rng(seed);
  Sequence x(n), y(n);
  for (std::uint64_t s = 0; s < samples; ++s) {
    for (auto& a : x) a = static_cast<std::uint8_t>(rng.below(a_size));
    const double flip = rng.uniform() * std::min(1.0, 2.0 * d_threshold);
    for (std::size_t i = 0; i < n; ++i)
      y[i] = rng.uniform() < flip ? static_cast<std::uint8_t>(rng.below(a_size)) : x[i];
    if (!check(x, sign(x), y)) return rep;
  }
  return rep;
}

SimulationResult estimate_maybe_probability(const Codebook& cb, const Pmf& px, const Pmf& py, double d_threshold,
                                            std::uint64_t trials, std::uint64_t seed, std::size_t threads) {
  if (trials == 0) throw InvalidArgument("estimate_maybe_probability: trials must be positive");
  if (px.size() != cb.source_alphabet || py.size() != cb.rho.cols())
    throw DimensionMismatch("estimate_maybe_probability: pmf sizes do not match the codebook");
  const std::uint64_t streams = (trials + kTrialsPerStream - 1) / kTrialsPerStream;
  struct Counts {
    std::uint64_t maybe = 0, similar = 0, false_negative = 0;
  };
  std::vector<Counts> per_stream(streams);
  const double limit = static_cast<double>(cb.n) * d_threshold + slack_eps(cb.n, cb.rho);

  parallel_for(static_cast<std::size_t>(streams), threads, [&](std::size_t s) {
    SplitMix64 rng(stream_seed(seed, s));
    const std::uint64_t begin = s * kTrialsPerStream;
    const std::uint64_t end = std::min(trials, begin + kTrialsPerStream);
    Sequence x(cb.n), y(cb.n);
    Counts c;
    for (std::uint64_t t = begin; t < end; ++t) {
      for (auto& a : x) a = static_cast<std::uint8_t>(rng.categorical(px.probs()));
      for (auto& b : y) b = static_cast<std::uint8_t>(rng.categorical(py.probs()));
      const bool maybe = decide_triangle(assign_signature(x, cb), cb, y, d_threshold) == Decision::Maybe;
      const bool similar = sequence_distortion(x, y, cb.rho) <= limit;
      c.maybe += maybe;
      c.similar += similar;
      c.false_negative += similar && !maybe;
    }
    per_stream[s] = c;
  });

  SimulationResult res;
  res.trials = trials;
  res.seed = seed;
  for (const auto& c : per_stream) {
    res.maybe_count += c.maybe;
    res.similar_count += c.similar;
    res.false_negative_count += c.false_negative;
  }
  const double p = static_cast<double>(res.maybe_count) / static_cast<double>(trials);
  res.p_maybe_estimate = p;
  res.confidence_halfwidth = 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  return res;
}

}  // namespace simid
