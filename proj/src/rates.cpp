#include "simid/rates.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "simid/parallel.hpp"

namespace simid {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint32_t full_mask(std::size_t x_size) { return (std::uint32_t{1} << x_size) - 1U; }

void check_tol(double tol) {
  if (!(tol > 0.0) || !std::isfinite(tol)) throw BadTolerance("tolerance must be positive, got " + std::to_string(tol));
}

void check_d(double d, double hi, const char* who) {
  if (!(d >= 0.0) || !(d <= hi + 1e-12))
    throw DomainError(std::string(who) + ": distortion " + std::to_string(d) + " outside [0, " + std::to_string(hi) + "]");
}

std::uint64_t binomial_saturating(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t acc = 1;
  for (std::uint64_t i = 0; i < k; ++i) {
    // acc * (n - i) is divisible by i + 1; split to delay overflow.
    const std::uint64_t g = std::gcd(acc, i + 1);
    const std::uint64_t a = acc / g, b = (n - i) / ((i + 1) / g);
    if (b != 0 && a > kMax / b) return kMax;
    acc = a * b;
  }
  return acc;
}

/// Pads a channel with zero-probability outputs up to `u_size` columns.
Channel widen(const Channel& ch, std::size_t u_size) {
  if (ch.output_size() >= u_size) return ch;
  const std::size_t n = ch.input_size(), k = ch.output_size();
  std::vector<double> t(n * u_size, 0.0);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t u = 0; u < k; ++u) t[x * u_size + u] = ch(x, u);
  return Channel(n, u_size, std::move(t));
}

Channel constant_channel(std::size_t x_size, std::size_t u_size) {
  return Channel::constant(x_size, Pmf::point_mass(u_size, 0));
}

/// Solves one subproblem per candidate and keeps the smallest rate; ties go to
/// the lowest index so the result does not depend on the thread count.
template <class MakeScore>
void solve_candidates(std::size_t count, const Pmf& px, std::size_t u_eff, const RateOptions& opts,
                      MakeScore&& make_score, IdRateResult& out, std::vector<SolverReport>& reports) {
  reports.assign(count, SolverReport{});
  parallel_for(count, opts.threads, [&](std::size_t i) {
    reports[i] = min_mi_linear_constraint(px, make_score(i), u_eff, opts.tol);
  });
  out.per_pattern_values.resize(count);
  long best = -1;
  for (std::size_t i = 0; i < count; ++i) {
    out.per_pattern_values[i] = reports[i].optimal_rate;
    if (reports[i].status == SolverStatus::Infeasible) continue;
    if (best < 0 || reports[i].optimal_rate < reports[static_cast<std::size_t>(best)].optimal_rate) best = static_cast<long>(i);
  }
  out.winning_index = best;
}

}  // namespace

// ---- sign patterns

SignPattern::SignPattern(std::size_t x_size, std::vector<std::uint32_t> columns)
    : x_size_(x_size), columns_(std::move(columns)) {
  if (x_size < 2 || x_size > 31) throw InvalidArgument("SignPattern: |X| must be in [2, 31]");
  const std::uint32_t full = full_mask(x_size);
  for (std::size_t u = 0; u < columns_.size(); ++u) {
    const std::uint32_t c = columns_[u];
    if (c == 0 || c >= full) throw InvalidArgument("SignPattern: column " + std::to_string(u) + " is constant in x");
    for (std::size_t v = 0; v < u; ++v)
      if (columns_[v] == c) throw InvalidArgument("SignPattern: duplicate column " + std::to_string(u));
  }
}

std::string SignPattern::to_string() const {
  // One row per x, columns separated by nothing: "01;10".
  std::string s;
  for (std::size_t x = 0; x < x_size_; ++x) {
    if (x) s += ';';
    for (std::size_t u = 0; u < u_size(); ++u) s += (*this)(x, u) ? '1' : '0';
  }
  return s;
}

std::uint64_t sign_pattern_count(std::size_t x_size, std::size_t u_size) {
  if (x_size < 2) return 0;
  if (x_size >= 64) return std::numeric_limits<std::uint64_t>::max();
  return binomial_saturating((std::uint64_t{1} << x_size) - 2, u_size);
}

SignPatternStream::SignPatternStream(std::size_t x_size, std::size_t u_size, std::uint64_t budget)
    : x_size_(x_size), max_mask_(0), cur_(u_size), count_(sign_pattern_count(x_size, u_size)) {
  if (x_size < 2 || x_size > 31) throw InvalidArgument("sign patterns: |X| must be in [2, 31]");
  if (u_size == 0) throw InvalidArgument("sign patterns: |U| must be positive");
  if (count_ > budget)
    throw BudgetExceeded("sign patterns: " + std::to_string(count_) + " patterns exceed budget " +
                         std::to_string(budget));
  max_mask_ = full_mask(x_size) - 1U;
  done_ = count_ == 0;
}

std::optional<SignPattern> SignPatternStream::next() {
  if (done_) return std::nullopt;
  const std::size_t k = cur_.size();
  if (!started_) {
    started_ = true;
    std::iota(cur_.begin(), cur_.end(), std::uint32_t{1});
  } else {
    // advance the ascending combination over masks 1..max_mask_
    std::size_t i = k;
    while (i > 0 && cur_[i - 1] == max_mask_ - static_cast<std::uint32_t>(k - i)) --i;
    if (i == 0) {
      done_ = true;
      return std::nullopt;
    }
    ++cur_[i - 1];
    for (std::size_t j = i; j < k; ++j) cur_[j] = cur_[j - 1] + 1;
  }
  return SignPattern(x_size_, cur_);
}

std::vector<SignPattern> enumerate_sign_patterns(std::size_t x_size, std::size_t u_size, std::uint64_t budget) {
  SignPatternStream stream(x_size, u_size, budget);
  std::vector<SignPattern> out;
  out.reserve(static_cast<std::size_t>(stream.count()));
  while (auto f = stream.next()) out.push_back(std::move(*f));
  return out;
}

ScoreTable linear_score_of_pattern(const SignPattern& f, const Pmf& px, const Pmf& py) {
  const std::size_t n = f.x_size(), k = f.u_size();
  if (px.size() != n || py.size() != n) throw DimensionMismatch("linear_score_of_pattern: alphabet size mismatch");
  std::vector<double> c(n * k);
  for (std::size_t u = 0; u < k; ++u) {
    double shift = 0.0;
    for (std::size_t x = 0; x < n; ++x) shift += f.sign(x, u) * py[x];
    for (std::size_t x = 0; x < n; ++x) c[x * k + u] = f.sign(x, u) - shift;
  }
  return ScoreTable(n, k, std::move(c));
}

const char* to_string(RateStatus s) {
  switch (s) {
    case RateStatus::Optimal: return "optimal";
    case RateStatus::ZeroRate: return "zero_rate";
    case RateStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

// ---- R_ID

IdRateResult r_id_hamming(const Pmf& px, const Pmf& py, double d, std::size_t u_size, const RateOptions& opts) {
  if (px.size() != py.size()) throw DimensionMismatch("r_id_hamming: px and py sizes differ");
  if (u_size == 0) throw InvalidArgument("r_id_hamming: |U| must be positive");
  check_tol(opts.tol);
  check_d(d, 1.0, "r_id_hamming");
  const std::size_t n = px.size();

  IdRateResult out;
  out.u_cardinality_used = u_size;
  if (d <= rho_bar_hamming(px, py)) {
    out.status = RateStatus::ZeroRate;
    out.achieving_channel = constant_channel(n, u_size);
    return out;
  }
  if (n < 2) {
    out.status = RateStatus::Infeasible;
    out.rate = kInf;
    return out;
  }

  // Only 2^|X| - 2 distinct non-constant columns exist.
  const std::size_t u_eff = std::min<std::uint64_t>(u_size, (std::uint64_t{1} << n) - 2);
  const auto patterns = enumerate_sign_patterns(n, u_eff, opts.budget);
  std::vector<SolverReport> reports;
  solve_candidates(
      patterns.size(), px, u_eff, opts,
      [&](std::size_t i) { return LinearScore{linear_score_of_pattern(patterns[i], px, py), 2.0 * d}; }, out,
      reports);

  if (out.winning_index < 0) {
    out.status = RateStatus::Infeasible;
    out.rate = kInf;
    return out;
  }
  const auto& best = reports[static_cast<std::size_t>(out.winning_index)];
  out.rate = best.optimal_rate;
  out.achieving_channel = widen(best.channel, u_size);
  out.winning_pattern = patterns[static_cast<std::size_t>(out.winning_index)];
  return out;
}

std::vector<DualVertex> rho_bar_pieces(const DistortionMatrix& rho, const Pmf& py) {
  auto verts = dual_vertices(rho, py);
  // Same alpha: only the larger offset can ever be the max.
  std::vector<DualVertex> merged;
  for (auto& v : verts) {
    auto same = std::find_if(merged.begin(), merged.end(), [&](const DualVertex& w) {
      for (std::size_t x = 0; x < v.alpha.size(); ++x)
        if (std::abs(w.alpha[x] - v.alpha[x]) > 1e-9) return false;
      return true;
    });
    if (same == merged.end()) {
      merged.push_back(std::move(v));
    } else if (v.offset_on_py > same->offset_on_py) {
      *same = std::move(v);
    }
  }
  // Pieces below another piece at every vertex of the simplex never attain the max.
  auto value_at = [](const DualVertex& v, std::size_t x) { return v.alpha[x] + v.offset_on_py; };
  std::vector<DualVertex> out;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < merged.size() && !dominated; ++j) {
      if (i == j) continue;
      bool below = true;
      for (std::size_t x = 0; x < merged[i].alpha.size() && below; ++x)
        below = value_at(merged[i], x) <= value_at(merged[j], x) + 1e-12;
      dominated = below;
    }
    if (!dominated) out.push_back(merged[i]);
  }
  return out;
}

IdRateResult r_id_general(const Pmf& px, const Pmf& py, const DistortionMatrix& rho, double d,
                          std::size_t u_size, const RateOptions& opts) {
  if (px.size() != rho.rows() || py.size() != rho.cols())
    throw DimensionMismatch("r_id_general: pmf sizes do not match the distortion matrix");
  if (u_size == 0) throw InvalidArgument("r_id_general: |U| must be positive");
  check_tol(opts.tol);
  check_d(d, rho.rho_max(), "r_id_general");
  const std::size_t n = px.size();

  IdRateResult out;
  out.u_cardinality_used = u_size;
  if (d <= rho_bar(px, py, rho).value) {
    out.status = RateStatus::ZeroRate;
    out.achieving_channel = constant_channel(n, u_size);
    return out;
  }

  const auto pieces = rho_bar_pieces(rho, py);
  const std::size_t v_count = pieces.size();

  // Candidate assignments u -> piece. Combinations lose nothing: two outputs
  // mapped to the same piece can be merged without changing the score and
  // without increasing I(X;U).
  std::vector<std::vector<std::size_t>> assignments;
  std::size_t u_eff;
  if (opts.full_enumeration) {
    u_eff = u_size;
    double total = std::pow(static_cast<double>(v_count), static_cast<double>(u_eff));
    if (total > static_cast<double>(opts.budget))
      throw BudgetExceeded("r_id_general: " + std::to_string(total) + " assignments exceed budget");
    std::vector<std::size_t> a(u_eff, 0);
    for (;;) {
      assignments.push_back(a);
      std::size_t i = u_eff;
      while (i > 0 && a[i - 1] + 1 == v_count) a[--i] = 0;
      if (i == 0) break;
      ++a[i - 1];
    }
  } else {
    u_eff = std::min(u_size, v_count);
    const std::uint64_t total = binomial_saturating(v_count, u_eff);
    if (total > opts.budget)
      throw BudgetExceeded("r_id_general: " + std::to_string(total) + " vertex combinations exceed budget");
    std::vector<std::size_t> a(u_eff);
    std::iota(a.begin(), a.end(), std::size_t{0});
    for (;;) {
      assignments.push_back(a);
      std::size_t i = u_eff;
      while (i > 0 && a[i - 1] == v_count - u_eff + (i - 1)) --i;
      if (i == 0) break;
      ++a[i - 1];
      for (std::size_t j = i; j < u_eff; ++j) a[j] = a[j - 1] + 1;
    }
  }

  auto score_of = [&](std::size_t i) {
    const auto& a = assignments[i];
    std::vector<double> c(n * u_eff);
    for (std::size_t u = 0; u < u_eff; ++u)
      for (std::size_t x = 0; x < n; ++x) c[x * u_eff + u] = pieces[a[u]].alpha[x] + pieces[a[u]].offset_on_py;
    return LinearScore{ScoreTable(n, u_eff, std::move(c)), d};
  };
  std::vector<SolverReport> reports;
  solve_candidates(assignments.size(), px, u_eff, opts, score_of, out, reports);

  if (out.winning_index < 0) {
    out.status = RateStatus::Infeasible;
    out.rate = kInf;
    return out;
  }
  const auto& best = reports[static_cast<std::size_t>(out.winning_index)];
  out.rate = best.optimal_rate;
  out.achieving_channel = widen(best.channel, u_size);
  out.winning_vertices = assignments[static_cast<std::size_t>(out.winning_index)];
  return out;
}

IdRateResult r_id(const Pmf& px, const Pmf& py, const DistortionMatrix& rho, double d, std::size_t u_size,
                  const RateOptions& opts) {
  if (rho.is_hamming() && px.size() == rho.rows() && py.size() == rho.cols())
    return r_id_hamming(px, py, d, u_size, opts);
  return r_id_general(px, py, rho, d, u_size, opts);
}

RateCurve envelope_of_finite(const RateCurve& curve) {
  std::vector<RatePoint> finite;
  for (const auto& p : curve.points())
    if (std::isfinite(p.r)) finite.push_back(p);
  if (finite.size() < 2) return RateCurve(curve.points(), "envelope");
  const auto env = lower_convex_envelope(RateCurve(finite));
  std::vector<RatePoint> merged;
  std::size_t j = 0;
  for (const auto& p : curve.points()) merged.push_back(std::isfinite(p.r) ? env[j++] : p);
  return RateCurve(std::move(merged), "envelope");
}

IdCurve r_id_curve(const Pmf& px, const Pmf& py, const DistortionMatrix& rho, const std::vector<double>& d_grid,
                   const RateOptions& opts, bool spot_check) {
  for (std::size_t i = 1; i < d_grid.size(); ++i)
    if (!(d_grid[i] > d_grid[i - 1])) throw InvalidArgument("r_id_curve: distortion grid must be strictly increasing");
  const std::size_t n = px.size();
  IdCurve out;
  std::vector<RatePoint> raw;
  for (double d : d_grid) {
    out.points.push_back(r_id(px, py, rho, d, n, opts));
    raw.push_back({d, out.points.back().rate, "solver"});
    if (spot_check) out.strict_cardinality.push_back(r_id(px, py, rho, d, n + 1, opts).rate);
  }
  out.raw = RateCurve(raw, "raw");

  out.envelope = envelope_of_finite(out.raw);
  return out;
}

// ---- triangle schemes

namespace {

void check_triangle_inputs(const Pmf& px, const Pmf& py, const DistortionMatrix& rho, const char* who) {
  if (!rho.is_square() || !rho.satisfies_triangle())
    throw TriangleViolation(std::string(who) + ": distortion must be square and satisfy the triangle inequality");
  if (px.size() != rho.rows() || py.size() != rho.cols())
    throw DimensionMismatch(std::string(who) + ": pmf sizes do not match the distortion matrix");
}

}  // namespace

ScoreTable tc_score(const Pmf& py, const DistortionMatrix& rho) {
  const std::size_t n = rho.rows();
  if (py.size() != rho.cols()) throw DimensionMismatch("tc_score: py size != distortion columns");
  std::vector<double> c(n * n);
  for (std::size_t xh = 0; xh < n; ++xh) {
    double query = 0.0;
    for (std::size_t y = 0; y < n; ++y) query += py[y] * rho(xh, y);
    for (std::size_t x = 0; x < n; ++x) c[x * n + xh] = query - rho(xh, x);
  }
  return ScoreTable(n, n, std::move(c));
}

SolverReport r_id_tc(const Pmf& px, const Pmf& py, const DistortionMatrix& rho, double d, double tol) {
  check_triangle_inputs(px, py, rho, "r_id_tc");
  check_tol(tol);
  check_d(d, rho.rho_max(), "r_id_tc");
  return min_mi_linear_constraint(px, LinearScore{tc_score(py, rho), d}, px.size(), tol);
}

double d_id_tc(const Pmf& px, const Pmf& py, const DistortionMatrix& rho, double r, double tol) {
  check_triangle_inputs(px, py, rho, "d_id_tc");
  check_tol(tol);
  if (!(r >= 0.0)) throw DomainError("d_id_tc: rate must be nonnegative");
  return max_score_rate_constraint(px, tc_score(py, rho), r, tol).score;
}

LcDetail d_id_lc_detail(const Pmf& px, const Pmf& py, const DistortionMatrix& rho, double r, double tol) {
  check_triangle_inputs(px, py, rho, "d_id_lc");
  check_tol(tol);
  if (!(r >= 0.0)) throw DomainError("d_id_lc: rate must be nonnegative");
  const std::size_t n = px.size();
  // D(R) test channel with a small preference for large E[rho(Xhat,Y)] among
  // (near-)optimal channels.
  std::vector<double> query(n, 0.0);
  for (std::size_t xh = 0; xh < n; ++xh)
    for (std::size_t y = 0; y < n; ++y) query[xh] += py[y] * rho(xh, y);
  std::vector<double> c(n * n);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t xh = 0; xh < n; ++xh) c[x * n + xh] = -rho(xh, x) + kLcTieBreakWeight * query[xh];
  const auto rep = max_score_rate_constraint(px, ScoreTable(n, n, std::move(c)), r, tol);

  LcDetail out;
  out.channel = rep.channel;
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t xh = 0; xh < n; ++xh) {
      const double w = px[x] * rep.channel(x, xh);
      out.distortion += w * rho(xh, x);
      out.query_distortion += w * query[xh];
    }
  out.value = out.query_distortion - out.distortion;
  return out;
}

double d_id_lc(const Pmf& px, const Pmf& py, const DistortionMatrix& rho, double r, double tol) {
  return d_id_lc_detail(px, py, rho, r, tol).value;
}

LcInverter::LcInverter(const Pmf& px, const Pmf& py, const DistortionMatrix& rho, double tol,
                       std::size_t grid_points)
    : px_(px), py_(py), rho_(rho), tol_(tol) {
  check_triangle_inputs(px, py, rho, "r_id_lc");
  check_tol(tol);
  if (grid_points < 2) throw InvalidArgument("r_id_lc: need at least two grid points");
  const double r_max = std::log2(static_cast<double>(px.size()));
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double r = r_max * static_cast<double>(i) / static_cast<double>(grid_points - 1);
    r_grid_.push_back(r);
    d_grid_.push_back(d_id_lc(px_, py_, rho_, r, tol_));
  }
}

RateValue LcInverter::rate_for(double d) const {
  check_d(d, rho_.rho_max(), "r_id_lc");
  if (d <= d_grid_.front()) return {0.0, RateStatus::ZeroRate};
  std::size_t i = 1;
  while (i < d_grid_.size() && d_grid_[i] < d) ++i;
  if (i == d_grid_.size()) return {kInf, RateStatus::Infeasible};
  double lo = r_grid_[i - 1], hi = r_grid_[i];
  while (hi - lo > 0.05 * tol_) {
    const double mid = 0.5 * (lo + hi);
    if (d_id_lc(px_, py_, rho_, mid, tol_) >= d) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return {hi, RateStatus::Optimal};
}

RateValue r_id_lc(const Pmf& px, const Pmf& py, const DistortionMatrix& rho, double d, double tol) {
  return LcInverter(px, py, rho, tol).rate_for(d);
}

// ---- bounds and closed forms

LowerBound hamming_lower_bound(const Pmf& px, const Pmf& py, double d) {
  if (px.size() != py.size()) throw DimensionMismatch("hamming_lower_bound: px and py sizes differ");
  check_d(d, 1.0, "hamming_lower_bound");
  LowerBound out;
  double kl;
  try {
    kl = kl_divergence(px, py);
  } catch (const AbsoluteContinuityViolation&) {
    out.kl_infinite = true;
    return out;
  }
  out.value = std::max(0.0, 2.0 * d * d * std::log2(std::exp(1.0)) - kl);
  return out;
}

double closed_form_binary_symmetric(double p, double d) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("closed_form_binary_symmetric: p outside [0, 1]");
  check_d(d, 0.5, "closed_form_binary_symmetric");
  const double delta = 0.5 - d;
  const double pm = std::min(p, 1.0 - p);
  if (delta >= pm) return 0.0;
  return binary_entropy(p) - binary_entropy(delta);
}

}  // namespace simid
