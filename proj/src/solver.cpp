#include "simid/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

namespace simid {

namespace {

constexpr double kLambdaCap = 1152921504606846976.0;  // 2^60
constexpr double kFeasEps = 1e-12;

/// Source restricted to letters with positive probability.
struct Reduced {
  std::vector<std::size_t> keep;  // original indices
  std::vector<double> px;
  std::vector<double> c;     // keep.size() x nu
  std::vector<double> cmax;  // per-row max of c
  std::size_t nx = 0;
  std::size_t nu = 0;
  std::size_t full_nx = 0;

  Reduced(const Pmf& p, const ScoreTable& s) : nu(s.cols), full_nx(p.size()) {
    for (std::size_t x = 0; x < p.size(); ++x) {
      if (p[x] <= kZeroProb) continue;
      keep.push_back(x);
      px.push_back(p[x]);
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t u = 0; u < nu; ++u) {
        c.push_back(s(x, u));
        m = std::max(m, s(x, u));
      }
      cmax.push_back(m);
    }
    nx = keep.size();
    const double total = std::accumulate(px.begin(), px.end(), 0.0);
    for (double& v : px) v /= total;
  }

  double score(const std::vector<double>& w) const {
    double s = 0.0;
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t u = 0; u < nu; ++u) s += px[x] * w[x * nu + u] * c[x * nu + u];
    return s;
  }
  double info(const std::vector<double>& w) const { return mutual_information(px, w, nu); }

  /// Expands a reduced channel to the full alphabet; dropped letters get uniform rows.
  Channel expand(const std::vector<double>& w) const {
    std::vector<double> full(full_nx * nu, 1.0 / static_cast<double>(nu));
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t u = 0; u < nu; ++u) full[keep[i] * nu + u] = w[i * nu + u];
    for (std::size_t x = 0; x < full_nx; ++x) {
      double sum = 0.0;
      for (std::size_t u = 0; u < nu; ++u) sum += full[x * nu + u];
      for (std::size_t u = 0; u < nu; ++u) full[x * nu + u] /= sum;
    }
    return Channel(full_nx, nu, std::move(full));
  }

  std::vector<double> constant_channel(std::size_t at) const {
    std::vector<double> w(nx * nu, 0.0);
    for (std::size_t x = 0; x < nx; ++x) w[x * nu + at] = 1.0;
    return w;
  }
};

/// Fixed point of the tilted update at one multiplier.
struct TiltSolution {
  double lambda = 0.0;
  std::vector<double> w;
  double info = 0.0;
  double score = 0.0;
  double lagrangian_lb = 0.0;  // lower bound on min_W [I - lambda * score]
  int iterations = 0;
};

class TiltEngine {
 public:
  TiltEngine(const Reduced& r, double tol, int max_iter) : r_(r), tol_(tol), max_iter_(max_iter) {}

  TiltSolution solve(double lambda) const {
    const std::size_t nx = r_.nx, nu = r_.nu;
    std::vector<double> e(nx * nu);
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t u = 0; u < nu; ++u)
        e[x * nu + u] = std::exp2(lambda * (r_.c[x * nu + u] - r_.cmax[x]));

    std::vector<double> q(nu, 1.0 / static_cast<double>(nu));
    std::vector<double> z(nx), cfac(nu), qn(nu);
    double shift = 0.0;
    for (std::size_t x = 0; x < nx; ++x) shift += r_.px[x] * r_.cmax[x];

    TiltSolution sol;
    sol.lambda = lambda;
    double lb = -std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < max_iter_; ++it) {
      double logz = 0.0;
      for (std::size_t x = 0; x < nx; ++x) {
        double s = 0.0;
        for (std::size_t u = 0; u < nu; ++u) s += q[u] * e[x * nu + u];
        z[x] = s;
        logz += r_.px[x] * std::log2(s);
      }
      std::fill(cfac.begin(), cfac.end(), 0.0);
      for (std::size_t x = 0; x < nx; ++x) {
        const double a = r_.px[x] / z[x];
        for (std::size_t u = 0; u < nu; ++u) cfac[u] += a * e[x * nu + u];
      }
      double cmax = 0.0, change = 0.0, weighted = 0.0;
      for (std::size_t u = 0; u < nu; ++u) {
        qn[u] = q[u] * cfac[u];
        cmax = std::max(cmax, cfac[u]);
        change = std::max(change, std::abs(qn[u] - q[u]));
        if (qn[u] > 0.0) weighted += qn[u] * std::log2(cfac[u]);
      }
      const double base = -logz - lambda * shift;
      lb = std::max(lb, base - std::log2(cmax));
      const double gap = std::log2(cmax) - weighted;
      q.swap(qn);
      if (change < tol_ / 10.0 && gap < tol_ / 20.0) {
        ++it;
        break;
      }
    }
    sol.iterations = it;
    sol.w = response(q, e);
    sol.info = r_.info(sol.w);
    sol.score = r_.score(sol.w);
    sol.lagrangian_lb = lb;
    return sol;
  }

  /// Sup-norm distance between w and one tilted update of its own marginal.
  double residual(const std::vector<double>& w, double lambda) const {
    const std::size_t nx = r_.nx, nu = r_.nu;
    std::vector<double> q(nu, 0.0);
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t u = 0; u < nu; ++u) q[u] += r_.px[x] * w[x * nu + u];
    std::vector<double> e(nx * nu);
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t u = 0; u < nu; ++u)
        e[x * nu + u] = std::exp2(lambda * (r_.c[x * nu + u] - r_.cmax[x]));
    const auto next = response(q, e);
    double res = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) res = std::max(res, std::abs(next[i] - w[i]));
    return res;
  }

 private:
  std::vector<double> response(const std::vector<double>& q, const std::vector<double>& e) const {
    const std::size_t nx = r_.nx, nu = r_.nu;
    std::vector<double> w(nx * nu);
    for (std::size_t x = 0; x < nx; ++x) {
      double s = 0.0;
      for (std::size_t u = 0; u < nu; ++u) s += q[u] * e[x * nu + u];
      if (s > 0.0) {
        for (std::size_t u = 0; u < nu; ++u) w[x * nu + u] = q[u] * e[x * nu + u] / s;
      } else {
        // every tilted weight underflowed: fall back to the row argmax (lowest index)
        std::size_t best = 0;
        for (std::size_t u = 1; u < nu; ++u)
          if (r_.c[x * nu + u] > r_.c[x * nu + best]) best = u;
        for (std::size_t u = 0; u < nu; ++u) w[x * nu + u] = u == best ? 1.0 : 0.0;
      }
    }
    return w;
  }

  const Reduced& r_;
  double tol_;
  int max_iter_;
};

std::vector<double> mix(const std::vector<double>& a, const std::vector<double>& b, double theta) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (1.0 - theta) * a[i] + theta * b[i];
  return out;
}

std::size_t best_constant_index(const Reduced& r) {
  std::size_t best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (std::size_t u = 0; u < r.nu; ++u) {
    double s = 0.0;
    for (std::size_t x = 0; x < r.nx; ++x) s += r.px[x] * r.c[x * r.nu + u];
    if (s > best_val) {
      best_val = s;
      best = u;
    }
  }
  return best;
}

void check_tol(double tol) {
  if (!(tol > 0.0 && tol <= 1e-2)) throw BadTolerance("solver: tolerance must lie in (0, 1e-2]");
}

}  // namespace

// ---------------------------------------------------------------- ScoreTable

ScoreTable::ScoreTable(std::size_t r, std::size_t k, std::vector<double> values)
    : rows(r), cols(k), c(std::move(values)) {
  if (c.size() != rows * cols) throw DimensionMismatch("score table: entry count does not match shape");
  for (double v : c)
    if (!std::isfinite(v)) throw InvalidArgument("score table: entries must be finite");
}

double ScoreTable::expected(const Pmf& px, const Channel& ch) const {
  if (px.size() != rows || ch.input_size() != rows || ch.output_size() != cols)
    throw DimensionMismatch("score table: shape mismatch");
  double s = 0.0;
  for (std::size_t x = 0; x < rows; ++x)
    for (std::size_t u = 0; u < cols; ++u) s += px[x] * ch(x, u) * (*this)(x, u);
  return s;
}

double ScoreTable::best_constant(const Pmf& px) const {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t u = 0; u < cols; ++u) {
    double s = 0.0;
    for (std::size_t x = 0; x < rows; ++x) s += px[x] * (*this)(x, u);
    best = std::max(best, s);
  }
  return best;
}

double ScoreTable::best_pointwise(const Pmf& px) const {
  double s = 0.0;
  for (std::size_t x = 0; x < rows; ++x) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t u = 0; u < cols; ++u) m = std::max(m, (*this)(x, u));
    s += px[x] * m;
  }
  return s;
}

const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::Optimal: return "Optimal";
    case SolverStatus::ConstraintInactive: return "ConstraintInactive";
    case SolverStatus::Infeasible: return "Infeasible";
  }
  return "?";
}

// ---------------------------------------------------------------- min rate

SolverReport min_mi_linear_constraint(const Pmf& px, const LinearScore& score, std::size_t u_size, double tol,
                                      const SolverOptions& opts) {
  check_tol(tol);
  if (u_size == 0) throw InvalidArgument("solver: u_size must be >= 1");
  if (score.table.rows != px.size() || score.table.cols != u_size)
    throw DimensionMismatch("solver: score table is " + std::to_string(score.table.rows) + "x" +
                            std::to_string(score.table.cols) + ", expected " + std::to_string(px.size()) + "x" +
                            std::to_string(u_size));

  const Reduced red(px, score.table);
  const double t = score.threshold;
  SolverReport rep;

  const double smax = score.table.best_pointwise(px);
  if (smax < t - kFeasEps * (1.0 + std::abs(t))) {
    rep.status = SolverStatus::Infeasible;
    rep.optimal_rate = std::numeric_limits<double>::infinity();
    rep.score = smax;
    rep.constraint_slack = smax - t;
    return rep;
  }

  const std::size_t u0 = best_constant_index(red);
  std::vector<double> w_lo = red.constant_channel(u0);
  double s_lo = red.score(w_lo);
  if (s_lo >= t) {
    rep.status = SolverStatus::ConstraintInactive;
    rep.optimal_rate = 0.0;
    rep.channel = red.expand(w_lo);
    rep.score = s_lo;
    rep.constraint_slack = s_lo - t;
    return rep;
  }

  const TiltEngine engine(red, tol, opts.max_inner_iterations);
  double lam_lo = 0.0, lb_lo = 0.0, i_lo = 0.0;
  TiltSolution hi;
  int iterations = 0;
  for (double lam = 1.0;; lam *= 2.0) {
    hi = engine.solve(lam);
    iterations += hi.iterations;
    if (hi.score >= t) break;
    if (lam >= kLambdaCap) break;
    lam_lo = lam;
    w_lo = hi.w;
    s_lo = hi.score;
    i_lo = hi.info;
    lb_lo = hi.lagrangian_lb;
  }

  auto finish = [&](const std::vector<double>& w, double lam, double lower) {
    rep.status = SolverStatus::Optimal;
    rep.channel = red.expand(w);
    rep.optimal_rate = red.info(w);
    rep.score = red.score(w);
    rep.constraint_slack = rep.score - t;
    rep.lambda = lam;
    rep.iterations = iterations;
    rep.kkt_residual = engine.residual(w, lam);
    rep.duality_gap = std::max(0.0, rep.optimal_rate - lower);
    return rep;
  };

  if (hi.score < t) {
    // Only reachable at the analytic boundary t == smax; the tilted channel at
    // the largest multiplier is the limit point.
    return finish(hi.w, hi.lambda, 0.0);
  }

  std::vector<double> best_w;
  double best_lower = 0.0;
  for (int step = 0;; ++step) {
    const double theta = (t - s_lo) / (hi.score - s_lo);
    auto w = mix(w_lo, hi.w, std::clamp(theta, 0.0, 1.0));
    const double info = red.info(w);
    const double lower = std::max({0.0, lb_lo + lam_lo * t, hi.lagrangian_lb + hi.lambda * t});
    const double gap = info - lower;
    const double res = engine.residual(w, hi.lambda);
    best_w = std::move(w);
    best_lower = lower;
    const bool narrow = hi.lambda - lam_lo <= 1e-13 * hi.lambda;
    if ((gap <= tol && res <= tol) || narrow || step >= opts.max_bisection_steps) break;

    double mid = 0.5 * (lam_lo + hi.lambda);
    if (lam_lo > 0.0 && hi.lambda / lam_lo > 4.0) mid = std::sqrt(lam_lo * hi.lambda);
    auto sol = engine.solve(mid);
    iterations += sol.iterations;
    if (sol.score >= t) {
      hi = std::move(sol);
    } else {
      lam_lo = mid;
      w_lo = std::move(sol.w);
      s_lo = sol.score;
      i_lo = sol.info;
      lb_lo = sol.lagrangian_lb;
    }
  }
  (void)i_lo;
  return finish(best_w, hi.lambda, best_lower);
}

SolverReport rate_distortion(const Pmf& px, const DistortionMatrix& rho, double d, double tol) {
  if (px.size() != rho.rows()) throw DimensionMismatch("rate_distortion: px size != distortion rows");
  if (!(d >= 0.0 && d <= rho.rho_max() + 1e-12)) throw DomainError("rate_distortion: d outside [0, rho_max]");
  std::vector<double> c(rho.data().begin(), rho.data().end());
  for (double& v : c) v = -v;
  LinearScore ls{ScoreTable(rho.rows(), rho.cols(), std::move(c)), -d};
  return min_mi_linear_constraint(px, ls, rho.cols(), tol);
}

// ---------------------------------------------------------------- max score

MaxScoreReport max_score_rate_constraint(const Pmf& px, const ScoreTable& score, double max_rate, double tol,
                                         const SolverOptions& opts) {
  check_tol(tol);
  if (score.rows != px.size()) throw DimensionMismatch("max_score: score rows != px size");
  if (!(max_rate >= 0.0)) throw DomainError("max_score: rate must be >= 0");

  const Reduced red(px, score);
  MaxScoreReport rep;
  std::vector<double> w_lo = red.constant_channel(best_constant_index(red));
  double lam_lo = 0.0, lb_lo = 0.0;
  double s_lo = red.score(w_lo);

  auto finish = [&](const std::vector<double>& w, double lam, double upper) {
    rep.channel = red.expand(w);
    rep.score = red.score(w);
    rep.rate = red.info(w);
    rep.lambda = lam;
    rep.upper_bound = std::max(upper, rep.score);
    return rep;
  };
  if (max_rate <= kZeroProb) return finish(w_lo, 0.0, s_lo);

  const TiltEngine engine(red, tol, opts.max_inner_iterations);
  TiltSolution hi;
  bool bracketed = false;
  for (double lam = 1.0; lam <= kLambdaCap; lam *= 2.0) {
    hi = engine.solve(lam);
    rep.iterations += hi.iterations;
    if (hi.info >= max_rate) {
      bracketed = true;
      break;
    }
    lam_lo = lam;
    w_lo = hi.w;
    s_lo = hi.score;
    lb_lo = hi.lagrangian_lb;
  }
  if (!bracketed) {
    // rate budget exceeds what the best-score channel needs
    return finish(w_lo, lam_lo, score.best_pointwise(px));
  }

  auto interpolate = [&](const std::vector<double>& lo, const std::vector<double>& h) {
    // largest theta with I(mix) <= max_rate; I is convex along the segment
    double a = 0.0, b = 1.0;
    if (red.info(h) <= max_rate) return h;
    for (int i = 0; i < 80; ++i) {
      const double m = 0.5 * (a + b);
      (red.info(mix(lo, h, m)) <= max_rate ? a : b) = m;
    }
    return mix(lo, h, a);
  };

  std::vector<double> best_w;
  double best_upper = score.best_pointwise(px);
  for (int step = 0;; ++step) {
    auto w = interpolate(w_lo, hi.w);
    const double s = red.score(w);
    double upper = score.best_pointwise(px);
    if (lam_lo > 0.0) upper = std::min(upper, (max_rate - lb_lo) / lam_lo);
    upper = std::min(upper, (max_rate - hi.lagrangian_lb) / hi.lambda);
    best_w = std::move(w);
    best_upper = upper;
    const bool narrow = hi.lambda - lam_lo <= 1e-13 * hi.lambda;
    if (upper - s <= tol || narrow || step >= opts.max_bisection_steps) break;

    double mid = 0.5 * (lam_lo + hi.lambda);
    if (lam_lo > 0.0 && hi.lambda / lam_lo > 4.0) mid = std::sqrt(lam_lo * hi.lambda);
    auto sol = engine.solve(mid);
    rep.iterations += sol.iterations;
    if (sol.info >= max_rate) {
      hi = std::move(sol);
    } else {
      lam_lo = mid;
      w_lo = std::move(sol.w);
      s_lo = sol.score;
      lb_lo = sol.lagrangian_lb;
    }
  }
  return finish(best_w, hi.lambda, best_upper);
}

DistortionRateResult distortion_rate(const Pmf& px, const DistortionMatrix& rho, double r, double tol) {
  if (px.size() != rho.rows()) throw DimensionMismatch("distortion_rate: px size != distortion rows");
  if (!(r >= 0.0 && r <= std::log2(static_cast<double>(px.size())) + 1e-9))
    throw DomainError("distortion_rate: r outside [0, log2|X|]");
  std::vector<double> c(rho.data().begin(), rho.data().end());
  for (double& v : c) v = -v;
  const auto rep = max_score_rate_constraint(px, ScoreTable(rho.rows(), rho.cols(), std::move(c)), r, tol);
  return {-rep.score, rep.channel, rep.rate};
}

// ---------------------------------------------------------------- grid oracle

namespace {

struct GridRow {
  std::vector<double> w;
  double score = 0.0;    // px(x) * sum_u w c
  double neg_ent = 0.0;  // px(x) * sum_u w log2 w
};

void compositions(std::size_t parts, long total, std::vector<long>& cur, const std::function<void()>& emit) {
  if (cur.size() + 1 == parts) {
    long used = 0;
    for (long v : cur) used += v;
    cur.push_back(total - used);
    emit();
    cur.pop_back();
    return;
  }
  long used = 0;
  for (long v : cur) used += v;
  for (long v = 0; v <= total - used; ++v) {
    cur.push_back(v);
    compositions(parts, total, cur, emit);
    cur.pop_back();
  }
}

GridRow make_row(const Pmf& px, const ScoreTable& s, std::size_t x, std::vector<double> w) {
  GridRow row;
  for (std::size_t u = 0; u < w.size(); ++u) {
    row.score += px[x] * w[u] * s(x, u);
    if (w[u] > kZeroProb) row.neg_ent += px[x] * w[u] * std::log2(w[u]);
  }
  row.w = std::move(w);
  return row;
}

/// Exhaustive minimum over the cartesian product of per-row candidate lists.
double product_minimum(const Pmf& px, const std::vector<std::vector<GridRow>>& rows, double threshold,
                       std::size_t u_size, std::vector<double>* argmin) {
  const std::size_t nx = rows.size();
  std::vector<std::size_t> idx(nx, 0);
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> q(u_size);
  for (;;) {
    double score = 0.0, neg = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
      score += rows[x][idx[x]].score;
      neg += rows[x][idx[x]].neg_ent;
    }
    if (score >= threshold - kFeasEps) {
      std::fill(q.begin(), q.end(), 0.0);
      for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t u = 0; u < u_size; ++u) q[u] += px[x] * rows[x][idx[x]].w[u];
      double qent = 0.0;
      for (double v : q)
        if (v > kZeroProb) qent += v * std::log2(v);
      const double info = neg - qent;
      if (info < best) {
        best = info;
        if (argmin) {
          argmin->clear();
          for (std::size_t x = 0; x < nx; ++x)
            argmin->insert(argmin->end(), rows[x][idx[x]].w.begin(), rows[x][idx[x]].w.end());
        }
      }
    }
    std::size_t k = 0;
    while (k < nx && ++idx[k] == rows[k].size()) idx[k++] = 0;
    if (k == nx) break;
  }
  return std::max(0.0, best);
}

double binomial(double n, double k) {
  double r = 1.0;
  for (double i = 0; i < k; ++i) r = r * (n - i) / (i + 1.0);
  return r;
}

}  // namespace

double grid_oracle(const Pmf& px, const LinearScore& score, std::size_t u_size, double step, double budget) {
  if (score.table.rows != px.size() || score.table.cols != u_size)
    throw DimensionMismatch("grid_oracle: score shape mismatch");
  if (u_size > 3 || px.size() > 3) throw InvalidArgument("grid_oracle: alphabets larger than 3 are not supported");
  if (!(step >= 1e-3 && step <= 1.0)) throw InvalidArgument("grid_oracle: step must lie in [1e-3, 1]");
  const long k = std::lround(1.0 / step);
  const double per_row = binomial(static_cast<double>(k + static_cast<long>(u_size) - 1),
                                  static_cast<double>(u_size - 1));
  const double total = std::pow(per_row, static_cast<double>(px.size()));
  if (total > budget)
    throw BudgetExceeded("grid_oracle: " + std::to_string(total) + " grid points exceed budget");

  std::vector<std::vector<GridRow>> rows(px.size());
  for (std::size_t x = 0; x < px.size(); ++x) {
    std::vector<long> cur;
    compositions(u_size, k, cur, [&] {
      std::vector<double> w(u_size);
      for (std::size_t u = 0; u < u_size; ++u) w[u] = static_cast<double>(cur[u]) / static_cast<double>(k);
      rows[x].push_back(make_row(px, score.table, x, std::move(w)));
    });
  }
  return product_minimum(px, rows, score.threshold, u_size, nullptr);
}

double grid_oracle_refined(const Pmf& px, const LinearScore& score, std::size_t u_size, double coarse_step,
                           double fine_step, double budget) {
  if (score.table.rows != px.size() || score.table.cols != u_size)
    throw DimensionMismatch("grid_oracle_refined: score shape mismatch");
  if (u_size > 3 || px.size() > 3)
    throw InvalidArgument("grid_oracle_refined: alphabets larger than 3 are not supported");
  const long k = std::lround(1.0 / coarse_step);
  std::vector<std::vector<GridRow>> rows(px.size());
  for (std::size_t x = 0; x < px.size(); ++x) {
    std::vector<long> cur;
    compositions(u_size, k, cur, [&] {
      std::vector<double> w(u_size);
      for (std::size_t u = 0; u < u_size; ++u) w[u] = static_cast<double>(cur[u]) / static_cast<double>(k);
      rows[x].push_back(make_row(px, score.table, x, std::move(w)));
    });
  }
  double total = 1.0;
  for (const auto& r : rows) total *= static_cast<double>(r.size());
  if (total > budget) throw BudgetExceeded("grid_oracle_refined: coarse grid exceeds budget");

  std::vector<double> incumbent;
  double best = product_minimum(px, rows, score.threshold, u_size, &incumbent);
  if (!std::isfinite(best)) return best;

  constexpr int kHalfWidth = 8;
  for (double h = coarse_step / 4.0; h >= fine_step * 0.999; h /= 4.0) {
    for (std::size_t x = 0; x < px.size(); ++x) {
      rows[x].clear();
      const std::vector<double> centre(incumbent.begin() + static_cast<std::ptrdiff_t>(x * u_size),
                                       incumbent.begin() + static_cast<std::ptrdiff_t>((x + 1) * u_size));
      std::vector<int> off(u_size - 1, -kHalfWidth);
      for (;;) {
        std::vector<double> w(u_size);
        double rest = 1.0;
        bool ok = true;
        for (std::size_t u = 0; u + 1 < u_size; ++u) {
          w[u] = centre[u] + off[u] * h;
          if (w[u] < -1e-12) ok = false;
          w[u] = std::max(0.0, w[u]);
          rest -= w[u];
        }
        if (rest < -1e-12) ok = false;
        w[u_size - 1] = std::max(0.0, rest);
        if (ok) rows[x].push_back(make_row(px, score.table, x, std::move(w)));
        std::size_t d = 0;
        while (d < off.size() && ++off[d] > kHalfWidth) off[d++] = -kHalfWidth;
        if (d == off.size()) break;
      }
    }
    std::vector<double> cand;
    const double v = product_minimum(px, rows, score.threshold, u_size, &cand);
    if (v < best) {
      best = v;
      incumbent = std::move(cand);
    }
  }
  return best;
}

}  // namespace simid
