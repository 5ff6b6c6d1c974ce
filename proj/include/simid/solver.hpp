#pragma once
// Minimum mutual information subject to one linear constraint on the channel.
//
//   minimize   I(X;U)
//   subject to sum_{x,u} px(x) P(u|x) c(x,u) >= threshold
//
// Solved in Lagrangian form: for a multiplier lambda >= 0 the inner problem
// min I - lambda * score is solved by alternating minimization
// (P(u|x) ∝ P(u) 2^{lambda c(x,u)}, then P(u) <- induced marginal), and the
// multiplier is bisected until the constraint is active. Every inner solve also
// yields a lower bound on the Lagrangian minimum, so the reported rate carries a
// duality-gap certificate.

#include <cstddef>
#include <limits>
#include <vector>

#include "simid/core.hpp"

namespace simid {

/// Per-(x,u) score table, row-major |X| x |U|.
struct ScoreTable {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> c;

  ScoreTable() = default;
  ScoreTable(std::size_t r, std::size_t k, std::vector<double> values);
  double operator()(std::size_t x, std::size_t u) const { return c[x * cols + u]; }

  /// sum_{x,u} px(x) ch(u|x) c(x,u)
  double expected(const Pmf& px, const Channel& ch) const;
  /// Score of the best constant channel: max_u sum_x px(x) c(x,u).
  double best_constant(const Pmf& px) const;
  /// Largest attainable score: sum_x px(x) max_u c(x,u).
  double best_pointwise(const Pmf& px) const;
};

/// Constraint  sum px(x) P(u|x) c(x,u) >= threshold.
struct LinearScore {
  ScoreTable table;
  double threshold = 0.0;
};

enum class SolverStatus { Optimal, ConstraintInactive, Infeasible };

const char* to_string(SolverStatus s);

struct SolverReport {
  double optimal_rate = 0.0;  // bits; +inf when Infeasible
  Channel channel;            // empty when Infeasible
  double lambda = 0.0;        // bits per score unit
  int iterations = 0;         // total inner iterations
  double kkt_residual = 0.0;  // sup-norm fixed-point residual of the returned channel
  double constraint_slack = 0.0;
  double duality_gap = 0.0;   // optimal_rate minus certified lower bound
  double score = 0.0;         // attained constraint value
  SolverStatus status = SolverStatus::Optimal;
};

struct SolverOptions {
  int max_inner_iterations = 100'000;
  int max_bisection_steps = 200;
};

SolverReport min_mi_linear_constraint(const Pmf& px, const LinearScore& score, std::size_t u_size, double tol,
                                      const SolverOptions& opts = {});

/// Classical R(D): min I(X;Xhat) s.t. E[rho(X,Xhat)] <= d.
SolverReport rate_distortion(const Pmf& px, const DistortionMatrix& rho, double d, double tol);

/// maximize expected score s.t. I(X;U) <= max_rate.
struct MaxScoreReport {
  double score = 0.0;        // attained value
  double upper_bound = 0.0;  // certified bound on the true maximum
  double rate = 0.0;         // I(X;U) of `channel`
  double lambda = 0.0;
  Channel channel;
  int iterations = 0;
};

MaxScoreReport max_score_rate_constraint(const Pmf& px, const ScoreTable& score, double max_rate, double tol,
                                         const SolverOptions& opts = {});

struct DistortionRateResult {
  double d_of_r = 0.0;
  Channel achieving_channel;
  double rate = 0.0;  // I(X;Xhat) under achieving_channel
};

/// Classical D(R) with the achieving test channel.
DistortionRateResult distortion_rate(const Pmf& px, const DistortionMatrix& rho, double r, double tol);

inline constexpr double kDefaultGridBudget = 2e8;

/// Exhaustive minimum of I(X;U) over channels whose rows lie on the simplex
/// lattice with spacing `step`, restricted to feasible points. Returns +inf
/// when no lattice point is feasible. Throws BudgetExceeded past `budget`.
double grid_oracle(const Pmf& px, const LinearScore& score, std::size_t u_size, double step,
                   double budget = kDefaultGridBudget);

/// Coarse-to-fine exhaustive search: a full grid at `coarse_step`, then
/// repeated exhaustive boxes around the incumbent with the spacing divided by
/// four until it drops below `fine_step`.
double grid_oracle_refined(const Pmf& px, const LinearScore& score, std::size_t u_size, double coarse_step,
                           double fine_step, double budget = kDefaultGridBudget);

}  // namespace simid
