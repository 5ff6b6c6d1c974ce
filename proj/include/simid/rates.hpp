#pragma once
// Identification-rate quantities: R_ID(D) through the sign-pattern (Hamming)
// and dual-vertex (general distortion) decompositions, the two triangle-scheme
// rates, the Hamming lower bound and closed forms.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "simid/core.hpp"
#include "simid/solver.hpp"
#include "simid/transport.hpp"

namespace simid {

/// Binary table f(x,u), stored as one row-bitmask per column u (bit x = f(x,u)).
/// No column is constant in x and no two columns coincide.
class SignPattern {
 public:
  SignPattern(std::size_t x_size, std::vector<std::uint32_t> columns);

  std::size_t x_size() const { return x_size_; }
  std::size_t u_size() const { return columns_.size(); }
  bool operator()(std::size_t x, std::size_t u) const { return (columns_[u] >> x) & 1U; }
  /// (-1)^f(x,u)
  double sign(std::size_t x, std::size_t u) const { return (*this)(x, u) ? -1.0 : 1.0; }
  const std::vector<std::uint32_t>& columns() const { return columns_; }

  std::string to_string() const;

 private:
  std::size_t x_size_;
  std::vector<std::uint32_t> columns_;
};

inline constexpr std::uint64_t kDefaultPatternBudget = 2'000'000;

/// C(2^x_size - 2, u_size), saturating at UINT64_MAX.
std::uint64_t sign_pattern_count(std::size_t x_size, std::size_t u_size);

/// Lazy, deterministic stream of all admissible sign patterns: columns are
/// strictly ascending row-bitmasks, patterns in lexicographic order.
class SignPatternStream {
 public:
  SignPatternStream(std::size_t x_size, std::size_t u_size, std::uint64_t budget = kDefaultPatternBudget);

  /// Next pattern, or nullopt when exhausted.
  std::optional<SignPattern> next();
  std::uint64_t count() const { return count_; }

 private:
  std::size_t x_size_;
  std::uint32_t max_mask_;
  std::vector<std::uint32_t> cur_;
  bool started_ = false;
  bool done_ = false;
  std::uint64_t count_;
};

std::vector<SignPattern> enumerate_sign_patterns(std::size_t x_size, std::size_t u_size,
                                                 std::uint64_t budget = kDefaultPatternBudget);

/// Per-(x,u) scores whose expectation under px and a channel equals L_f:
/// c(x,u) = (-1)^f(x,u) - sum_x' (-1)^f(x',u) py(x').
ScoreTable linear_score_of_pattern(const SignPattern& f, const Pmf& px, const Pmf& py);

enum class RateStatus { Optimal, ZeroRate, Infeasible };
const char* to_string(RateStatus s);

struct RateOptions {
  double tol = 1e-4;
  std::size_t threads = 1;
  std::uint64_t budget = kDefaultPatternBudget;
  /// r_id_general: enumerate every vertex assignment instead of combinations.
  bool full_enumeration = false;
};

struct IdRateResult {
  double rate = 0.0;  // +inf when Infeasible
  RateStatus status = RateStatus::Optimal;
  Channel achieving_channel;
  long winning_index = -1;  // index into the pattern / assignment enumeration
  std::optional<SignPattern> winning_pattern;
  std::vector<std::size_t> winning_vertices;  // r_id_general: vertex per u
  std::vector<double> per_pattern_values;     // +inf for infeasible subproblems
  std::size_t u_cardinality_used = 0;
};

IdRateResult r_id_hamming(const Pmf& px, const Pmf& py, double d, std::size_t u_size, const RateOptions& opts = {});

IdRateResult r_id_general(const Pmf& px, const Pmf& py, const DistortionMatrix& rho, double d,
                          std::size_t u_size, const RateOptions& opts = {});

/// Linear pieces of rho_bar(., py): deduplicated dual vertices with pieces
/// that share alpha merged (larger offset kept) and pieces dominated by a
/// single other piece on the whole simplex removed.
std::vector<DualVertex> rho_bar_pieces(const DistortionMatrix& rho, const Pmf& py);

/// Dispatches to r_id_hamming for Hamming distortion, r_id_general otherwise.
IdRateResult r_id(const Pmf& px, const Pmf& py, const DistortionMatrix& rho, double d, std::size_t u_size,
                  const RateOptions& opts = {});

struct IdCurve {
  RateCurve raw;        // u_size = |X|
  RateCurve envelope;   // lower convex envelope of raw
  std::vector<double> strict_cardinality;  // u_size = |X|+1 spot check (empty if disabled)
  std::vector<IdRateResult> points;
};

/// Lower convex envelope of the finite points; +inf points pass through.
RateCurve envelope_of_finite(const RateCurve& curve);

IdCurve r_id_curve(const Pmf& px, const Pmf& py, const DistortionMatrix& rho, const std::vector<double>& d_grid,
                   const RateOptions& opts = {}, bool spot_check = true);

// ---- triangle schemes (square distortion with the triangle property)

/// Score E[rho(Xhat,Y)] - E[rho(Xhat,X)] per (x, xhat).
ScoreTable tc_score(const Pmf& py, const DistortionMatrix& rho);

SolverReport r_id_tc(const Pmf& px, const Pmf& py, const DistortionMatrix& rho, double d, double tol);
double d_id_tc(const Pmf& px, const Pmf& py, const DistortionMatrix& rho, double r, double tol);

struct LcDetail {
  double value = 0.0;             // E[rho(Xhat,Y)] - E[rho(Xhat,X)]
  double distortion = 0.0;        // E[rho(Xhat,X)] of the selected channel (~ D(r))
  double query_distortion = 0.0;  // E[rho(Xhat,Y)], Xhat independent of Y
  Channel channel;
};

inline constexpr double kLcTieBreakWeight = 1e-4;

LcDetail d_id_lc_detail(const Pmf& px, const Pmf& py, const DistortionMatrix& rho, double r, double tol);
double d_id_lc(const Pmf& px, const Pmf& py, const DistortionMatrix& rho, double r, double tol);

struct RateValue {
  double rate = 0.0;
  RateStatus status = RateStatus::Optimal;
};

/// Smallest rate whose LC threshold reaches d (inverse of d_id_lc, with the
/// running maximum taken over rates since a higher rate can emulate a lower one).
class LcInverter {
 public:
  LcInverter(const Pmf& px, const Pmf& py, const DistortionMatrix& rho, double tol, std::size_t grid_points = 32);
  RateValue rate_for(double d) const;

 private:
  Pmf px_, py_;
  DistortionMatrix rho_;
  double tol_;
  std::vector<double> r_grid_;
  std::vector<double> d_grid_;
};

RateValue r_id_lc(const Pmf& px, const Pmf& py, const DistortionMatrix& rho, double d, double tol);

// ---- bounds and closed forms

struct LowerBound {
  double value = 0.0;
  bool kl_infinite = false;  // px not absolutely continuous w.r.t. py; bound reported as 0
};

/// [2 d^2 log2(e) - D(px||py)]^+ for Hamming distortion.
LowerBound hamming_lower_bound(const Pmf& px, const Pmf& py, double d);

/// R_ID(d) for X ~ Ber(p), Y ~ Ber(1/2), Hamming: R(1/2 - d) of the source.
double closed_form_binary_symmetric(double p, double d);

}  // namespace simid
