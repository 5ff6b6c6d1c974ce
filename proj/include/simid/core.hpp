#pragma once
// Probability-simplex types, information measures and the lower convex
// envelope used by every rate computation. All logarithms are base 2.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "simid/error.hpp"

namespace simid {

// Probabilities below this are treated as exact zeros inside log terms.
inline constexpr double kZeroProb = 1e-15;
inline constexpr double kPmfSumTol = 1e-12;

/// Probability vector over a finite alphabet.
class Pmf {
 public:
  Pmf() = default;

  /// Validates nonnegativity and unit sum (within 1e-6), then renormalizes so
  /// the stored weights sum to 1 within 1e-12.
  explicit Pmf(std::vector<double> probs);

  static Pmf uniform(std::size_t size);
  static Pmf point_mass(std::size_t size, std::size_t at);
  static Pmf bernoulli(double p_one);
  /// Normalizes arbitrary nonnegative weights (at least one positive).
  static Pmf from_weights(std::vector<double> weights);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }
  const std::vector<double>& vec() const { return probs_; }

  bool operator==(const Pmf&) const = default;

 private:
  std::vector<double> probs_;
};

/// Per-letter distortion rho(x, y) >= 0 with cached structural flags.
class DistortionMatrix {
 public:
  DistortionMatrix() = default;
  DistortionMatrix(std::size_t rows, std::size_t cols, std::vector<double> row_major);
  explicit DistortionMatrix(const std::vector<std::vector<double>>& rows);

  static DistortionMatrix hamming(std::size_t size);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t x, std::size_t y) const { return rho_[x * cols_ + y]; }
  double rho_max() const { return rho_max_; }
  bool is_square() const { return rows_ == cols_; }
  bool is_hamming() const { return is_hamming_; }
  bool is_symmetric() const { return is_symmetric_; }
  /// Exhaustive check of rho(x,z) <= rho(x,y) + rho(y,z); false when not square.
  bool satisfies_triangle() const { return satisfies_triangle_; }
  bool has_zero_diagonal() const;

  DistortionMatrix transposed() const;
  std::span<const double> data() const { return rho_; }

 private:
  void analyze();

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> rho_;
  double rho_max_ = 0.0;
  bool is_hamming_ = false;
  bool is_symmetric_ = false;
  bool satisfies_triangle_ = false;
};

/// Conditional distribution P(u|x): one Pmf per input letter.
class Channel {
 public:
  Channel() = default;
  explicit Channel(std::vector<Pmf> rows);
  /// Row-major table; each row is validated as a Pmf.
  Channel(std::size_t input_size, std::size_t output_size, std::vector<double> row_major);

  static Channel identity(std::size_t size);
  /// Every row equal to `row` (output independent of input).
  static Channel constant(std::size_t input_size, const Pmf& row);

  std::size_t input_size() const { return rows_.size(); }
  std::size_t output_size() const { return rows_.empty() ? 0 : rows_.front().size(); }
  const Pmf& row(std::size_t x) const { return rows_[x]; }
  double operator()(std::size_t x, std::size_t u) const { return rows_[x][u]; }

  /// Output marginal sum_x px(x) P(u|x).
  Pmf output_marginal(const Pmf& px) const;

 private:
  std::vector<Pmf> rows_;
};

struct RatePoint {
  double d = 0.0;  // distortion units
  double r = 0.0;  // bits per symbol
  std::string provenance;
};

/// Sampled (D, R) pairs with strictly increasing D.
class RateCurve {
 public:
  RateCurve() = default;
  explicit RateCurve(std::vector<RatePoint> points, std::string label = {});

  const std::vector<RatePoint>& points() const { return points_; }
  const std::string& label() const { return label_; }
  std::size_t size() const { return points_.size(); }
  const RatePoint& operator[](std::size_t i) const { return points_[i]; }

 private:
  std::vector<RatePoint> points_;
  std::string label_;
};

double entropy(const Pmf& p);
double binary_entropy(double p);
/// Inverse of the binary entropy on [0, 1/2].
double binary_entropy_inverse(double h);

double mutual_information(const Pmf& px, const Channel& ch);
/// Mutual information for a raw row-major channel table (no validation).
double mutual_information(std::span<const double> px, std::span<const double> channel,
                          std::size_t u_size);

double kl_divergence(const Pmf& p, const Pmf& q);

/// Greatest convex minorant of the curve, re-sampled on the same D grid by
/// chord interpolation between lower-hull vertices.
RateCurve lower_convex_envelope(const RateCurve& curve);

}  // namespace simid
