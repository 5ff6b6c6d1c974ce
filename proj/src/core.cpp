#include "simid/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace simid {

namespace {

constexpr double kInputSumTol = 1e-6;

double plogp(double p) { return p > kZeroProb ? p * std::log2(p) : 0.0; }

}  // namespace

// ---------------------------------------------------------------- Pmf

Pmf::Pmf(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw InvalidArgument("pmf: alphabet must be non-empty");
  double sum = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0) throw InvalidArgument("pmf: weights must be finite and >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kInputSumTol)
    throw InvalidArgument("pmf: weights sum to " + std::to_string(sum) + ", expected 1");
  for (double& p : probs_) p /= sum;
}

Pmf Pmf::uniform(std::size_t size) {
  if (size == 0) throw InvalidArgument("pmf: alphabet must be non-empty");
  return Pmf(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

Pmf Pmf::point_mass(std::size_t size, std::size_t at) {
  if (at >= size) throw InvalidArgument("pmf: point mass index out of range");
  std::vector<double> v(size, 0.0);
  v[at] = 1.0;
  return Pmf(std::move(v));
}

Pmf Pmf::bernoulli(double p_one) {
  if (!(p_one >= 0.0 && p_one <= 1.0)) throw InvalidArgument("pmf: Bernoulli parameter outside [0,1]");
  return Pmf({1.0 - p_one, p_one});
}

Pmf Pmf::from_weights(std::vector<double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw InvalidArgument("pmf: weights must be finite and >= 0");
    sum += w;
  }
  if (!(sum > 0.0)) throw InvalidArgument("pmf: weights must not all be zero");
  for (double& w : weights) w /= sum;
  return Pmf(std::move(weights));
}

// ---------------------------------------------------------------- DistortionMatrix

DistortionMatrix::DistortionMatrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), rho_(std::move(row_major)) {
  if (rows_ == 0 || cols_ == 0) throw InvalidArgument("distortion: empty matrix");
  if (rho_.size() != rows_ * cols_) throw DimensionMismatch("distortion: entry count does not match shape");
  analyze();
}

DistortionMatrix::DistortionMatrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows.front().empty()) throw InvalidArgument("distortion: empty matrix");
  rows_ = rows.size();
  cols_ = rows.front().size();
  rho_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionMismatch("distortion: ragged rows");
    rho_.insert(rho_.end(), r.begin(), r.end());
  }
  analyze();
}

DistortionMatrix DistortionMatrix::hamming(std::size_t size) {
  std::vector<double> v(size * size, 1.0);
  for (std::size_t i = 0; i < size; ++i) v[i * size + i] = 0.0;
  return DistortionMatrix(size, size, std::move(v));
}

void DistortionMatrix::analyze() {
  rho_max_ = 0.0;
  for (double r : rho_) {
    if (!std::isfinite(r) || r < 0.0) throw InvalidArgument("distortion: entries must be finite and >= 0");
    rho_max_ = std::max(rho_max_, r);
  }
  is_hamming_ = false;
  is_symmetric_ = false;
  satisfies_triangle_ = false;
  if (!is_square()) return;

  const std::size_t n = rows_;
  is_hamming_ = true;
  is_symmetric_ = true;
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      const double v = (*this)(x, y);
      if (v != (x == y ? 0.0 : 1.0)) is_hamming_ = false;
      if (v != (*this)(y, x)) is_symmetric_ = false;
    }
  }
  satisfies_triangle_ = true;
  for (std::size_t x = 0; x < n && satisfies_triangle_; ++x)
    for (std::size_t y = 0; y < n && satisfies_triangle_; ++y)
      for (std::size_t z = 0; z < n; ++z)
        if ((*this)(x, z) > (*this)(x, y) + (*this)(y, z) + 1e-12) {
          satisfies_triangle_ = false;
          break;
        }
}

bool DistortionMatrix::has_zero_diagonal() const {
  if (!is_square()) return false;
  for (std::size_t i = 0; i < rows_; ++i)
    if ((*this)(i, i) != 0.0) return false;
  return true;
}

DistortionMatrix DistortionMatrix::transposed() const {
  std::vector<double> t(rho_.size());
  for (std::size_t x = 0; x < rows_; ++x)
    for (std::size_t y = 0; y < cols_; ++y) t[y * rows_ + x] = (*this)(x, y);
  return DistortionMatrix(cols_, rows_, std::move(t));
}

// ---------------------------------------------------------------- Channel

Channel::Channel(std::vector<Pmf> rows) : rows_(std::move(rows)) {
  if (rows_.empty()) throw InvalidArgument("channel: no input letters");
  for (const auto& r : rows_)
    if (r.size() != rows_.front().size()) throw DimensionMismatch("channel: rows have different output sizes");
}

Channel::Channel(std::size_t input_size, std::size_t output_size, std::vector<double> row_major) {
  if (row_major.size() != input_size * output_size)
    throw DimensionMismatch("channel: entry count does not match shape");
  if (input_size == 0 || output_size == 0) throw InvalidArgument("channel: empty shape");
  rows_.reserve(input_size);
  for (std::size_t x = 0; x < input_size; ++x)
    rows_.emplace_back(std::vector<double>(row_major.begin() + static_cast<std::ptrdiff_t>(x * output_size),
                                           row_major.begin() + static_cast<std::ptrdiff_t>((x + 1) * output_size)));
}

Channel Channel::identity(std::size_t size) {
  std::vector<Pmf> rows;
  rows.reserve(size);
  for (std::size_t x = 0; x < size; ++x) rows.push_back(Pmf::point_mass(size, x));
  return Channel(std::move(rows));
}

Channel Channel::constant(std::size_t input_size, const Pmf& row) {
  return Channel(std::vector<Pmf>(input_size, row));
}

Pmf Channel::output_marginal(const Pmf& px) const {
  if (px.size() != input_size()) throw DimensionMismatch("channel: input pmf size mismatch");
  std::vector<double> pu(output_size(), 0.0);
  for (std::size_t x = 0; x < input_size(); ++x)
    for (std::size_t u = 0; u < output_size(); ++u) pu[u] += px[x] * rows_[x][u];
  return Pmf::from_weights(std::move(pu));
}

// ---------------------------------------------------------------- RateCurve

RateCurve::RateCurve(std::vector<RatePoint> points, std::string label)
    : points_(std::move(points)), label_(std::move(label)) {
  for (std::size_t i = 1; i < points_.size(); ++i)
    if (!(points_[i].d > points_[i - 1].d)) throw InvalidArgument("rate curve: D values must be strictly increasing");
}

// ---------------------------------------------------------------- information measures

double entropy(const Pmf& p) {
  double h = 0.0;
  for (double v : p.probs()) h -= plogp(v);
  return std::max(0.0, h);
}

double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("binary entropy: argument outside [0,1]");
  return -plogp(p) - plogp(1.0 - p);
}

double binary_entropy_inverse(double h) {
  if (!(h >= 0.0 && h <= 1.0)) throw DomainError("binary entropy inverse: argument outside [0,1]");
  double lo = 0.0, hi = 0.5;
  for (int i = 0; i < 200 && hi - lo > 1e-17; ++i) {
    const double mid = 0.5 * (lo + hi);
    (binary_entropy(mid) < h ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double mutual_information(std::span<const double> px, std::span<const double> channel, std::size_t u_size) {
  const std::size_t nx = px.size();
  std::vector<double> pu(u_size, 0.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t u = 0; u < u_size; ++u) pu[u] += px[x] * channel[x * u_size + u];
  double info = 0.0;
  for (std::size_t x = 0; x < nx; ++x) {
    if (px[x] <= kZeroProb) continue;
    for (std::size_t u = 0; u < u_size; ++u) {
      const double w = channel[x * u_size + u];
      if (w <= kZeroProb || pu[u] <= kZeroProb) continue;
      info += px[x] * w * std::log2(w / pu[u]);
    }
  }
  return std::max(0.0, info);
}

double mutual_information(const Pmf& px, const Channel& ch) {
  if (px.size() != ch.input_size()) throw DimensionMismatch("mutual information: px size != channel input size");
  const std::size_t nu = ch.output_size();
  std::vector<double> table;
  table.reserve(px.size() * nu);
  for (std::size_t x = 0; x < px.size(); ++x)
    for (std::size_t u = 0; u < nu; ++u) table.push_back(ch(x, u));
  return mutual_information(px.probs(), table, nu);
}

double kl_divergence(const Pmf& p, const Pmf& q) {
  if (p.size() != q.size()) throw DimensionMismatch("kl divergence: size mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= kZeroProb) continue;
    if (q[i] <= kZeroProb)
      throw AbsoluteContinuityViolation("kl divergence: q(" + std::to_string(i) + ") = 0 where p > 0");
    d += p[i] * std::log2(p[i] / q[i]);
  }
  return std::max(0.0, d);
}

// ---------------------------------------------------------------- envelope

RateCurve lower_convex_envelope(const RateCurve& curve) {
  const auto& pts = curve.points();
  if (pts.size() < 2) throw TooFewPoints("lower convex envelope: need at least 2 points");

  // Andrew's monotone chain, lower hull only; points are already sorted by D.
  std::vector<std::size_t> hull;
  auto cross = [&](std::size_t o, std::size_t a, std::size_t b) {
    return (pts[a].d - pts[o].d) * (pts[b].r - pts[o].r) - (pts[a].r - pts[o].r) * (pts[b].d - pts[o].d);
  };
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), i) <= 0.0) hull.pop_back();
    hull.push_back(i);
  }

  std::vector<RatePoint> out;
  out.reserve(pts.size());
  std::size_t seg = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (seg + 1 < hull.size() && hull[seg + 1] < i) ++seg;
    RatePoint p = pts[i];
    if (seg + 1 < hull.size() && hull[seg] != i && hull[seg + 1] != i) {
      const auto& a = pts[hull[seg]];
      const auto& b = pts[hull[seg + 1]];
      const double t = (p.d - a.d) / (b.d - a.d);
      const double chord = a.r + t * (b.r - a.r);
      if (chord < p.r) {
        p.r = chord;
        p.provenance += p.provenance.empty() ? "envelope" : "+envelope";
      }
    }
    out.push_back(std::move(p));
  }
  return RateCurve(std::move(out), curve.label());
}

}  // namespace simid
