#pragma once
// Finite-blocklength triangle identification schemes: a greedy covering
// codebook, nearest-codeword signatures with the exact stored distortion, the
// triangle decision rule, an exhaustive admissibility scan and a seeded Monte
// Carlo estimate of Pr{maybe}.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "simid/core.hpp"

namespace simid {

using Sequence = std::vector<std::uint8_t>;

/// Base-`alphabet` index of a sequence, first letter most significant.
std::uint64_t sequence_index(const Sequence& s, std::size_t alphabet);
Sequence sequence_at(std::uint64_t index, std::size_t n, std::size_t alphabet);

/// Sum of per-letter distortions rho(a_i, b_i) (not normalized by n).
double sequence_distortion(const Sequence& a, const Sequence& b, const DistortionMatrix& rho);

inline constexpr std::uint64_t kDefaultSequenceBudget = std::uint64_t{1} << 22;

struct CodebookOptions {
  /// Letter distortion; Hamming on the source alphabet when left empty.
  DistortionMatrix rho;
  /// A codeword covers x when every joint-type count N(a,b) is within this many
  /// symbols of N(a) * W(b|a).
  double joint_slack = 1.0;
  /// Cover only gamma-typical x and erase the rest.
  bool typical_only = false;
  double gamma = 0.125;
  std::uint64_t sequence_budget = kDefaultSequenceBudget;
};

struct TypeClassReport {
  std::vector<std::size_t> type;  // letter counts of x
  std::uint64_t sequences = 0;
  double max_distortion = 0.0;    // max over the class of d(x, nearest codeword), per symbol
};

struct CoveringReport {
  std::uint64_t target_sequences = 0;  // all sequences, or the typical ones
  std::uint64_t covered = 0;           // covered in the joint-type sense by the greedy pass
  std::uint64_t residual = 0;          // target sequences the budget left uncovered
  double max_distortion = 0.0;         // covering radius, per symbol
  std::vector<TypeClassReport> classes;
};

struct Codebook {
  std::size_t n = 0;
  std::size_t source_alphabet = 0;
  std::size_t reconstruction_alphabet = 0;
  std::vector<Sequence> codewords;
  double rate = 0.0;  // log2(count)/n, or log2(count+1)/n in typical-only mode
  DistortionMatrix rho;
  bool typical_only = false;
  double gamma = 0.0;
  Pmf px;  // reference for typicality
  CoveringReport covering_radius_report;

  /// Nearest codeword per source sequence index (-1 = erasure); empty when
  /// the sequence space was not enumerated.
  std::vector<std::int32_t> nearest;
  std::vector<double> nearest_sum;

  /// Codebook from explicit codewords; the nearest table is filled when the
  /// sequence space fits the budget.
  static Codebook from_codewords(std::size_t n, std::size_t source_alphabet, std::vector<Sequence> codewords,
                                 const DistortionMatrix& rho, std::uint64_t sequence_budget = kDefaultSequenceBudget);
};

bool is_typical(const Sequence& x, const Pmf& px, double gamma);

/// D(R)-achieving test channel for rate r under rho'(x,xhat) = rho(xhat,x),
/// the usual covering target.
Channel covering_target_channel(const Pmf& px, const DistortionMatrix& rho, double rate, double tol = 1e-6);

Codebook build_codebook(std::size_t n, const Pmf& px, const Channel& target_channel, double budget_rate,
                        const CodebookOptions& opts = {});

struct Signature {
  std::optional<std::uint32_t> index;  // nullopt = erasure
  double stored_sum = 0.0;             // sum of letter distortions d(x, xhat)
  double stored_distortion(std::size_t n) const { return stored_sum / static_cast<double>(n); }
  bool erased() const { return !index.has_value(); }
};

Signature assign_signature(const Sequence& x, const Codebook& cb);

enum class Decision { No, Maybe };
const char* to_string(Decision d);

Decision decide_triangle(const Signature& sig, const Codebook& cb, const Sequence& y, double d_threshold);

using Signer = std::function<Signature(const Sequence&)>;

struct AdmissibilityReport {
  bool pass = true;
  bool exhaustive = true;
  std::uint64_t pairs_checked = 0;
  std::uint64_t similar_pairs = 0;
  std::optional<std::pair<Sequence, Sequence>> witness;
};

inline constexpr std::uint64_t kDefaultPairBudget = std::uint64_t{1} << 22;

/// Every pair with d(x,y) <= n*D must get `maybe`. Exhaustive over all pairs
/// when they fit `pair_budget`, otherwise `samples` seeded uniform pairs.
AdmissibilityReport exhaustive_admissibility_check(const Codebook& cb, double d_threshold, std::size_t n,
                                                   const Signer& signer = {},
                                                   std::uint64_t pair_budget = kDefaultPairBudget,
                                                   std::uint64_t samples = 1'000'000, std::uint64_t seed = 1);

struct SimulationResult {
  double p_maybe_estimate = 0.0;
  double confidence_halfwidth = 0.0;  // 95% normal approximation
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  std::uint64_t maybe_count = 0;
  std::uint64_t similar_count = 0;
  std::uint64_t false_negative_count = 0;
};

inline constexpr std::uint64_t kTrialsPerStream = 4096;

SimulationResult estimate_maybe_probability(const Codebook& cb, const Pmf& px, const Pmf& py, double d_threshold,
                                            std::uint64_t trials, std::uint64_t seed, std::size_t threads = 1);

}  // namespace simid
