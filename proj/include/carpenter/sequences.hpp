#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace carpenter {

/// Declared behaviour of a sequence pair beyond the explicit prefix. Tail facts
/// (liminf, tail minima) cannot be computed from a finite prefix, so they are
/// inputs and only checked for consistency on the window.
enum class TailRegime {
  ExplicitOnly,
  ConservationOfMass,   // liminf delta_k = 0
  EventuallyAbove,      // delta_k >= alpha for all k >= M
  DipsInfinitelyOften,  // delta_k < alpha infinitely often
  PointwiseDominated,   // d_i >= lambda_i for every i
  ZerosInfinitelyOften, // delta_k = 0 infinitely often
};

std::string_view regime_name(TailRegime regime);
TailRegime parse_regime(std::string_view name);

/// A real sequence known through an explicit prefix.
///
/// Each entry is stored as an unevaluated sum `values[i] + low[i]` so that
/// sequences such as d_n = (n - 1) - 2^-n keep their partial sums exact far
/// beyond double resolution. `low` may be empty, meaning all zeros.
struct SequenceSpec {
  std::vector<double> values;
  std::vector<double> low;
  TailRegime regime = TailRegime::ExplicitOnly;
  double alpha = 0.0;
  std::optional<std::size_t> above_from; // M for EventuallyAbove; 1-based
  bool exact = false;                    // values are declared rational (dyadic) exactly
  std::string name;

  /// Builds a sequence and rejects prefixes that decrease or are empty.
  static SequenceSpec nondecreasing(std::vector<double> values, std::string name = {});
  /// Builds a sequence without an ordering requirement (targets of transforms).
  static SequenceSpec arbitrary(std::vector<double> values, std::string name = {});

  std::size_t size() const noexcept { return values.size(); }
  double hi(std::size_t i) const { return values.at(i - 1); }
  double lo(std::size_t i) const { return low.empty() ? 0.0 : low.at(i - 1); }
  /// 1-based entry, rounded to double.
  double operator()(std::size_t i) const { return hi(i) + lo(i); }

  bool is_nondecreasing() const;
  /// First n entries, regime metadata kept.
  SequenceSpec head(std::size_t n) const;
  /// Entries at the given 1-based positions, in order.
  SequenceSpec select(std::span<const std::size_t> positions) const;
};

/// Exact difference a_i - b_i of two sequence entries, rounded once.
double entry_difference(const SequenceSpec& a, std::size_t i, const SequenceSpec& b, std::size_t j);

struct DeltaProfile {
  std::vector<double> deltas; // deltas[k - 1] = delta_k
  std::vector<std::size_t> zero_indices;
  std::vector<std::size_t> running_tail_minima; // guard 0
  std::vector<std::size_t> strict_decrease_records;
  std::optional<double> declared_alpha;
  double zero_tolerance = 0.0;

  std::size_t size() const noexcept { return deltas.size(); }
  /// delta_k with the convention delta_0 = 0.
  double delta(std::size_t k) const { return k == 0 ? 0.0 : deltas.at(k - 1); }
  bool is_zero(std::size_t k) const;
};

/// Partial sums delta_k = sum_{i <= k} (d_i - lambda_i) for k = 1..K.
DeltaProfile delta_profile(const SequenceSpec& lambda, const SequenceSpec& d, std::size_t K);

/// The same partial sums without a window or validation requirement on lambda.
std::vector<double> partial_deltas(const SequenceSpec& lambda, const SequenceSpec& d, std::size_t K);

struct MajorizationVerdict {
  bool ok = true;
  std::optional<std::size_t> first_violation; // 1-based prefix length
  std::string reason;

  explicit operator bool() const noexcept { return ok; }
};

/// delta_k >= -tol for all k <= K. Default tolerance: 0 for exact inputs,
/// 1e-12 * max(1, |delta_k|) otherwise.
MajorizationVerdict check_weak_majorization(const SequenceSpec& lambda, const SequenceSpec& d,
                                            std::size_t K, std::optional<double> tol = {});

/// {d} is majorized by {dtilde}: decreasing rearrangements have dominated
/// prefix sums and equal totals, within 1e-12 * max(1, scale).
MajorizationVerdict check_finite_majorization(std::span<const double> dtilde,
                                              std::span<const double> d);

/// Inclusive, 1-based index interval.
struct Block {
  std::size_t first = 1;
  std::size_t last = 0;

  std::size_t size() const noexcept { return last + 1 - first; }
  bool contains(std::size_t i) const noexcept { return i >= first && i <= last; }
  bool operator==(const Block&) const = default;
};

struct BlockPartition {
  std::vector<Block> blocks;
  bool covered = false;     // blocks partition the whole window
  std::size_t open_from = 1; // first index not inside any block
};

BlockPartition zero_partition(const DeltaProfile& profile);

std::vector<std::size_t> strict_decrease_records(const DeltaProfile& profile);

/// Indices n <= K - guard with delta_n <= delta_k for every later k in the window.
std::vector<std::size_t> running_tail_minima(const DeltaProfile& profile, std::size_t guard);

/// Piecewise-linear interpolant of delta between consecutive strict-decrease
/// records. The result has length records.back().
SequenceSpec averaged_interpolant(const SequenceSpec& lambda, const SequenceSpec& d,
                                  std::span<const std::size_t> records);

SequenceSpec flat_prefix_transform(const SequenceSpec& lambda, const SequenceSpec& d, std::size_t N);

/// Moves each block's mass onto its tail minimum so that the new delta is
/// nondecreasing. Indices after the last minimum get lambda_i.
SequenceSpec tonondec_transform(const SequenceSpec& lambda, const SequenceSpec& d,
                                std::span<const std::size_t> tail_minima);

/// Smallest N > max(M, max_{k < M} k * alpha / delta_k).
std::size_t limalpha_cutoff(const DeltaProfile& profile, double alpha, std::size_t M);

/// d_i - alpha / N for i <= N, d_i afterwards. Rejects infinite or negative alpha
/// and any shift that makes a window partial sum negative.
SequenceSpec limalpha_shift(const SequenceSpec& lambda, const SequenceSpec& d, double alpha, std::size_t N);

struct DecdelTailData {
  std::vector<double> lambda_tilde; // lambda_n - delta_{n-1}, n = 1..K
  std::vector<double> t;            // t_n = delta_{n-1}
  std::vector<double> alpha_tilde;  // n = 1..K-1
  std::size_t resolution_limited = 0; // alpha_tilde that rounds to exactly 1
};

/// Tail data of a sequence pair whose delta decreases strictly to zero. Uses
/// t_n = delta_{n-1}, which is exact when delta_k -> 0.
DecdelTailData decdel_tail_data(const SequenceSpec& lambda, const SequenceSpec& d);

enum class ConcaveTransform { NegInverse, ExpDecay };

/// Checks that applying Phi preserves weak majorization a < b prefix by prefix.
/// NegInverse: {-1/a} < {-1/b}, i.e. {1/b} < {1/a}. ExpDecay(t): {e^{-b t}} < {e^{-a t}}.
MajorizationVerdict hlp_transform_check(std::span<const double> a, std::span<const double> b,
                                        ConcaveTransform phi, double t = 1.0);

struct DivergenceDiagnostic {
  std::vector<double> partial_sums; // sum_{n <= k} (t_n - t_{n+1}) / t_{n+1}
  std::vector<double> log_bounds;   // log(t_1) - log(t_{k+1})
};

DivergenceDiagnostic divergence_diagnostic(std::span<const double> t);

} // namespace carpenter
