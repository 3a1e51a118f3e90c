#include "carpenter/sequences.hpp"

#include "carpenter/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

namespace carpenter {

namespace {

struct TwoSum {
  double sum;
  double err;
};

TwoSum two_sum(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  return {s, (a - (s - bb)) + (b - bb)};
}

// Neumaier compensated accumulator.
class Accumulator {
public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

std::string index_message(const std::string& prefix, std::size_t k) {
  std::ostringstream os;
  os << prefix << " at index " << k;
  return os.str();
}

double zero_tolerance_for(const SequenceSpec& lambda, const SequenceSpec& d,
                          const std::vector<double>& deltas) {
  if (lambda.exact && d.exact) {
    return 0.0;
  }
  const double first = deltas.empty() ? 0.0 : std::abs(deltas.front());
  return 1e-12 * std::max(1.0, first);
}

void require_window(const SequenceSpec& s, std::size_t K, const char* which) {
  if (s.size() < K) {
    std::ostringstream os;
    os << "prefix of " << which << " too short: have " << s.size() << ", need " << K;
    throw DomainError(os.str());
  }
}

// Entry built as base_i + increment, keeping the rounding error in the low part.
void set_shifted(SequenceSpec& out, std::size_t i, const SequenceSpec& base, std::size_t j,
                 double increment) {
  const auto [s, e] = two_sum(base.hi(j), increment);
  out.values.at(i - 1) = s;
  out.low.at(i - 1) = e + base.lo(j);
}

void copy_entry(SequenceSpec& out, std::size_t i, const SequenceSpec& src, std::size_t j) {
  out.values.at(i - 1) = src.hi(j);
  out.low.at(i - 1) = src.lo(j);
}

SequenceSpec blank_like(std::size_t n, const SequenceSpec& a, const SequenceSpec& b) {
  SequenceSpec out;
  out.values.assign(n, 0.0);
  out.low.assign(n, 0.0);
  out.exact = a.exact && b.exact;
  return out;
}

std::vector<double> as_doubles(const SequenceSpec& s, std::size_t first, std::size_t last) {
  std::vector<double> out;
  for (std::size_t i = first; i <= last; ++i) {
    out.push_back(s(i));
  }
  return out;
}

void assert_block_majorization(const SequenceSpec& dtilde, const SequenceSpec& d, const Block& b,
                               const char* stage) {
  const auto top = as_doubles(dtilde, b.first, b.last);
  const auto bottom = as_doubles(d, b.first, b.last);
  if (!check_finite_majorization(top, bottom)) {
    std::ostringstream os;
    os << stage << ": block [" << b.first << ", " << b.last << "] is not majorized";
    throw DomainError(os.str());
  }
}

} // namespace

std::string_view regime_name(TailRegime regime) {
  switch (regime) {
  case TailRegime::ExplicitOnly:
    return "explicit";
  case TailRegime::ConservationOfMass:
    return "conservation";
  case TailRegime::EventuallyAbove:
    return "eventually_above";
  case TailRegime::DipsInfinitelyOften:
    return "dips";
  case TailRegime::PointwiseDominated:
    return "pointwise";
  case TailRegime::ZerosInfinitelyOften:
    return "zeros";
  }
  return "explicit";
}

TailRegime parse_regime(std::string_view name) {
  for (auto r : {TailRegime::ExplicitOnly, TailRegime::ConservationOfMass, TailRegime::EventuallyAbove,
                 TailRegime::DipsInfinitelyOften, TailRegime::PointwiseDominated,
                 TailRegime::ZerosInfinitelyOften}) {
    if (regime_name(r) == name) {
      return r;
    }
  }
  throw FormatError("unknown regime '" + std::string(name) + "'");
}

SequenceSpec SequenceSpec::nondecreasing(std::vector<double> values, std::string name) {
  SequenceSpec s = arbitrary(std::move(values), std::move(name));
  if (!s.is_nondecreasing()) {
    throw DomainError("sequence '" + s.name + "' is not nondecreasing");
  }
  return s;
}

SequenceSpec SequenceSpec::arbitrary(std::vector<double> values, std::string name) {
  if (values.empty()) {
    throw DomainError("sequence '" + name + "' has an empty prefix");
  }
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw DomainError("sequence '" + name + "' has a non-finite entry");
    }
  }
  SequenceSpec s;
  s.values = std::move(values);
  s.name = std::move(name);
  return s;
}

bool SequenceSpec::is_nondecreasing() const {
  for (std::size_t i = 2; i <= size(); ++i) {
    if (entry_difference(*this, i, *this, i - 1) < 0.0) {
      return false;
    }
  }
  return true;
}

SequenceSpec SequenceSpec::head(std::size_t n) const {
  SequenceSpec out = *this;
  n = std::min(n, size());
  out.values.resize(n);
  if (!out.low.empty()) {
    out.low.resize(n);
  }
  return out;
}

SequenceSpec SequenceSpec::select(std::span<const std::size_t> positions) const {
  SequenceSpec out = *this;
  out.values.clear();
  out.low.clear();
  for (std::size_t p : positions) {
    out.values.push_back(hi(p));
    out.low.push_back(lo(p));
  }
  out.above_from.reset();
  return out;
}

double entry_difference(const SequenceSpec& a, std::size_t i, const SequenceSpec& b, std::size_t j) {
  return (a.hi(i) - b.hi(j)) + (a.lo(i) - b.lo(j));
}

bool DeltaProfile::is_zero(std::size_t k) const {
  return std::abs(delta(k)) <= zero_tolerance;
}

std::vector<double> partial_deltas(const SequenceSpec& lambda, const SequenceSpec& d, std::size_t K) {
  require_window(lambda, K, "lambda");
  require_window(d, K, "d");
  std::vector<double> out;
  out.reserve(K);
  Accumulator acc;
  for (std::size_t i = 1; i <= K; ++i) {
    acc.add(entry_difference(d, i, lambda, i));
    out.push_back(acc.value());
  }
  return out;
}

DeltaProfile delta_profile(const SequenceSpec& lambda, const SequenceSpec& d, std::size_t K) {
  if (K == 0) {
    throw DomainError("delta profile needs a window of at least 1");
  }
  require_window(lambda, K, "lambda");
  require_window(d, K, "d");
  if (!lambda.head(K).is_nondecreasing()) {
    throw DomainError("lambda prefix is not nondecreasing");
  }

  DeltaProfile p;
  p.deltas = partial_deltas(lambda, d, K);
  p.zero_tolerance = zero_tolerance_for(lambda, d, p.deltas);
  for (std::size_t k = 1; k <= K; ++k) {
    if (p.is_zero(k)) {
      p.zero_indices.push_back(k);
    }
  }
  p.strict_decrease_records = strict_decrease_records(p);
  p.running_tail_minima = running_tail_minima(p, 0);
  if (d.regime == TailRegime::EventuallyAbove || d.regime == TailRegime::DipsInfinitelyOften) {
    p.declared_alpha = d.alpha;
  }
  return p;
}

MajorizationVerdict check_weak_majorization(const SequenceSpec& lambda, const SequenceSpec& d,
                                            std::size_t K, std::optional<double> tol) {
  const auto deltas = partial_deltas(lambda, d, K);
  const bool exact = lambda.exact && d.exact;
  for (std::size_t k = 1; k <= K; ++k) {
    const double dk = deltas[k - 1];
    const double t = tol ? *tol : (exact ? 0.0 : 1e-12 * std::max(1.0, std::abs(dk)));
    if (dk < -t) {
      MajorizationVerdict v;
      v.ok = false;
      v.first_violation = k;
      v.reason = index_message("partial sum of d falls below partial sum of lambda", k);
      return v;
    }
  }
  return {};
}

MajorizationVerdict check_finite_majorization(std::span<const double> dtilde, std::span<const double> d) {
  if (dtilde.size() != d.size()) {
    throw DomainError("finite majorization needs sequences of equal length");
  }
  std::vector<double> top(dtilde.begin(), dtilde.end());
  std::vector<double> bottom(d.begin(), d.end());
  std::sort(top.begin(), top.end(), std::greater<>());
  std::sort(bottom.begin(), bottom.end(), std::greater<>());

  double scale = 1.0;
  for (double x : top) {
    scale += std::abs(x);
  }
  const double tol = 1e-12 * scale;

  Accumulator st;
  Accumulator sb;
  for (std::size_t n = 0; n < top.size(); ++n) {
    st.add(top[n]);
    sb.add(bottom[n]);
    if (sb.value() > st.value() + tol) {
      MajorizationVerdict v;
      v.ok = false;
      v.first_violation = n + 1;
      v.reason = index_message("prefix sum of target exceeds prefix sum of source", n + 1);
      return v;
    }
  }
  if (std::abs(st.value() - sb.value()) > tol) {
    MajorizationVerdict v;
    v.ok = false;
    v.first_violation = top.size();
    v.reason = "totals differ";
    return v;
  }
  return {};
}

BlockPartition zero_partition(const DeltaProfile& profile) {
  for (double dk : profile.deltas) {
    if (dk < -profile.zero_tolerance) {
      throw DomainError("zero partition needs nonnegative partial sums");
    }
  }
  BlockPartition out;
  std::size_t previous = 0;
  for (std::size_t k : profile.zero_indices) {
    out.blocks.push_back({previous + 1, k});
    previous = k;
  }
  out.open_from = previous + 1;
  out.covered = previous == profile.size();
  return out;
}

std::vector<std::size_t> strict_decrease_records(const DeltaProfile& profile) {
  std::vector<std::size_t> m;
  if (profile.size() == 0) {
    return m;
  }
  m.push_back(1);
  for (std::size_t n = 2; n <= profile.size(); ++n) {
    if (profile.delta(n) < profile.delta(m.back())) {
      m.push_back(n);
    }
  }
  return m;
}

std::vector<std::size_t> running_tail_minima(const DeltaProfile& profile, std::size_t guard) {
  const std::size_t K = profile.size();
  if (guard >= K) {
    throw DomainError("tail-minimum guard must be smaller than the window");
  }
  // suffix[n] = min delta_k over n < k <= K
  std::vector<double> suffix(K + 1, std::numeric_limits<double>::infinity());
  for (std::size_t n = K; n-- > 1;) {
    suffix[n] = std::min(suffix[n + 1], profile.delta(n + 1));
  }
  std::vector<std::size_t> m;
  for (std::size_t n = 1; n + guard <= K; ++n) {
    if (profile.delta(n) <= suffix[n]) {
      m.push_back(n);
    }
  }
  return m;
}

SequenceSpec averaged_interpolant(const SequenceSpec& lambda, const SequenceSpec& d,
                                  std::span<const std::size_t> records) {
  if (records.empty() || records.front() != 1) {
    throw DomainError("records too sparse for window: the first record must be index 1");
  }
  for (std::size_t j = 1; j < records.size(); ++j) {
    if (records[j] <= records[j - 1]) {
      throw DomainError("records must be strictly increasing");
    }
  }
  const std::size_t L = records.back();
  const auto deltas = partial_deltas(lambda, d, L);
  auto delta = [&](std::size_t k) { return deltas[k - 1]; };

  SequenceSpec out = blank_like(L, lambda, d);
  out.name = d.name + "~interp";
  out.regime = TailRegime::ConservationOfMass;
  copy_entry(out, 1, d, 1);

  for (std::size_t j = 0; j + 1 < records.size(); ++j) {
    const std::size_t a = records[j];
    const std::size_t b = records[j + 1];
    const double slope = (delta(b) - delta(a)) / static_cast<double>(b - a);
    double previous = delta(a);
    for (std::size_t k = a + 1; k <= b; ++k) {
      const double target = k == b ? delta(b) : delta(a) + slope * static_cast<double>(k - a);
      set_shifted(out, k, lambda, k, target - previous);
      previous = target;
    }
    assert_block_majorization(out, d, {a + 1, b}, "averaged interpolant");
  }
  return out;
}

SequenceSpec flat_prefix_transform(const SequenceSpec& lambda, const SequenceSpec& d, std::size_t N) {
  const std::size_t K = std::min(lambda.size(), d.size());
  if (N == 0 || N > K) {
    throw DomainError("flat prefix length outside the window");
  }
  const auto deltas = partial_deltas(lambda, d, K);
  for (std::size_t k = 1; k < N; ++k) {
    if (deltas[N - 1] > deltas[k - 1]) {
      throw DomainError(index_message("flat prefix precondition delta_N <= delta_k fails", k));
    }
  }
  SequenceSpec out = blank_like(K, lambda, d);
  out.name = d.name + "~flat";
  out.regime = d.regime;
  set_shifted(out, 1, lambda, 1, deltas[N - 1]);
  for (std::size_t i = 2; i <= N; ++i) {
    copy_entry(out, i, lambda, i);
  }
  for (std::size_t i = N + 1; i <= K; ++i) {
    copy_entry(out, i, d, i);
  }
  assert_block_majorization(out, d, {1, N}, "flat prefix");
  return out;
}

SequenceSpec tonondec_transform(const SequenceSpec& lambda, const SequenceSpec& d,
                                std::span<const std::size_t> tail_minima) {
  const std::size_t K = std::min(lambda.size(), d.size());
  if (tail_minima.empty()) {
    throw DomainError("uncertified minima: no tail minimum on the window");
  }
  const auto deltas = partial_deltas(lambda, d, K);
  auto delta = [&](std::size_t k) { return k == 0 ? 0.0 : deltas[k - 1]; };

  std::size_t previous = 0;
  for (std::size_t m : tail_minima) {
    if (m <= previous || m > K) {
      throw DomainError("uncertified minima: indices must increase inside the window");
    }
    if (delta(m) < delta(previous)) {
      throw DomainError(index_message("uncertified minima: partial sum drops below previous minimum", m));
    }
    for (std::size_t k = previous + 1; k <= K; ++k) {
      if (delta(k) < delta(m)) {
        throw DomainError(index_message("uncertified minima: later partial sum is smaller than record", m));
      }
    }
    previous = m;
  }

  SequenceSpec out = blank_like(K, lambda, d);
  out.name = d.name + "~tonondec";
  out.regime = TailRegime::PointwiseDominated;
  for (std::size_t i = 1; i <= K; ++i) {
    copy_entry(out, i, lambda, i);
  }
  previous = 0;
  for (std::size_t m : tail_minima) {
    set_shifted(out, m, lambda, m, delta(m) - delta(previous));
    previous = m;
  }

  const auto new_deltas = partial_deltas(lambda, out, K);
  for (std::size_t k = 2; k <= K; ++k) {
    if (new_deltas[k - 1] < new_deltas[k - 2]) {
      throw DomainError("tonondec transform produced a decreasing partial sum");
    }
  }
  previous = 0;
  for (std::size_t m : tail_minima) {
    assert_block_majorization(out, d, {previous + 1, m}, "tonondec transform");
    previous = m;
  }
  return out;
}

std::size_t limalpha_cutoff(const DeltaProfile& profile, double alpha, std::size_t M) {
  double bound = static_cast<double>(M);
  for (std::size_t k = 1; k < M; ++k) {
    if (profile.delta(k) <= 0.0) {
      throw DomainError(index_message("limalpha cutoff needs positive partial sums", k));
    }
    bound = std::max(bound, static_cast<double>(k) * alpha / profile.delta(k));
  }
  return static_cast<std::size_t>(std::floor(bound)) + 1;
}

SequenceSpec limalpha_shift(const SequenceSpec& lambda, const SequenceSpec& d, double alpha, std::size_t N) {
  if (!std::isfinite(alpha) || alpha < 0.0) {
    throw DomainError("regime validation: liminf alpha must be finite and nonnegative");
  }
  const std::size_t K = std::min(lambda.size(), d.size());
  if (N == 0 || N > K) {
    throw DomainError("no valid N in window for the alpha shift");
  }
  SequenceSpec out = blank_like(K, lambda, d);
  out.name = d.name + "~shift";
  out.regime = TailRegime::ConservationOfMass;
  const double step = alpha / static_cast<double>(N);
  for (std::size_t i = 1; i <= K; ++i) {
    if (i <= N && alpha != 0.0) {
      set_shifted(out, i, d, i, -step);
    } else {
      copy_entry(out, i, d, i);
    }
  }
  const auto deltas = partial_deltas(lambda, out, K);
  for (std::size_t k = 1; k <= K; ++k) {
    const double tol = (lambda.exact && d.exact) ? 0.0 : 1e-12 * std::max(1.0, alpha);
    if (deltas[k - 1] < -tol) {
      throw DomainError(index_message("alpha shift makes the partial sum negative", k));
    }
  }
  return out;
}

DecdelTailData decdel_tail_data(const SequenceSpec& lambda, const SequenceSpec& d) {
  if (d.regime != TailRegime::ConservationOfMass) {
    throw DomainError("decdel tail data requires the conservation-of-mass regime");
  }
  const std::size_t K = std::min(lambda.size(), d.size());
  if (K < 2) {
    throw DomainError("decdel tail data needs a window of at least 2");
  }
  if (!lambda.head(K).is_nondecreasing()) {
    throw DomainError("lambda prefix is not nondecreasing");
  }
  const auto deltas = partial_deltas(lambda, d, K);
  for (std::size_t k = 1; k <= K; ++k) {
    if (deltas[k - 1] <= 0.0) {
      throw DomainError(index_message("decdel needs positive partial sums", k));
    }
    if (k > 1 && !(deltas[k - 1] < deltas[k - 2])) {
      throw DomainError(index_message("delta is not strictly decreasing", k));
    }
    if (k > 1 && entry_difference(d, k, lambda, 1) < 0.0) {
      throw DomainError(index_message("decdel hypothesis lambda_1 <= d_n fails", k));
    }
  }
  if (!(entry_difference(d, 1, lambda, 2) < 0.0)) {
    throw DomainError("decdel hypothesis d_1 < lambda_2 fails");
  }

  DecdelTailData out;
  for (std::size_t n = 1; n <= K; ++n) {
    const double t = n == 1 ? 0.0 : deltas[n - 2];
    out.t.push_back(t);
    out.lambda_tilde.push_back((lambda.hi(n) - t) + lambda.lo(n));
  }
  for (std::size_t n = 1; n < K; ++n) {
    // lambda_{n+1} - lambda~_n = (lambda_{n+1} - d_n) + delta_n
    const double gap = entry_difference(lambda, n + 1, d, n);
    const double a = gap / (gap + deltas[n - 1]);
    if (!(gap > 0.0) || !(a > 0.0) || a > 1.0) {
      throw DomainError(index_message("decdel alpha~ outside (0, 1)", n));
    }
    if (a == 1.0) {
      ++out.resolution_limited;
    }
    out.alpha_tilde.push_back(a);
  }
  return out;
}

MajorizationVerdict hlp_transform_check(std::span<const double> a, std::span<const double> b,
                                        ConcaveTransform phi, double t) {
  if (a.size() != b.size()) {
    throw DomainError("HLP check needs sequences of equal length");
  }
  if (phi == ConcaveTransform::NegInverse) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!(a[i] > 0.0) || !(b[i] > 0.0)) {
        throw DomainError(index_message("negative-inverse transform needs positive entries", i + 1));
      }
    }
  }
  Accumulator sa;
  Accumulator sb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa.add(a[i]);
    sb.add(b[i]);
    if (sa.value() > sb.value() + 1e-12 * std::max(1.0, std::abs(sb.value()))) {
      throw DomainError(index_message("HLP precondition a < b fails", i + 1));
    }
  }

  auto lower = [&](double x) { return phi == ConcaveTransform::NegInverse ? 1.0 / x : std::exp(-x * t); };
  // Phi(a) < Phi(b) in both cases reads: sum of lower(b) <= sum of lower(a).
  Accumulator small;
  Accumulator large;
  for (std::size_t i = 0; i < a.size(); ++i) {
    small.add(lower(b[i]));
    large.add(lower(a[i]));
    if (small.value() > large.value() + 1e-12 * std::max(1.0, std::abs(large.value()))) {
      MajorizationVerdict v;
      v.ok = false;
      v.first_violation = i + 1;
      v.reason = index_message("transformed prefix sums violate majorization", i + 1);
      return v;
    }
  }
  return {};
}

DivergenceDiagnostic divergence_diagnostic(std::span<const double> t) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] > 0.0)) {
      throw DomainError(index_message("divergence diagnostic needs positive entries", i + 1));
    }
    if (i > 0 && t[i] > t[i - 1]) {
      throw DomainError(index_message("divergence diagnostic needs a nonincreasing sequence", i + 1));
    }
  }
  DivergenceDiagnostic out;
  Accumulator acc;
  for (std::size_t n = 0; n + 1 < t.size(); ++n) {
    acc.add((t[n] - t[n + 1]) / t[n + 1]);
    out.partial_sums.push_back(acc.value());
    out.log_bounds.push_back(std::log(t[0]) - std::log(t[n + 1]));
  }
  return out;
}

} // namespace carpenter
