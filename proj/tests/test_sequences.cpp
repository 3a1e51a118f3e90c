#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "carpenter/errors.hpp"
#include "carpenter/sequences.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

using namespace carpenter;

namespace {

SequenceSpec seq(std::vector<double> v) {
  auto s = SequenceSpec::arbitrary(std::move(v));
  s.exact = true;
  return s;
}

SequenceSpec mono(std::vector<double> v) {
  auto s = SequenceSpec::nondecreasing(std::move(v));
  s.exact = true;
  return s;
}

// Reference partial sums in long double.
std::vector<long double> oracle_deltas(const std::vector<double>& lam, const std::vector<double>& d) {
  std::vector<long double> out;
  long double acc = 0;
  for (std::size_t i = 0; i < lam.size(); ++i) {
    acc += static_cast<long double>(d[i]) - static_cast<long double>(lam[i]);
    out.push_back(acc);
  }
  return out;
}

// Brute-force majorization: every k-subset sum of d bounded by the top-k sum of dt.
bool brute_majorized(const std::vector<double>& dt, const std::vector<double>& d) {
  const std::size_t n = d.size();
  long double total_dt = 0;
  long double total_d = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total_dt += dt[i];
    total_d += d[i];
  }
  if (std::abs(static_cast<double>(total_dt - total_d)) > 1e-9) {
    return false;
  }
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    long double sd = 0;
    long double sdt_best = -1e300;
    const int k = __builtin_popcount(mask);
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        sd += d[i];
      }
    }
    for (unsigned m2 = 1; m2 < (1u << n); ++m2) {
      if (__builtin_popcount(m2) != k) {
        continue;
      }
      long double s = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (m2 & (1u << i)) {
          s += dt[i];
        }
      }
      sdt_best = std::max(sdt_best, s);
    }
    if (sd > sdt_best + 1e-9) {
      return false;
    }
  }
  return true;
}

} // namespace

TEST_CASE("delta_profile examples") {
  auto p = delta_profile(mono({0, 1, 4, 9}), mono({1, 4, 9, 16}), 4);
  CHECK(p.deltas == std::vector<double>{1, 4, 9, 16});

  auto same = delta_profile(mono({0, 2, 3}), mono({0, 2, 3}), 3);
  CHECK(same.deltas == std::vector<double>{0, 0, 0});
  CHECK(same.zero_indices == std::vector<std::size_t>{1, 2, 3});

  auto g = delta_profile(mono({0, 1, 2, 3}), mono({0.5, 0.75, 1.875, 2.9375}), 4);
  CHECK(g.deltas == std::vector<double>{0.5, 0.25, 0.125, 0.0625});
  CHECK(g.strict_decrease_records == std::vector<std::size_t>{1, 2, 3, 4});
}

TEST_CASE("delta_profile errors") {
  CHECK_THROWS_AS(delta_profile(mono({0, 1}), mono({1, 2}), 3), DomainError);
  CHECK_THROWS_AS(SequenceSpec::nondecreasing({2, 1}), DomainError);
  CHECK_THROWS_AS(delta_profile(seq({2, 1, 3}), seq({2, 2, 2}), 3), DomainError);
}

TEST_CASE("delta_profile round trip on random input") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> lam{u(rng)};
    std::vector<double> d{u(rng)};
    for (int i = 1; i < 40; ++i) {
      lam.push_back(lam.back() + u(rng));
      d.push_back(lam.back() + u(rng) - 1.5);
    }
    auto p = delta_profile(SequenceSpec::nondecreasing(lam), SequenceSpec::arbitrary(d), lam.size());
    const auto ref = oracle_deltas(lam, d);
    double scale = 1;
    for (double x : d) {
      scale = std::max(scale, std::abs(x));
    }
    for (std::size_t k = 1; k <= lam.size(); ++k) {
      CHECK(std::abs(p.delta(k) - static_cast<double>(ref[k - 1])) <= 1e-12 * scale * k);
      const double rebuilt = lam[k - 1] + p.delta(k) - p.delta(k - 1);
      CHECK(std::abs(rebuilt - d[k - 1]) <= 1e-12 * scale * k);
    }
  }
}

TEST_CASE("geometric partial sums stay exact with low parts") {
  // d_n = (n - 1) - 2^-n for n >= 2, d_1 = 1/2; delta_k = 2^-k.
  std::vector<double> lam;
  SequenceSpec d;
  for (int n = 1; n <= 200; ++n) {
    lam.push_back(n - 1);
    if (n == 1) {
      d.values.push_back(0.5);
      d.low.push_back(0.0);
    } else {
      d.values.push_back(n - 1);
      d.low.push_back(-std::ldexp(1.0, -n));
    }
  }
  d.exact = true;
  auto L = SequenceSpec::nondecreasing(lam);
  L.exact = true;
  auto p = delta_profile(L, d, 200);
  for (int k = 1; k <= 200; ++k) {
    CHECK(p.delta(k) == std::ldexp(1.0, -k));
  }
}

TEST_CASE("check_weak_majorization examples") {
  CHECK(check_weak_majorization(mono({0, 1, 4}), mono({1, 4, 9}), 3).ok);
  auto v = check_weak_majorization(mono({1, 2}), mono({0, 5}), 2);
  CHECK_FALSE(v.ok);
  CHECK(v.first_violation == 1u);
  CHECK(check_weak_majorization(mono({1, 2}), mono({1, 2}), 2).ok);
}

TEST_CASE("check_finite_majorization examples and brute force") {
  CHECK(check_finite_majorization(std::vector<double>{3, 1}, std::vector<double>{2, 2}).ok);
  CHECK(check_finite_majorization(std::vector<double>{5, 3, 1}, std::vector<double>{3, 3, 3}).ok);
  CHECK_FALSE(check_finite_majorization(std::vector<double>{3, 1}, std::vector<double>{4, 0}).ok);
  CHECK_THROWS_AS(check_finite_majorization(std::vector<double>{1}, std::vector<double>{1, 2}), DomainError);

  std::mt19937 rng(11);
  std::uniform_int_distribution<int> len(1, 7);
  std::uniform_int_distribution<int> val(0, 6);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = len(rng);
    std::vector<double> dt(n);
    std::vector<double> d(n);
    for (int i = 0; i < n; ++i) {
      dt[i] = val(rng);
      d[i] = val(rng);
    }
    // Force equal totals in half the trials so both outcomes are exercised.
    if (trial % 2 == 0) {
      double diff = 0;
      for (int i = 0; i < n; ++i) {
        diff += dt[i] - d[i];
      }
      d[0] += diff;
    }
    CHECK(check_finite_majorization(dt, d).ok == brute_majorized(dt, d));
  }
}

TEST_CASE("zero_partition examples") {
  auto lam = mono({0, 0, 0, 0});
  auto p = zero_partition(delta_profile(lam, seq({1, -1, 2, -2}), 4));
  REQUIRE(p.blocks.size() == 2);
  CHECK(p.blocks[0] == Block{1, 2});
  CHECK(p.blocks[1] == Block{3, 4});
  CHECK(p.covered);

  auto z = zero_partition(delta_profile(mono({0, 0, 0}), seq({0, 0, 0}), 3));
  CHECK(z.blocks.size() == 3);
  CHECK(z.covered);

  auto none = zero_partition(delta_profile(mono({0, 0, 0}), seq({1, 1, 1}), 3));
  CHECK(none.blocks.empty());
  CHECK_FALSE(none.covered);
  CHECK(none.open_from == 1u);
}

TEST_CASE("strict_decrease_records examples") {
  auto lam = mono({0, 0, 0, 0});
  auto p = delta_profile(lam, seq({0.5, -0.25, 0.05, -0.175}), 4);
  CHECK(p.strict_decrease_records == std::vector<std::size_t>{1, 2, 4});
  auto inc = delta_profile(mono({0, 0, 0}), seq({1, 1, 1}), 3);
  CHECK(inc.strict_decrease_records == std::vector<std::size_t>{1});
}

TEST_CASE("running_tail_minima examples") {
  const std::vector<double> deltas{2, 1, 3, 1, 4, 5, 6};
  std::vector<double> d;
  double prev = 0;
  for (double x : deltas) {
    d.push_back(x - prev);
    prev = x;
  }
  auto p = delta_profile(mono(std::vector<double>(7, 0.0)), seq(d), 7);
  CHECK(running_tail_minima(p, 0) == std::vector<std::size_t>{2, 4, 5, 6, 7});
  CHECK(p.running_tail_minima == std::vector<std::size_t>{2, 4, 5, 6, 7});

  auto inc = delta_profile(mono({0, 0, 0}), seq({1, 1, 1}), 3);
  CHECK(running_tail_minima(inc, 0) == std::vector<std::size_t>{1, 2, 3});

  auto dec = delta_profile(mono({0, 0, 0}), seq({3, -1, -1}), 3);
  CHECK(running_tail_minima(dec, 0) == std::vector<std::size_t>{3});
  CHECK_THROWS_AS(running_tail_minima(dec, 3), DomainError);
}

TEST_CASE("averaged_interpolant examples") {
  auto lam = mono({0, 1, 2, 3});
  auto d = mono({0.5, 0.75, 1.875, 2.9375});
  std::vector<std::size_t> m{1, 2, 3, 4};
  auto dt = averaged_interpolant(lam, d, m);
  for (std::size_t i = 1; i <= 4; ++i) {
    CHECK(dt(i) == d(i));
  }

  // delta = (0.5, 0.5, 0.125): records (1, 3), increment (0.125 - 0.5) / 2 on lambda.
  auto lam3 = mono({0, 1, 2});
  auto d3 = seq({0.5, 1.0, 1.625});
  auto prof = delta_profile(lam3, d3, 3);
  CHECK(prof.strict_decrease_records == std::vector<std::size_t>{1, 3});
  auto dt3 = averaged_interpolant(lam3, d3, prof.strict_decrease_records);
  const double inc = (0.125 - 0.5) / 2;
  CHECK(dt3(1) == 0.5);
  CHECK(dt3(2) == doctest::Approx(1 + inc).epsilon(1e-15));
  CHECK(dt3(3) == doctest::Approx(2 + inc).epsilon(1e-15));
  auto again = delta_profile(lam3, dt3, 3);
  CHECK(again.delta(3) == prof.delta(3));
  CHECK(again.delta(1) == prof.delta(1));

  CHECK_THROWS_AS(averaged_interpolant(lam3, d3, std::vector<std::size_t>{2, 3}), DomainError);
}

TEST_CASE("flat_prefix_transform examples") {
  CHECK_THROWS_AS(flat_prefix_transform(mono({0, 1, 2}), mono({1, 2, 3}), 2), DomainError);
  CHECK_THROWS_AS(flat_prefix_transform(mono({0, 1, 2}), mono({0.5, 1.25, 3}), 2), DomainError);
  auto d = mono({1, 1.1, 2.2, 3.3});
  auto out = flat_prefix_transform(mono({0, 1, 2, 3}), d, 1);
  for (std::size_t i = 1; i <= 4; ++i) {
    CHECK(out(i) == d(i));
  }
  // delta = (1, 0, 1), N = 2 -> dt = (0 + 0, 2, d_3).
  auto out2 = flat_prefix_transform(mono({0, 2, 2}), mono({1, 1, 3}), 2);
  CHECK(out2.values == std::vector<double>{0, 2, 3});
  // A non-monotone d whose block is not majorized is rejected.
  CHECK_THROWS_AS(flat_prefix_transform(mono({0, 1, 2}), seq({2, 0, 2.5}), 2), DomainError);
}

TEST_CASE("tonondec_transform examples") {
  auto lam = mono({0, 1, 2});
  auto d = mono({1, 2, 3});
  auto out = tonondec_transform(lam, d, std::vector<std::size_t>{1, 2, 3});
  for (std::size_t i = 1; i <= 3; ++i) {
    CHECK(out(i) == d(i));
  }
  auto lam2 = mono({0, 0, 0, 4});
  auto d2 = seq({2, 0, 1, 5});
  auto p2 = delta_profile(lam2, d2, 4);
  CHECK(p2.running_tail_minima == std::vector<std::size_t>{1, 2, 3, 4});
  auto out2 = tonondec_transform(lam2, d2, p2.running_tail_minima);
  CHECK(out2.values == std::vector<double>{2, 0, 1, 5});

  auto out3 = tonondec_transform(mono({0, 0, 1}), seq({1, 0, 1}), std::vector<std::size_t>{1, 2, 3});
  CHECK(out3.values == std::vector<double>{1, 0, 1});

  // delta = (1, 0, 1): minima (2, 3); block {1, 2} collapses onto index 2.
  auto lam4 = mono({0, 2, 2});
  auto d4 = mono({1, 1, 3});
  auto p4 = delta_profile(lam4, d4, 3);
  CHECK(p4.running_tail_minima == std::vector<std::size_t>{2, 3});
  auto out4 = tonondec_transform(lam4, d4, p4.running_tail_minima);
  CHECK(out4.values == std::vector<double>{0, 2, 3});
  CHECK_THROWS_AS(tonondec_transform(lam4, d4, std::vector<std::size_t>{1, 3}), DomainError);
}

TEST_CASE("limalpha_shift examples") {
  auto lam = mono({0, 1, 2, 3});
  auto d = mono({1, 1.5, 2.5, 3.5});
  auto same = limalpha_shift(lam, d, 0.0, 2);
  CHECK(same.values == d.values);

  auto out = limalpha_shift(lam, d, 1.0, 2);
  CHECK(out.values == std::vector<double>{0.5, 1, 2.5, 3.5});
  auto p = delta_profile(lam, out, 4);
  CHECK(p.deltas == std::vector<double>{0.5, 0.5, 1, 1.5});

  auto dp = delta_profile(lam, d, 4);
  CHECK(limalpha_cutoff(dp, 1.0, 1) == 2u);

  // delta_k = k has liminf infinity: not a finite alpha.
  auto d_inf = mono({1, 2, 3, 4});
  CHECK_THROWS_AS(limalpha_shift(lam, d_inf, INFINITY, 2), DomainError);
  CHECK_THROWS_AS(limalpha_shift(lam, d, 5.0, 2), DomainError);
}

TEST_CASE("decdel_tail_data geometric example") {
  const int K = 60;
  std::vector<double> lam;
  SequenceSpec d;
  for (int n = 1; n <= K; ++n) {
    lam.push_back(n - 1);
    d.values.push_back(n == 1 ? 0.5 : n - 1);
    d.low.push_back(n == 1 ? 0.0 : -std::ldexp(1.0, -n));
  }
  d.regime = TailRegime::ConservationOfMass;
  d.exact = true;
  auto L = SequenceSpec::nondecreasing(lam);
  auto data = decdel_tail_data(L, d);
  CHECK(data.t[0] == 0.0);
  CHECK(data.alpha_tilde[0] == 0.5);
  CHECK(data.alpha_tilde[1] == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  for (int n = 2; n < K; ++n) {
    CHECK(data.t[n - 1] == std::ldexp(1.0, 1 - n));
    const double expected = (1 + std::ldexp(1.0, -n)) / (1 + std::ldexp(1.0, 1 - n));
    CHECK(std::abs(data.alpha_tilde[n - 1] - expected) <= 1e-15);
    // lambda~_n < d_n < lambda_{n+1}; the gap 2^-n is resolvable only for small n.
    if (n <= 40) {
      CHECK(data.lambda_tilde[n - 1] < d(n));
      CHECK(d(n) < lam[n]);
    }
  }

  auto wrong = d;
  wrong.regime = TailRegime::ExplicitOnly;
  CHECK_THROWS_AS(decdel_tail_data(L, wrong), DomainError);
}

TEST_CASE("decdel_tail_data against long-window tail summation") {
  // delta_k = r^(k-1) / 2, r = 0.8: tail sums of lambda - d from a window ten times longer.
  const int K = 40;
  const int long_k = 400;
  const double r = 0.8;
  std::vector<double> lam;
  std::vector<double> dv;
  double prev = 0;
  for (int n = 1; n <= long_k; ++n) {
    lam.push_back(n == 1 ? 0.0 : 1.0);
    const double delta = 0.5 * std::pow(r, n - 1);
    dv.push_back(lam.back() + delta - prev);
    prev = delta;
  }
  auto L = SequenceSpec::nondecreasing(std::vector<double>(lam.begin(), lam.begin() + K));
  auto d = SequenceSpec::arbitrary(std::vector<double>(dv.begin(), dv.begin() + K));
  d.regime = TailRegime::ConservationOfMass;
  auto data = decdel_tail_data(L, d);
  for (int n = 2; n <= K; ++n) {
    long double tail = 0;
    for (int i = long_k; i >= n; --i) {
      tail += static_cast<long double>(lam[i - 1]) - dv[i - 1];
    }
    // The truncated tail misses -delta_{long_k}, below 1e-38.
    CHECK(std::abs(data.t[n - 1] - static_cast<double>(tail)) <= 1e-12);
  }
}

TEST_CASE("hlp_transform_check examples") {
  CHECK(hlp_transform_check(std::vector<double>{1, 4}, std::vector<double>{2, 3}, ConcaveTransform::NegInverse).ok);
  CHECK(hlp_transform_check(std::vector<double>{1, 2}, std::vector<double>{1, 2}, ConcaveTransform::NegInverse).ok);
  CHECK(hlp_transform_check(std::vector<double>{1, 4}, std::vector<double>{2, 3}, ConcaveTransform::ExpDecay, 1.0).ok);
  CHECK_THROWS_AS(hlp_transform_check(std::vector<double>{0, 4}, std::vector<double>{2, 3}, ConcaveTransform::NegInverse),
                  DomainError);
}

TEST_CASE("divergence_diagnostic examples") {
  std::vector<double> t;
  for (int n = 1; n <= 30; ++n) {
    t.push_back(std::ldexp(1.0, 1 - n));
  }
  auto g = divergence_diagnostic(t);
  for (std::size_t k = 1; k <= g.partial_sums.size(); ++k) {
    CHECK(g.partial_sums[k - 1] == static_cast<double>(k));
    CHECK(g.log_bounds[k - 1] <= g.partial_sums[k - 1] + 1e-12);
  }
  auto c = divergence_diagnostic(std::vector<double>{2, 2, 2});
  CHECK(c.partial_sums == std::vector<double>{0, 0});
  CHECK_THROWS_AS(divergence_diagnostic(std::vector<double>{1, 0}), DomainError);
}

TEST_CASE("regime names round trip") {
  for (auto r : {TailRegime::ExplicitOnly, TailRegime::ConservationOfMass, TailRegime::EventuallyAbove,
                 TailRegime::DipsInfinitelyOften, TailRegime::PointwiseDominated, TailRegime::ZerosInfinitelyOften}) {
    CHECK(parse_regime(regime_name(r)) == r);
  }
  CHECK_THROWS_AS(parse_regime("bogus"), FormatError);
}
