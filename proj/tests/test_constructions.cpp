#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "carpenter/construct.hpp"
#include "carpenter/errors.hpp"

#include <cmath>

using namespace carpenter;

namespace {

struct Pair {
  SequenceSpec lambda;
  SequenceSpec d;
};

SequenceSpec mono(std::vector<double> v) { return SequenceSpec::nondecreasing(std::move(v)); }

EntryOracle diag_oracle(const SequenceSpec& lambda) {
  std::vector<double> v;
  for (std::size_t i = 1; i <= lambda.size(); ++i) {
    v.push_back(lambda(i));
  }
  return EntryOracle::diagonal(v);
}

// lambda_n = n - 1, d_1 = 1/2, d_n = lambda_n - 2^-n: delta_k = 2^-k.
Pair geometric(int K) {
  Pair p;
  std::vector<double> lam;
  for (int n = 1; n <= K; ++n) {
    lam.push_back(n - 1);
    p.d.values.push_back(n == 1 ? 0.5 : n - 1);
    p.d.low.push_back(n == 1 ? 0.0 : -std::ldexp(1.0, -n));
  }
  p.lambda = mono(lam);
  p.lambda.exact = p.d.exact = true;
  p.d.regime = TailRegime::ConservationOfMass;
  return p;
}

// lambda_i = 2(i - 1), delta_k = 1 + 2^-k, alpha = 1.
Pair limalpha_example(int K) {
  Pair p;
  std::vector<double> lam;
  for (int n = 1; n <= K; ++n) {
    lam.push_back(2.0 * (n - 1));
    p.d.values.push_back(n == 1 ? 1.5 : 2.0 * (n - 1));
    p.d.low.push_back(n == 1 ? 0.0 : -std::ldexp(1.0, -n));
  }
  p.lambda = mono(lam);
  p.lambda.exact = p.d.exact = true;
  p.d.regime = TailRegime::EventuallyAbove;
  p.d.alpha = 1.0;
  p.d.above_from = 1;
  return p;
}

// lambda_i = 4(i - 1)^2; delta_1 = 1/2, delta_k = 3 at odd k >= 3, 2 - 1/k at even k.
double tnd_delta(int k) {
  if (k == 0) {
    return 0.0;
  }
  if (k == 1) {
    return 0.5;
  }
  return k % 2 == 1 ? 3.0 : 2.0 - 1.0 / k;
}

Pair tonondec_example(int K) {
  Pair p;
  std::vector<double> lam;
  std::vector<double> d;
  for (int n = 1; n <= K; ++n) {
    lam.push_back(4.0 * (n - 1) * (n - 1));
    d.push_back(lam.back() + tnd_delta(n) - tnd_delta(n - 1));
  }
  p.lambda = mono(lam);
  p.d = SequenceSpec::arbitrary(d);
  p.d.regime = TailRegime::DipsInfinitelyOften;
  p.d.alpha = 3.0;
  return p;
}

double max_diag_dev(const EntryOracle& oracle, const ConstructionResult& r) {
  double worst = 0;
  for (const auto& c : r.constructed) {
    worst = std::max(worst, std::abs(rayleigh(oracle, c.vec) - c.target));
  }
  return worst;
}

double gram_dev(const ConstructionResult& r) {
  std::vector<const FrameVector*> all;
  for (const auto& c : r.constructed) {
    all.push_back(&c.vec);
  }
  for (const auto& c : r.residuals) {
    all.push_back(&c.vec);
  }
  double worst = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t j = i; j < all.size(); ++j) {
      worst = std::max(worst, std::abs(dot(*all[i], *all[j]) - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

} // namespace

TEST_CASE("reduce_prefix examples") {
  auto lam = mono({0, 1, 2, 3});
  auto d = SequenceSpec::arbitrary({1, 0, 4, 1});
  d.regime = TailRegime::ZerosInfinitelyOften;
  auto p = delta_profile(lam, d, 4); // delta = (1, 0, 2, 0)
  auto r = reduce_prefix(lam, d, p);
  REQUIRE(r.blocks.blocks.size() == 2);
  CHECK(r.blocks.blocks[0] == Block{1, 2});
  CHECK(r.blocks.blocks[1] == Block{3, 4});
  CHECK_FALSE(r.suffix_start.has_value());

  auto dpos = SequenceSpec::arbitrary({1, 1, 2, 3});
  dpos.regime = TailRegime::ConservationOfMass;
  auto rpos = reduce_prefix(lam, dpos, delta_profile(lam, dpos, 4));
  CHECK(rpos.blocks.blocks.empty());
  CHECK(rpos.suffix_start == 1u);

  auto d3 = SequenceSpec::arbitrary({1, 0, 4, 4}); // delta = (1, 0, 2, 3)
  d3.regime = TailRegime::ConservationOfMass;
  auto r3 = reduce_prefix(lam, d3, delta_profile(lam, d3, 4));
  REQUIRE(r3.blocks.blocks.size() == 1);
  CHECK(r3.blocks.blocks[0] == Block{1, 2});
  CHECK(r3.suffix_start == 3u);
}

TEST_CASE("decdel_construct geometric example") {
  auto g = geometric(202);
  auto oracle = diag_oracle(g.lambda);
  auto r = decdel_construct(oracle, g.lambda, g.d, 200);
  REQUIRE(r.logs.size() == 1);
  const auto& moves = r.logs[0].moves;
  REQUIRE(moves.size() == 200);
  CHECK(moves[0].alpha == 0.5);
  REQUIRE(r.residuals.size() == 1);
  CHECK(r.residuals[0].slot == 201u);
  CHECK(r.constructed.size() == 200u);
  CHECK(max_diag_dev(oracle, r) <= 1e-10);

  auto one = decdel_construct(oracle, g.lambda, g.d, 1);
  REQUIRE(one.residuals.size() == 1);
  CHECK(std::abs(one.residuals[0].value - 0.5) <= 1e-15);

  // Defect of f_1: direct inner products against the product of complements.
  double direct = 1.0;
  for (const auto& c : r.constructed) {
    direct -= c.vec[1] * c.vec[1];
  }
  double product = 1.0;
  for (const auto& m : moves) {
    product *= m.complement;
  }
  CHECK(std::abs(direct - product) <= 1e-11);
}

TEST_CASE("lim0_construct") {
  auto g = geometric(130);
  auto oracle = diag_oracle(g.lambda);
  ConstructOptions opt;
  opt.window = 130;
  auto r = lim0_construct(oracle, g.lambda, g.d, opt);
  CHECK(r.parameters["N"] == 1);
  CHECK(r.logs.size() == 1); // interpolant blocks are singletons
  std::size_t checked = 0;
  for (const auto& c : r.constructed) {
    if (c.index <= 100) {
      CHECK(std::abs(rayleigh(oracle, c.vec) - g.d(c.index)) <= 1e-9);
      ++checked;
    }
  }
  CHECK(checked == 100u);
  CHECK(replay_transforms(r).ok);

  auto flat = mono({1, 1, 1, 1});
  auto dflat = SequenceSpec::arbitrary({1.5, 1, 1, 1});
  dflat.regime = TailRegime::ConservationOfMass;
  try {
    lim0_construct(diag_oracle(flat), flat, dflat);
    FAIL("expected an error");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("constant") != std::string::npos);
  }
}

TEST_CASE("lim0_construct with a flat prefix") {
  // lambda = (0, 0, 1, 2, ...), delta = (1/4, 1/4, 1/8, 1/16, ...): M = 3, N = 4.
  const int K = 80;
  std::vector<double> lam{0, 0};
  SequenceSpec d;
  d.values = {0.25, 0};
  d.low = {0, 0};
  for (int n = 3; n <= K; ++n) {
    lam.push_back(n - 2);
    d.values.push_back(n - 2);
    d.low.push_back(-std::ldexp(1.0, -n));
  }
  auto lambda = mono(lam);
  d.regime = TailRegime::ConservationOfMass;
  auto oracle = diag_oracle(lambda);
  auto r = lim0_construct(oracle, lambda, d);
  CHECK(r.parameters["M"] == 3);
  CHECK(r.parameters["N"] == 4);
  CHECK(max_diag_dev(oracle, r) <= 1e-9);
  CHECK(gram_dev(r) <= 1e-10);
  CHECK(replay_transforms(r).ok);
  bool has_one = false;
  for (const auto& c : r.constructed) {
    has_one = has_one || c.index == 1;
  }
  CHECK(has_one);
}

TEST_CASE("nondec_construct interval demo") {
  auto demo = neumann_model(64);
  auto r = nondec_construct(demo.oracle, demo.lambda, demo.d);
  REQUIRE(!r.chains.empty());
  const auto& c = r.chains[0];
  REQUIRE(c.indices.size() >= 4);
  CHECK(c.indices[0] == 1u);
  CHECK(c.indices[1] == 3u);
  CHECK(c.indices[2] == 6u);
  CHECK(c.indices[3] == 10u);
  CHECK(c.x[0] == 0.0);
  CHECK(c.x[1] == 3.0);
  CHECK(c.x[2] == 19.0);
  CHECK(c.alpha_tilde[0] == 0.75);
  for (const auto& v : r.constructed) {
    const double j = static_cast<double>(v.index);
    CHECK(std::abs(rayleigh(demo.oracle, v.vec) - j * j) <= 1e-9);
  }
  CHECK(gram_dev(r) <= 1e-10);
}

TEST_CASE("nondec_construct with d = lambda is trivial") {
  auto lam = mono({0, 1, 4, 9, 16, 25, 36, 49});
  auto r = nondec_construct(diag_oracle(lam), lam, lam);
  for (const auto& log : r.logs) {
    for (const auto& m : log.moves) {
      CHECK(m.alpha == 1.0);
    }
  }
  for (const auto& c : r.constructed) {
    CHECK(std::abs(c.vec[c.index]) == 1.0);
    CHECK(c.vec.support_size() == 1u);
  }
}

TEST_CASE("limalpha_construct") {
  auto g = geometric(80);
  auto oracle = diag_oracle(g.lambda);
  auto d0 = g.d;
  d0.regime = TailRegime::EventuallyAbove;
  d0.alpha = 0.0;
  auto a = limalpha_construct(oracle, g.lambda, d0);
  auto b = lim0_construct(oracle, g.lambda, g.d);
  REQUIRE(a.constructed.size() == b.constructed.size());
  for (std::size_t i = 0; i < a.constructed.size(); ++i) {
    CHECK(a.constructed[i].index == b.constructed[i].index);
    CHECK(a.constructed[i].vec[a.constructed[i].index] == b.constructed[i].vec[b.constructed[i].index]);
  }

  auto ex = limalpha_example(64);
  auto oex = diag_oracle(ex.lambda);
  auto r = limalpha_construct(oex, ex.lambda, ex.d);
  CHECK(r.parameters["N_alpha"] == 2);
  CHECK(!r.constructed.empty());
  CHECK(max_diag_dev(oex, r) <= 1e-9);
  CHECK(gram_dev(r) <= 1e-10);
  CHECK(replay_transforms(r).ok);

  auto bad = ex.d;
  bad.alpha = 1.2; // delta_k = 1 + 2^-k < 1.2 for k >= 3
  CHECK_THROWS_AS(limalpha_construct(oex, ex.lambda, bad), DomainError);
}

TEST_CASE("tonondec_construct") {
  auto ex = tonondec_example(64);
  auto oracle = diag_oracle(ex.lambda);
  auto r = tonondec_construct(oracle, ex.lambda, ex.d);
  REQUIRE(!r.transforms.empty());
  const auto minima = r.transforms[0].params["minima"].get<std::vector<std::size_t>>();
  REQUIRE(minima.size() >= 4);
  CHECK(minima[0] == 1u);
  CHECK(minima[1] == 2u);
  CHECK(minima[2] == 4u);
  CHECK(minima[3] == 6u);
  CHECK(!r.constructed.empty());
  CHECK(max_diag_dev(oracle, r) <= 1e-9);
  CHECK(gram_dev(r) <= 1e-10);
  CHECK(replay_transforms(r).ok);

  ConstructOptions big;
  big.guard = 64;
  CHECK_THROWS_AS(tonondec_construct(oracle, ex.lambda, ex.d, big), DomainError);

  // Nondecreasing delta: the transform is the identity up to the guard.
  auto lam = mono({0, 4, 16, 36, 64, 100});
  auto d = SequenceSpec::arbitrary({1, 5, 17, 37, 65, 101});
  d.alpha = 2.0;
  auto id = tonondec_construct(diag_oracle(lam), lam, d);
  for (std::size_t i = 1; i <= 5; ++i) {
    CHECK(id.transforms[0].result(i) == d(i));
  }
  CHECK(id.transforms[0].result(6) == lam(6));
}

TEST_CASE("d2d_dispatch routes") {
  auto demo = neumann_model(64);
  CHECK(d2d_dispatch(demo.oracle, demo.lambda, demo.d).route == "PointwiseDominated");

  auto g = geometric(80);
  auto og = diag_oracle(g.lambda);
  auto rg = d2d_dispatch(og, g.lambda, g.d);
  CHECK(rg.route == "ConservationOfMass");
  CHECK(replay_transforms(rg).ok);

  auto lam = mono({0, 1, 2, 3});
  auto same = d2d_dispatch(diag_oracle(lam), lam, lam);
  CHECK(same.route == "ZerosInfinitelyOften");
  CHECK(same.logs.empty());
  CHECK(same.constructed.size() == 4u);

  auto undeclared = SequenceSpec::arbitrary({1, 1, 2, 3});
  CHECK_THROWS_AS(d2d_dispatch(diag_oracle(lam), lam, undeclared), DomainError);

  auto violating = SequenceSpec::arbitrary({-1, 1, 2, 3});
  violating.regime = TailRegime::ConservationOfMass;
  CHECK_THROWS_AS(d2d_dispatch(diag_oracle(lam), lam, violating), DomainError);

  auto wrong_oracle = EntryOracle::diagonal({0, 1, 2, 4});
  CHECK_THROWS_AS(d2d_dispatch(wrong_oracle, lam, lam), DomainError);
}

TEST_CASE("replay detects a tampered transform") {
  auto ex = limalpha_example(64);
  auto r = limalpha_construct(diag_oracle(ex.lambda), ex.lambda, ex.d);
  REQUIRE(!r.transforms.empty());
  r.transforms[0].result.values[0] += 1e-3;
  CHECK_FALSE(replay_transforms(r).ok);
}
