#include "carpenter/verify.hpp"

#include "carpenter/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace carpenter {

std::vector<FrameVector> result_vectors(const ConstructionResult& result) {
  std::vector<std::pair<std::size_t, const FrameVector*>> all;
  for (const auto& c : result.constructed) {
    all.emplace_back(c.index, &c.vec);
  }
  for (const auto& r : result.residuals) {
    all.emplace_back(r.slot, &r.vec);
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<FrameVector> out;
  for (const auto& [slot, v] : all) {
    out.push_back(*v);
  }
  return out;
}

double gram_check(const std::vector<FrameVector>& vectors) {
  double worst = 0.0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = i; j < vectors.size(); ++j) {
      worst = std::max(worst, std::abs(dot(vectors[i], vectors[j]) - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

std::vector<VectorDeviation> diagonal_check(const EntryOracle& oracle, const ConstructionResult& result) {
  std::vector<VectorDeviation> out;
  for (const auto& c : result.constructed) {
    VectorDeviation v;
    v.id = c.vec.id();
    v.slot = c.index;
    v.target = c.target;
    v.achieved = rayleigh(oracle, c.vec);
    v.dev = std::abs(v.achieved - v.target);
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<DefectRow> completeness_defect(const ConstructionResult& result, std::size_t J) {
  std::vector<DefectRow> rows;
  std::optional<std::size_t> chain_start;
  double product = 1.0;
  if (result.logs.size() == 1 && result.chains.size() == 1 && !result.chains[0].indices.empty()) {
    chain_start = result.chains[0].indices[0];
    for (const auto& m : result.logs[0].moves) {
      product *= m.complement;
    }
  }
  for (std::size_t j = 1; j <= J; ++j) {
    DefectRow row;
    row.j = j;
    double covered = 0.0;
    for (const auto& c : result.constructed) {
      const double x = c.vec[j];
      covered += x * x;
    }
    row.defect = 1.0 - covered;
    if (chain_start && *chain_start == j) {
      row.closed_form = product;
    }
    rows.push_back(row);
  }
  return rows;
}

LedgerTotals ledger_check(const EntryOracle& oracle, const ConstructionResult& result) {
  LedgerTotals t;
  for (const auto& c : result.constructed) {
    t.constructed += rayleigh(oracle, c.vec);
  }
  for (const auto& r : result.residuals) {
    t.residual += rayleigh(oracle, r.vec);
  }
  for (std::size_t i : result.consumed) {
    const double v = oracle.entry(i, i);
    t.consumed += v;
    t.scale = std::max(t.scale, std::abs(v));
  }
  t.deviation = std::abs(t.constructed + t.residual - t.consumed);
  return t;
}

VerificationReport verify(const EntryOracle& oracle, const ConstructionResult& result, const Tolerances& tol) {
  VerificationReport rep;
  rep.tolerances = tol;
  rep.gram_max_dev = gram_check(result_vectors(result));
  rep.per_vector = diagonal_check(oracle, result);
  for (const auto& v : rep.per_vector) {
    rep.diag_max_dev = std::max(rep.diag_max_dev, v.dev);
  }
  rep.defect_table = completeness_defect(result, result.window);
  rep.ledger = ledger_check(oracle, result);
  rep.ledger_dev = rep.ledger.deviation;
  rep.pass = rep.gram_max_dev <= tol.gram && rep.diag_max_dev <= tol.diag &&
             rep.ledger_dev <= tol.ledger * rep.ledger.scale;
  return rep;
}

void rebuild_from_logs(ConstructionResult& result) {
  std::map<std::string, FrameVector> family;
  for (std::size_t i : result.consumed) {
    family[slot_id(i)] = FrameVector::unit(i, slot_id(i));
  }
  for (const auto& log : result.logs) {
    replay(family, log);
  }
  for (auto& c : result.constructed) {
    c.vec = family.at(slot_id(c.index));
  }
  for (auto& r : result.residuals) {
    r.vec = family.at(slot_id(r.slot));
  }
}

Injection inject_sign_flip(ConstructionResult& result, std::uint64_t seed) {
  std::vector<FrameVector*> all;
  for (auto& c : result.constructed) {
    all.push_back(&c.vec);
  }
  for (auto& r : result.residuals) {
    all.push_back(&r.vec);
  }
  // A flip is visible in the Gram matrix when another vector shares the coefficient.
  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  for (std::size_t a = 0; a < all.size(); ++a) {
    for (const auto& [k, x] : all[a]->coeffs()) {
      for (std::size_t b = 0; b < all.size(); ++b) {
        if (b != a && std::abs(x * (*all[b])[k]) >= 1e-6) {
          candidates.emplace_back(a, k);
          break;
        }
      }
    }
  }
  if (candidates.empty()) {
    throw DomainError("no coefficient whose sign flip is observable");
  }
  std::mt19937_64 rng(seed);
  const auto [a, k] = candidates[rng() % candidates.size()];
  Injection inj;
  inj.kind = "sign";
  inj.target = all[a]->id();
  inj.frame_index = k;
  inj.before = (*all[a])[k];
  inj.after = -inj.before;
  all[a]->set(k, inj.after);
  return inj;
}

Injection inject_alpha_perturbation(ConstructionResult& result, std::uint64_t seed, double delta) {
  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  for (std::size_t l = 0; l < result.logs.size(); ++l) {
    for (std::size_t m = 0; m < result.logs[l].moves.size(); ++m) {
      if (result.logs[l].moves[m].alpha > 0.0) {
        candidates.emplace_back(l, m);
      }
    }
  }
  if (candidates.empty()) {
    throw DomainError("no rotation move to perturb");
  }
  std::mt19937_64 rng(seed);
  const auto [l, m] = candidates[rng() % candidates.size()];
  PairMove& mv = result.logs[l].moves[m];
  Injection inj;
  inj.kind = "alpha";
  inj.target = result.logs[l].id + ":" + std::to_string(m + 1);
  inj.before = mv.alpha;
  mv.alpha = mv.alpha > 0.5 ? mv.alpha - delta : mv.alpha + delta;
  mv.complement = 1.0 - mv.alpha;
  inj.after = mv.alpha;
  rebuild_from_logs(result);
  return inj;
}

} // namespace carpenter
