#include "carpenter/schur_horn.hpp"

#include "carpenter/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace carpenter {

namespace {

std::vector<std::size_t> descending_order(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  return order;
}

void require_orthonormal(const std::vector<FrameVector>& vectors) {
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = i; j < vectors.size(); ++j) {
      const double expected = i == j ? 1.0 : 0.0;
      if (std::abs(dot(vectors[i], vectors[j]) - expected) > 1e-10) {
        throw DomainError("block vectors " + vectors[i].id() + " and " + vectors[j].id() +
                          " are not orthonormal");
      }
    }
  }
}

} // namespace

TransferPlan robin_hood_plan(const std::vector<double>& dtilde, const std::vector<double>& d) {
  if (dtilde.size() != d.size() || d.empty()) {
    throw DomainError("transfer plan needs two nonempty lists of equal length");
  }
  auto verdict = check_finite_majorization(dtilde, d);
  if (!verdict.ok) {
    throw DomainError("majorization violated: " + verdict.reason);
  }
  const std::size_t n = d.size();
  TransferPlan plan;
  plan.start = dtilde;
  plan.target = d;
  plan.final_value.assign(n, 0.0);

  const auto slot_order = descending_order(dtilde);
  const auto target_order = descending_order(d);
  std::vector<double> x(n);
  std::vector<double> t(n);
  double scale = 1.0;
  for (std::size_t r = 0; r < n; ++r) {
    x[r] = dtilde[slot_order[r]];
    t[r] = d[target_order[r]];
    scale = std::max({scale, std::abs(x[r]), std::abs(t[r])});
  }
  const double tol = 1e-12 * scale;

  while (true) {
    std::size_t p = n;
    std::size_t q = n;
    for (std::size_t r = 0; r < n && (p == n || q == n); ++r) {
      if (p == n && x[r] > t[r] + tol) {
        p = r;
      }
      if (q == n && x[r] < t[r] - tol) {
        q = r;
      }
    }
    if (p == n || q == n) {
      break;
    }
    if (p > q) {
      throw DomainError("transfer plan reached a deficit before any surplus");
    }
    const double surplus = x[p] - t[p];
    const double deficit = t[q] - x[q];
    Transfer tr;
    tr.from = slot_order[p] + 1;
    tr.to = slot_order[q] + 1;
    if (surplus <= deficit) {
      tr.amount = surplus;
      x[p] = t[p];
      x[q] += surplus;
    } else {
      tr.amount = deficit;
      tr.finishes_from = false;
      x[q] = t[q];
      x[p] -= deficit;
    }
    plan.transfers.push_back(tr);
    if (plan.transfers.size() > 2 * n) {
      throw DomainError("transfer plan exceeded 2N transfers");
    }
  }
  for (std::size_t r = 0; r < n; ++r) {
    plan.final_value[slot_order[r]] = t[r];
  }
  return plan;
}

std::vector<double> BlockCompression::diagonal() const {
  std::vector<double> out;
  for (std::size_t i = 1; i <= n; ++i) {
    out.push_back(at(i, i));
  }
  return out;
}

BlockCompression compress(const EntryOracle& oracle, const std::vector<FrameVector>& vectors) {
  BlockCompression c;
  c.n = vectors.size();
  c.entries.assign(c.n * c.n, 0.0);
  for (std::size_t i = 0; i < c.n; ++i) {
    c.ids.push_back(vectors[i].id());
    for (std::size_t j = i; j < c.n; ++j) {
      const double v = compressed_entry(oracle, vectors[i], vectors[j]);
      c.entries[i * c.n + j] = v;
      c.entries[j * c.n + i] = v;
    }
  }
  return c;
}

BlockRun realize_block(const EntryOracle& oracle, const std::vector<FrameVector>& vectors,
                       const std::vector<double>& d, const std::string& log_id) {
  if (vectors.size() != d.size()) {
    throw DomainError("block has " + std::to_string(vectors.size()) + " vectors but " +
                      std::to_string(d.size()) + " targets");
  }
  require_orthonormal(vectors);
  BlockRun run;
  run.log.id = log_id;
  run.vectors = vectors;
  run.plan = robin_hood_plan(compress(oracle, vectors).diagonal(), d);

  // Each transfer finishes one of its two positions; that position is the
  // left vector of the move so its target is hit directly.
  std::size_t step = 0;
  for (const Transfer& tr : run.plan.transfers) {
    ++step;
    const std::size_t left = (tr.finishes_from ? tr.from : tr.to) - 1;
    const std::size_t right = (tr.finishes_from ? tr.to : tr.from) - 1;
    try {
      run.log.moves.push_back(
        execute_move(oracle, run.vectors[left], run.vectors[right], run.plan.final_value[left], step));
    } catch (const BracketingError& e) {
      throw BracketingError(step, e.current(), e.feed(), e.target());
    }
  }

  // Relabel so that position i carries d_i.
  std::vector<double> value = run.plan.final_value;
  for (std::size_t i = 0; i < value.size(); ++i) {
    if (value[i] == d[i]) {
      continue;
    }
    std::size_t j = value.size();
    for (std::size_t k = i + 1; k < value.size(); ++k) {
      if (value[k] == d[i] && value[k] != d[k]) {
        if (j == value.size() || value[i] == d[k]) {
          j = k;
        }
        if (value[i] == d[k]) {
          break;
        }
      }
    }
    if (j == value.size()) {
      throw DomainError("relabeling found no position holding the requested value");
    }
    run.log.moves.push_back(swap_move(run.vectors[i].id(), run.vectors[j].id()));
    std::string id_i = run.vectors[i].id();
    std::string id_j = run.vectors[j].id();
    std::swap(run.vectors[i], run.vectors[j]);
    run.vectors[i].set_id(id_i);
    run.vectors[j].set_id(id_j);
    std::swap(value[i], value[j]);
  }
  return run;
}

std::vector<MoveLog> block_apply(const EntryOracle& oracle, const std::vector<Block>& blocks,
                                 std::map<std::size_t, FrameVector>& slots,
                                 const std::vector<std::vector<double>>& targets,
                                 const std::string& log_prefix) {
  if (blocks.size() != targets.size()) {
    throw DomainError("block_apply needs one target list per block");
  }
  std::vector<Block> sorted = blocks;
  std::sort(sorted.begin(), sorted.end(), [](const Block& a, const Block& b) { return a.first < b.first; });
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    if (sorted[j].first == 0 || sorted[j].last < sorted[j].first) {
      throw DomainError("block bounds are invalid");
    }
    if (j > 0 && sorted[j].first <= sorted[j - 1].last) {
      throw DomainError("blocks overlap at index " + std::to_string(sorted[j].first));
    }
  }
  std::vector<MoveLog> logs;
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    const Block& b = blocks[j];
    if (targets[j].size() != b.size()) {
      throw DomainError("block target list has the wrong length");
    }
    std::vector<FrameVector> vectors;
    for (std::size_t i = b.first; i <= b.last; ++i) {
      auto it = slots.find(i);
      if (it == slots.end()) {
        throw DomainError("block refers to missing slot " + std::to_string(i));
      }
      vectors.push_back(it->second);
    }
    const std::string id = log_prefix + "_" + std::to_string(b.first) + "_" + std::to_string(b.last);
    BlockRun run;
    try {
      run = realize_block(oracle, vectors, targets[j], id);
    } catch (const BracketingError&) {
      throw;
    } catch (const DomainError& e) {
      throw DomainError("block [" + std::to_string(b.first) + ", " + std::to_string(b.last) + "]: " + e.what());
    }
    for (std::size_t i = b.first; i <= b.last; ++i) {
      slots[i] = std::move(run.vectors[i - b.first]);
    }
    if (!run.log.moves.empty()) {
      logs.push_back(std::move(run.log));
    }
  }
  return logs;
}

BlockRun eigen_to_diagonal(const std::vector<double>& lambda, const std::vector<double>& d) {
  auto oracle = EntryOracle::diagonal(lambda);
  std::vector<FrameVector> vectors;
  for (std::size_t i = 1; i <= lambda.size(); ++i) {
    vectors.push_back(FrameVector::unit(i, slot_id(i)));
  }
  return realize_block(oracle, vectors, d, "eigen");
}

} // namespace carpenter
