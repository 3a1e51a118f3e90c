#include "carpenter/construct.hpp"

#include "carpenter/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace carpenter {

namespace {

enum class SlotState { Untouched, Final, Residual };

struct Slot {
  FrameVector vec;
  double value = 0.0; // planned diagonal value
  SlotState state = SlotState::Untouched;
  std::string chain;
};

struct Workspace {
  const EntryOracle& oracle;
  ConstructOptions options;
  SequenceSpec lambda; // window prefixes
  SequenceSpec d;
  std::size_t window = 0;
  std::map<std::size_t, Slot> slots;
  std::vector<MoveLog> logs;
  std::vector<TransformRecord> transforms;
  std::vector<ChainRecord> chains;
  nlohmann::json params = nlohmann::json::object();
  std::size_t chain_counter = 0;

  Workspace(const EntryOracle& o, const SequenceSpec& lam, const SequenceSpec& dd, const ConstructOptions& opt)
      : oracle(o), options(opt) {
    std::size_t w = opt.window;
    const std::size_t limit = std::min({lam.size(), dd.size(), o.window()});
    if (w == 0) {
      w = limit;
    }
    if (w == 0 || w > limit) {
      throw DomainError("window " + std::to_string(w) + " exceeds the available inputs (" +
                        std::to_string(limit) + ")");
    }
    window = w;
    lambda = lam.head(w);
    d = dd.head(w);
    lambda.regime = lam.regime;
    d.regime = dd.regime;
    for (std::size_t i = 1; i <= w; ++i) {
      slots[i] = Slot{FrameVector::unit(i, slot_id(i)), lambda(i), SlotState::Untouched, {}};
    }
  }

  std::string next_chain(const std::string& prefix) { return prefix + std::to_string(++chain_counter); }
};

double scale_of(const SequenceSpec& lambda, const SequenceSpec& d) {
  double s = 1.0;
  for (std::size_t i = 1; i <= lambda.size(); ++i) {
    s = std::max({s, std::abs(lambda(i)), std::abs(d(i))});
  }
  return s;
}

SequenceSpec slice(const SequenceSpec& s, std::size_t from, std::size_t length) {
  std::vector<std::size_t> positions(length);
  std::iota(positions.begin(), positions.end(), from);
  return s.select(positions);
}

void record(Workspace& ws, const std::string& name, const std::string& input, std::size_t input_from,
            const std::string& lambda_name, std::size_t lambda_from, std::size_t length, std::size_t offset,
            nlohmann::json params, const SequenceSpec& result, const std::string& output) {
  params["input_from"] = input_from;
  params["lambda"] = lambda_name;
  params["lambda_from"] = lambda_from;
  params["length"] = length;
  TransformRecord r;
  r.name = name;
  r.input = input;
  r.output = output;
  r.offset = offset;
  r.params = std::move(params);
  r.result = result;
  ws.transforms.push_back(std::move(r));
}

std::string unique_name(const Workspace& ws, const std::string& base) {
  return base + std::to_string(ws.transforms.size() + 1);
}

void realize_blocks(Workspace& ws, const std::vector<Block>& blocks,
                    const std::vector<std::vector<double>>& targets, const std::string& prefix) {
  if (blocks.empty()) {
    return;
  }
  std::map<std::size_t, FrameVector> vectors;
  for (const Block& b : blocks) {
    for (std::size_t i = b.first; i <= b.last; ++i) {
      vectors[i] = ws.slots.at(i).vec;
    }
  }
  auto logs = block_apply(ws.oracle, blocks, vectors, targets, prefix);
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    for (std::size_t i = blocks[j].first; i <= blocks[j].last; ++i) {
      Slot& s = ws.slots.at(i);
      s.vec = vectors.at(i);
      s.value = targets[j][i - blocks[j].first];
      s.state = SlotState::Final;
      s.chain.clear();
    }
  }
  for (auto& log : logs) {
    ws.logs.push_back(std::move(log));
  }
}

std::vector<std::vector<double>> block_targets(const std::vector<Block>& blocks, const SequenceSpec& d,
                                               std::size_t offset) {
  std::vector<std::vector<double>> out;
  for (const Block& b : blocks) {
    std::vector<double> t;
    for (std::size_t i = b.first; i <= b.last; ++i) {
      t.push_back(d(i - offset));
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Block> shifted(const std::vector<Block>& blocks, std::size_t offset) {
  std::vector<Block> out;
  for (const Block& b : blocks) {
    out.push_back({b.first + offset, b.last + offset});
  }
  return out;
}

// Rotation chains for pointwise dominated pairs on the listed global slots.
void run_nondec(Workspace& ws, const std::vector<std::size_t>& globals, const std::vector<double>& lam,
                const std::vector<double>& d, const std::string& prefix) {
  const std::size_t n = globals.size();
  double scale = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] < lam[i]) {
      throw DomainError("pointwise domination fails at index " + std::to_string(globals[i]));
    }
    scale = std::max({scale, std::abs(lam[i]), std::abs(d[i])});
  }
  const double tol = 1e-12 * scale;
  std::vector<bool> used(n, false);
  std::size_t built = 0;
  while (built < ws.options.chain_cap) {
    std::size_t start = 0;
    while (start < n && used[start]) {
      ++start;
    }
    if (start == n) {
      break;
    }
    std::vector<std::size_t> sel{start};
    std::vector<double> xs{lam[start]};
    std::vector<double> at;
    used[start] = true;
    while (sel.size() <= ws.options.max_steps) {
      const std::size_t last = sel.back();
      const double threshold = std::max(2 * d[last], 2 * d[last] - xs.back());
      std::size_t found = n;
      bool skipped = false;
      for (std::size_t q = last + 1; q < n; ++q) {
        if (used[q]) {
          continue;
        }
        if (!skipped) {
          skipped = true;
          continue;
        }
        if (lam[q] > threshold) {
          found = q;
          break;
        }
      }
      if (found == n) {
        break;
      }
      const double x = xs.back();
      const double xnext = lam[found] + x - d[last];
      if (!(x <= d[last] + tol && d[last] < xnext && xnext <= lam[found] + tol)) {
        throw DomainError("chain ordering x <= d < x' <= lambda' fails at index " + std::to_string(globals[last]));
      }
      const double a = (lam[found] - d[last]) / (lam[found] - x);
      if (!(a > 0.5)) {
        throw DomainError("chain lower bound alpha_tilde <= 1/2 at index " + std::to_string(globals[last]));
      }
      sel.push_back(found);
      xs.push_back(xnext);
      at.push_back(a);
      used[found] = true;
    }
    ++built;
    if (sel.size() == 1) {
      Slot& s = ws.slots.at(globals[start]);
      if (d[start] == lam[start]) {
        s.state = SlotState::Final;
        s.value = d[start];
      }
      continue;
    }
    const std::string id = ws.next_chain(prefix);
    const Slot& first = ws.slots.at(globals[sel[0]]);
    std::vector<FrameVector> feeds;
    std::vector<double> targets;
    for (std::size_t k = 1; k < sel.size(); ++k) {
      feeds.push_back(ws.slots.at(globals[sel[k]]).vec);
      targets.push_back(d[sel[k - 1]]);
    }
    ChainRun run;
    try {
      run = chain_execute(ws.oracle, first.vec, feeds, targets, ws.options.max_steps, id);
    } catch (const BracketingError& e) {
      throw DomainError("chain " + id + " step " + std::to_string(e.step()) + ": " + e.what());
    }
    for (std::size_t k = 0; k + 1 < sel.size(); ++k) {
      const PairMove& m = run.log.moves[k];
      if (m.alpha < at[k] - 1e-12) {
        throw DomainError("chain " + id + " solved alpha below its lower bound at step " + std::to_string(k + 1));
      }
      Slot& s = ws.slots.at(globals[sel[k]]);
      s.vec = run.outputs[k];
      s.value = targets[k];
      s.state = SlotState::Final;
      s.chain = id;
    }
    Slot& last = ws.slots.at(globals[sel.back()]);
    last.vec = run.pending;
    last.value = run.pending_values.back();
    last.state = SlotState::Residual;
    last.chain = id;
    ChainRecord rec;
    rec.id = id;
    for (std::size_t k : sel) {
      rec.indices.push_back(globals[k]);
    }
    rec.x = xs;
    rec.alpha_tilde = at;
    ws.chains.push_back(std::move(rec));
    ws.logs.push_back(std::move(run.log));
  }
}

// Pair with delta_k > 0 on the window and liminf delta_k = 0. The view
// covers global slots offset+1..offset+W; `input` names d's sequence in the
// replay namespace, starting at position input_from.
void run_lim0(Workspace& ws, std::size_t offset, const SequenceSpec& lam, const SequenceSpec& d,
              const std::string& input, std::size_t input_from) {
  const std::size_t W = lam.size();
  if (W < 2) {
    throw DomainError("conservation pipeline needs a window of at least 2 after the zero blocks");
  }
  if (entry_difference(lam, W, lam, 1) == 0.0) {
    throw DomainError("lambda is constant on the window; positive partial sums with liminf 0 need a "
                      "strictly larger eigenvalue");
  }
  const DeltaProfile profile = delta_profile(lam, d, W);
  for (std::size_t k = 1; k <= W; ++k) {
    if (!(profile.delta(k) > 0.0)) {
      throw DomainError("conservation pipeline needs positive partial sums; delta_" + std::to_string(k) +
                        " = " + std::to_string(profile.delta(k)));
    }
  }
  std::size_t M = 0;
  std::size_t N = 0;
  if (entry_difference(d, 1, lam, 2) < 0.0) {
    N = 1;
  } else {
    M = 2;
    while (M <= W && entry_difference(lam, M, lam, 1) <= 0.0) {
      ++M;
    }
    const double gap = entry_difference(lam, M, lam, 1);
    double running = profile.delta(M);
    for (std::size_t k = 1; k <= M; ++k) {
      running = std::min(running, profile.delta(k));
    }
    for (std::size_t k = M + 1; k < W; ++k) {
      if (profile.delta(k) <= running && profile.delta(k) < gap) {
        N = k;
        break;
      }
      running = std::min(running, profile.delta(k));
    }
    if (N == 0) {
      throw DomainError("no flat-prefix cutoff N in the window: partial sums never drop below " +
                        std::to_string(gap) + "; enlarge the window");
    }
  }
  const std::size_t lambda_from = offset + 1;
  ws.params["M"] = M;
  ws.params["N"] = N;

  const SequenceSpec flat = flat_prefix_transform(lam, d, N);
  const std::string flat_name = unique_name(ws, "flat");
  record(ws, "flat_prefix", input, input_from, "lambda", lambda_from, W, offset, {{"N", N}, {"M", M}}, flat,
         flat_name);

  std::vector<std::size_t> positions{1};
  for (std::size_t i = N + 1; i <= W; ++i) {
    positions.push_back(i);
  }
  const SequenceSpec c = flat.select(positions);
  const SequenceSpec mu = lam.select(positions);
  const std::string c_name = unique_name(ws, "c");
  record(ws, "splice", flat_name, 1, "lambda", lambda_from, W, offset, {{"positions", positions}}, c, c_name);
  const std::string mu_name = unique_name(ws, "mu");
  record(ws, "splice", "lambda", lambda_from, "lambda", lambda_from, W, offset, {{"positions", positions}}, mu,
         mu_name);

  const std::size_t Wc = positions.size();
  auto global = [&](std::size_t cpos) { return offset + (cpos == 1 ? 1 : cpos + N - 1); };
  if (Wc < 2) {
    throw DomainError("spliced window is too short for a rotation chain");
  }
  const DeltaProfile cp = delta_profile(mu, c, Wc);
  const auto records = strict_decrease_records(cp);
  if (records.size() < 2) {
    throw DomainError("partial sums never decrease on the spliced window; enlarge the window");
  }
  const SequenceSpec interp = averaged_interpolant(mu, c, records);
  const std::string interp_name = unique_name(ws, "interp");
  record(ws, "averaged_interpolant", c_name, 1, mu_name, 1, records.back(), offset, {{"records", records}},
         interp, interp_name);

  const std::size_t mJ = records.back();
  const std::size_t S = std::min({mJ, Wc - 1, ws.options.max_steps});
  ws.params["steps"] = S;
  const DecdelTailData tail = decdel_tail_data(mu.head(mJ), interp);

  const std::string id = ws.next_chain("decdel");
  std::vector<FrameVector> feeds;
  std::vector<double> targets;
  for (std::size_t k = 1; k <= S; ++k) {
    feeds.push_back(ws.slots.at(global(k + 1)).vec);
    targets.push_back(interp(k));
  }
  ChainRun run;
  try {
    run = chain_execute(ws.oracle, ws.slots.at(global(1)).vec, feeds, targets, S, id);
  } catch (const BracketingError& e) {
    throw DomainError("decdel chain step " + std::to_string(e.step()) + ": " + e.what());
  }
  for (std::size_t k = 0; k < S; ++k) {
    if (k < tail.alpha_tilde.size() && run.log.moves[k].alpha < tail.alpha_tilde[k] - 1e-12) {
      throw DomainError("decdel chain solved alpha below the tail bound at step " + std::to_string(k + 1));
    }
    Slot& s = ws.slots.at(global(k + 1));
    s.vec = run.outputs[k];
    s.value = targets[k];
    s.state = SlotState::Final;
    s.chain = id;
  }
  Slot& pend = ws.slots.at(global(S + 1));
  pend.vec = run.pending;
  pend.value = run.pending_values.back();
  pend.state = SlotState::Residual;
  pend.chain = id;
  ChainRecord rec;
  rec.id = id;
  for (std::size_t k = 1; k <= S + 1; ++k) {
    rec.indices.push_back(global(k));
    if (k <= tail.lambda_tilde.size()) {
      rec.x.push_back(tail.lambda_tilde[k - 1]);
    }
  }
  rec.alpha_tilde.assign(tail.alpha_tilde.begin(),
                         tail.alpha_tilde.begin() + std::min(S, tail.alpha_tilde.size()));
  ws.chains.push_back(std::move(rec));
  ws.logs.push_back(std::move(run.log));

  // Interpolant blocks turn finished chain outputs into the spliced targets.
  std::vector<Block> blocks;
  std::vector<std::vector<double>> block_t;
  for (std::size_t j = 0; j + 1 < records.size(); ++j) {
    const std::size_t a = records[j];
    const std::size_t b = records[j + 1];
    if (b > S) {
      break;
    }
    if (a + 1 == b) {
      continue;
    }
    blocks.push_back({global(a + 1), global(b)});
    std::vector<double> t;
    for (std::size_t p = a + 1; p <= b; ++p) {
      t.push_back(c(p));
    }
    block_t.push_back(std::move(t));
  }
  realize_blocks(ws, blocks, block_t, "interp");

  if (N > 1) {
    std::vector<double> t;
    for (std::size_t i = 1; i <= N; ++i) {
      t.push_back(d(i));
    }
    realize_blocks(ws, {{offset + 1, offset + N}}, {t}, "flat");
  } else if (ws.slots.at(offset + 1).state == SlotState::Final && ws.slots.at(offset + 1).value != d(1)) {
    throw DomainError("direct path left slot 1 with a value different from its target");
  }
}

PrefixReduction reduce_view(const SequenceSpec& lam, const SequenceSpec& d, TailRegime regime) {
  SequenceSpec dd = d;
  dd.regime = regime;
  return reduce_prefix(lam, dd, delta_profile(lam, d, lam.size()));
}

void run_reduced_blocks(Workspace& ws, const PrefixReduction& red, const SequenceSpec& d, std::size_t offset) {
  std::vector<Block> blocks;
  for (const Block& b : red.blocks.blocks) {
    if (b.size() > 1) {
      blocks.push_back(b);
    } else {
      Slot& s = ws.slots.at(b.first + offset);
      s.state = SlotState::Final;
      s.value = d(b.first);
    }
  }
  realize_blocks(ws, shifted(blocks, offset), block_targets(shifted(blocks, offset), d, offset), "zero");
}

std::optional<std::size_t> suffix_of(const PrefixReduction& red, std::size_t W) {
  if (!red.suffix_start || *red.suffix_start > W) {
    return std::nullopt;
  }
  return red.suffix_start;
}

void run_conservation(Workspace& ws, std::size_t offset, const SequenceSpec& lam, const SequenceSpec& d,
                      const std::string& input, std::size_t input_from) {
  const auto red = reduce_view(lam, d, TailRegime::ConservationOfMass);
  run_reduced_blocks(ws, red, d, offset);
  if (auto s = suffix_of(red, lam.size())) {
    const std::size_t len = lam.size() - *s + 1;
    run_lim0(ws, offset + *s - 1, slice(lam, *s, len), slice(d, *s, len), input, input_from + *s - 1);
  }
}

void run_limalpha(Workspace& ws, std::size_t offset, const SequenceSpec& lam, const SequenceSpec& d,
                  double alpha, std::optional<std::size_t> declared_M) {
  if (!std::isfinite(alpha) || alpha < 0.0) {
    throw DomainError("regime validation: alpha must be finite and nonnegative");
  }
  const std::size_t W = lam.size();
  const DeltaProfile profile = delta_profile(lam, d, W);
  const double tol = 1e-12 * std::max(1.0, alpha);
  std::size_t M = 1;
  if (declared_M) {
    M = std::max<std::size_t>(1, *declared_M);
    for (std::size_t k = M; k <= W; ++k) {
      if (profile.delta(k) < alpha - tol) {
        throw DomainError("regime validation: delta_" + std::to_string(k) + " < alpha although k >= M");
      }
    }
  } else {
    M = W + 1;
    for (std::size_t m = W; m >= 1; --m) {
      if (profile.delta(m) < alpha - tol) {
        break;
      }
      M = m;
    }
    if (M > W) {
      throw DomainError("regime validation: partial sums are not eventually above alpha on the window");
    }
  }
  ws.params["alpha"] = alpha;
  ws.params["M_alpha"] = M;
  if (alpha == 0.0) {
    run_conservation(ws, offset, lam, d, "d", offset + 1);
    return;
  }
  const std::size_t N = limalpha_cutoff(profile, alpha, M);
  if (N > W) {
    throw DomainError("cutoff N = " + std::to_string(N) + " lies beyond the window; enlarge the window");
  }
  ws.params["N_alpha"] = N;
  const SequenceSpec dt = limalpha_shift(lam, d, alpha, N);
  const std::string shift_name = unique_name(ws, "shift");
  record(ws, "limalpha_shift", "d", offset + 1, "lambda", offset + 1, W, offset, {{"alpha", alpha}, {"N", N}},
         dt, shift_name);
  run_conservation(ws, offset, lam, dt, shift_name, 1);

  std::vector<std::size_t> globals;
  std::vector<double> lp;
  std::vector<double> dp;
  for (std::size_t i = 1; i <= W; ++i) {
    const Slot& s = ws.slots.at(offset + i);
    if (s.state == SlotState::Final && s.value == dt(i)) {
      globals.push_back(offset + i);
      lp.push_back(dt(i));
      dp.push_back(d(i));
    }
  }
  run_nondec(ws, globals, lp, dp, "shift");
}

void run_tonondec(Workspace& ws, std::size_t offset, const SequenceSpec& lam, const SequenceSpec& d, double alpha,
                  std::optional<std::size_t> guard) {
  const std::size_t W = lam.size();
  const DeltaProfile profile = delta_profile(lam, d, W);
  bool dip = false;
  for (std::size_t k = 1; k <= W; ++k) {
    dip = dip || profile.delta(k) < alpha;
  }
  if (!dip) {
    throw DomainError("regime validation: partial sums never dip below alpha on the window");
  }
  const std::size_t g = guard.value_or(std::max<std::size_t>(1, W / 16));
  const auto minima = running_tail_minima(profile, g);
  if (minima.empty()) {
    throw DomainError("uncertified minima: no tail minimum on the window");
  }
  const SequenceSpec dt = tonondec_transform(lam, d, minima);
  const std::string name = unique_name(ws, "tonondec");
  record(ws, "tonondec", "d", offset + 1, "lambda", offset + 1, W, offset, {{"minima", minima}, {"guard", g}}, dt,
         name);
  ws.params["guard"] = g;
  const std::size_t mL = minima.back();
  std::vector<std::size_t> globals;
  std::vector<double> lp;
  std::vector<double> dp;
  for (std::size_t i = 1; i <= mL; ++i) {
    globals.push_back(offset + i);
    lp.push_back(lam(i));
    dp.push_back(dt(i));
  }
  run_nondec(ws, globals, lp, dp, "tonondec");

  std::vector<Block> blocks;
  std::size_t prev = 0;
  for (std::size_t m : minima) {
    bool complete = true;
    for (std::size_t i = prev + 1; i <= m; ++i) {
      const Slot& s = ws.slots.at(offset + i);
      complete = complete && s.state == SlotState::Final && s.value == dt(i);
    }
    if (complete && m > prev + 1) {
      blocks.push_back({offset + prev + 1, offset + m});
    }
    if (complete && m == prev + 1) {
      ws.slots.at(offset + m).value = d(m);
    }
    prev = m;
  }
  realize_blocks(ws, blocks, block_targets(blocks, d, offset), "tonondec");
}

ConstructionResult finish(Workspace& ws, const std::string& route) {
  ConstructionResult r;
  r.route = route;
  r.parameters = ws.params;
  r.window = ws.window;
  r.lambda = ws.lambda;
  r.d = ws.d;
  for (auto& [i, s] : ws.slots) {
    if (s.state == SlotState::Untouched) {
      r.untouched.push_back(i);
      continue;
    }
    r.consumed.push_back(i);
    if (s.state == SlotState::Final && s.value == ws.d(i)) {
      r.constructed.push_back({i, s.vec, s.value});
    } else {
      r.residuals.push_back({i, s.vec, rayleigh(ws.oracle, s.vec), s.chain});
    }
  }
  r.logs = std::move(ws.logs);
  r.transforms = std::move(ws.transforms);
  r.chains = std::move(ws.chains);
  return r;
}

void require_weak(const Workspace& ws) {
  auto v = check_weak_majorization(ws.lambda, ws.d, ws.window);
  if (!v.ok) {
    throw DomainError("majorization violated at prefix " + std::to_string(v.first_violation.value_or(0)) + ": " +
                      v.reason);
  }
}

void require_diagonal(const Workspace& ws) {
  const double scale = scale_of(ws.lambda, ws.d);
  for (std::size_t i = 1; i <= ws.window; ++i) {
    if (std::abs(ws.oracle.entry(i, i) - ws.lambda(i)) > 1e-12 * scale) {
      throw DomainError("oracle diagonal differs from lambda at index " + std::to_string(i));
    }
  }
}

template <typename Fn>
ConstructionResult staged(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const DomainError&) {
    rethrow_with_stage(stage);
  }
}

} // namespace

PrefixReduction reduce_prefix(const SequenceSpec& lambda, const SequenceSpec& d, const DeltaProfile& profile) {
  for (std::size_t k = 1; k <= profile.size(); ++k) {
    if (profile.delta(k) < -profile.zero_tolerance) {
      throw DomainError("negative partial sum at k = " + std::to_string(k));
    }
  }
  (void)lambda;
  PrefixReduction r;
  r.blocks = zero_partition(profile);
  if (d.regime != TailRegime::ZerosInfinitelyOften) {
    r.suffix_start = r.blocks.open_from;
  }
  return r;
}

ConstructionResult decdel_construct(const EntryOracle& oracle, const SequenceSpec& lambda, const SequenceSpec& d,
                                    std::size_t steps) {
  return staged("decdel", [&] {
    ConstructOptions opt;
    opt.window = steps + 1;
    Workspace ws(oracle, lambda, d, opt);
    SequenceSpec dd = ws.d;
    dd.regime = TailRegime::ConservationOfMass;
    const DecdelTailData tail = decdel_tail_data(ws.lambda, dd);
    const std::string id = ws.next_chain("decdel");
    std::vector<FrameVector> feeds;
    std::vector<double> targets;
    for (std::size_t k = 1; k <= steps; ++k) {
      feeds.push_back(ws.slots.at(k + 1).vec);
      targets.push_back(ws.d(k));
    }
    ChainRun run = chain_execute(oracle, ws.slots.at(1).vec, feeds, targets, steps, id);
    for (std::size_t k = 0; k < steps; ++k) {
      Slot& s = ws.slots.at(k + 1);
      s.vec = run.outputs[k];
      s.value = targets[k];
      s.state = SlotState::Final;
      s.chain = id;
    }
    Slot& pend = ws.slots.at(steps + 1);
    pend.vec = run.pending;
    pend.value = run.pending_values.empty() ? pend.value : run.pending_values.back();
    pend.state = steps == 0 ? SlotState::Untouched : SlotState::Residual;
    pend.chain = id;
    ChainRecord rec;
    rec.id = id;
    for (std::size_t k = 1; k <= steps + 1; ++k) {
      rec.indices.push_back(k);
    }
    rec.x = tail.lambda_tilde;
    rec.alpha_tilde = tail.alpha_tilde;
    ws.chains.push_back(std::move(rec));
    ws.logs.push_back(std::move(run.log));
    ws.params["steps"] = steps;
    return finish(ws, "decdel");
  });
}

ConstructionResult lim0_construct(const EntryOracle& oracle, const SequenceSpec& lambda, const SequenceSpec& d,
                                  const ConstructOptions& options) {
  return staged("lim0", [&] {
    Workspace ws(oracle, lambda, d, options);
    run_lim0(ws, 0, ws.lambda, ws.d, "d", 1);
    return finish(ws, "lim0");
  });
}

ConstructionResult nondec_construct(const EntryOracle& oracle, const SequenceSpec& lambda, const SequenceSpec& d,
                                    const ConstructOptions& options) {
  return staged("nondec", [&] {
    Workspace ws(oracle, lambda, d, options);
    std::vector<std::size_t> globals(ws.window);
    std::iota(globals.begin(), globals.end(), 1);
    std::vector<double> lp;
    std::vector<double> dp;
    for (std::size_t i = 1; i <= ws.window; ++i) {
      lp.push_back(ws.lambda(i));
      dp.push_back(ws.d(i));
    }
    run_nondec(ws, globals, lp, dp, "chain");
    return finish(ws, "nondec");
  });
}

ConstructionResult limalpha_construct(const EntryOracle& oracle, const SequenceSpec& lambda, const SequenceSpec& d,
                                      const ConstructOptions& options) {
  return staged("limalpha", [&] {
    Workspace ws(oracle, lambda, d, options);
    run_limalpha(ws, 0, ws.lambda, ws.d, d.alpha, d.above_from);
    return finish(ws, "limalpha");
  });
}

ConstructionResult tonondec_construct(const EntryOracle& oracle, const SequenceSpec& lambda, const SequenceSpec& d,
                                      const ConstructOptions& options) {
  return staged("tonondec", [&] {
    Workspace ws(oracle, lambda, d, options);
    run_tonondec(ws, 0, ws.lambda, ws.d, d.alpha, options.guard);
    return finish(ws, "tonondec");
  });
}

ConstructionResult d2d_dispatch(const EntryOracle& oracle, const SequenceSpec& lambda, const SequenceSpec& d,
                                const ConstructOptions& options) {
  return staged("dispatch", [&] {
    Workspace ws(oracle, lambda, d, options);
    require_weak(ws);
    require_diagonal(ws);
    TailRegime regime = d.regime != TailRegime::ExplicitOnly ? d.regime : lambda.regime;
    const DeltaProfile profile = delta_profile(ws.lambda, ws.d, ws.window);
    if (regime == TailRegime::ExplicitOnly) {
      bool all_zero = true;
      for (std::size_t k = 1; k <= ws.window; ++k) {
        all_zero = all_zero && profile.is_zero(k);
      }
      if (!all_zero) {
        throw DomainError("unhandled regime: declare the tail behaviour of the partial sums");
      }
      regime = TailRegime::ZerosInfinitelyOften;
    }
    ws.params["regime"] = std::string(regime_name(regime));
    const std::size_t W = ws.window;
    switch (regime) {
    case TailRegime::ZerosInfinitelyOften: {
      const auto red = reduce_view(ws.lambda, ws.d, regime);
      run_reduced_blocks(ws, red, ws.d, 0);
      return finish(ws, "ZerosInfinitelyOften");
    }
    case TailRegime::PointwiseDominated: {
      std::vector<std::size_t> globals(W);
      std::iota(globals.begin(), globals.end(), 1);
      std::vector<double> lp;
      std::vector<double> dp;
      for (std::size_t i = 1; i <= W; ++i) {
        lp.push_back(ws.lambda(i));
        dp.push_back(ws.d(i));
      }
      run_nondec(ws, globals, lp, dp, "chain");
      return finish(ws, "PointwiseDominated");
    }
    case TailRegime::ConservationOfMass:
      run_conservation(ws, 0, ws.lambda, ws.d, "d", 1);
      return finish(ws, "ConservationOfMass");
    case TailRegime::EventuallyAbove:
    case TailRegime::DipsInfinitelyOften: {
      const auto red = reduce_view(ws.lambda, ws.d, regime);
      run_reduced_blocks(ws, red, ws.d, 0);
      if (auto s = suffix_of(red, W)) {
        const std::size_t len = W - *s + 1;
        const std::size_t off = *s - 1;
        std::optional<std::size_t> M;
        if (d.above_from) {
          M = *d.above_from > off ? *d.above_from - off : 1;
        }
        if (regime == TailRegime::EventuallyAbove) {
          run_limalpha(ws, off, slice(ws.lambda, *s, len), slice(ws.d, *s, len), d.alpha, M);
        } else {
          run_tonondec(ws, off, slice(ws.lambda, *s, len), slice(ws.d, *s, len), d.alpha, options.guard);
        }
      }
      return finish(ws, regime == TailRegime::EventuallyAbove ? "EventuallyAbove" : "DipsInfinitelyOften");
    }
    default:
      throw DomainError("unhandled regime " + std::string(regime_name(regime)));
    }
  });
}

MajorizationVerdict replay_transforms(const ConstructionResult& result) {
  std::map<std::string, SequenceSpec> seqs;
  seqs["lambda"] = result.lambda;
  seqs["d"] = result.d;
  auto fail = [](const std::string& why) {
    MajorizationVerdict v;
    v.ok = false;
    v.reason = why;
    return v;
  };
  try {
    for (const TransformRecord& r : result.transforms) {
      const auto in_it = seqs.find(r.input);
      const auto lam_it = seqs.find(r.params.at("lambda").get<std::string>());
      if (in_it == seqs.end() || lam_it == seqs.end()) {
        return fail("transform " + r.name + " refers to an unknown sequence");
      }
      const std::size_t len = r.params.at("length").get<std::size_t>();
      const SequenceSpec in = slice(in_it->second, r.params.at("input_from").get<std::size_t>(), len);
      const SequenceSpec lam = slice(lam_it->second, r.params.at("lambda_from").get<std::size_t>(), len);
      SequenceSpec out;
      if (r.name == "flat_prefix") {
        out = flat_prefix_transform(lam, in, r.params.at("N").get<std::size_t>());
      } else if (r.name == "splice") {
        const auto positions = r.params.at("positions").get<std::vector<std::size_t>>();
        out = in.select(positions);
      } else if (r.name == "averaged_interpolant") {
        const auto records = r.params.at("records").get<std::vector<std::size_t>>();
        SequenceSpec full_in = in_it->second;
        SequenceSpec full_lam = lam_it->second;
        out = averaged_interpolant(full_lam, full_in, records);
      } else if (r.name == "limalpha_shift") {
        out = limalpha_shift(lam, in, r.params.at("alpha").get<double>(), r.params.at("N").get<std::size_t>());
      } else if (r.name == "tonondec") {
        const auto minima = r.params.at("minima").get<std::vector<std::size_t>>();
        out = tonondec_transform(lam, in, minima);
      } else {
        return fail("unknown transform " + r.name);
      }
      if (out.size() != r.result.size()) {
        return fail("transform " + r.name + " length differs on replay");
      }
      for (std::size_t i = 1; i <= out.size(); ++i) {
        if (out.hi(i) != r.result.hi(i) || out.lo(i) != r.result.lo(i)) {
          MajorizationVerdict v = fail("transform " + r.name + " differs on replay");
          v.first_violation = i;
          return v;
        }
      }
      seqs[r.output] = out;
    }
  } catch (const std::exception& e) {
    return fail(std::string("replay failed: ") + e.what());
  }
  for (const ConstructedVector& c : result.constructed) {
    if (c.index == 0 || c.index > result.d.size() || c.target != result.d(c.index)) {
      MajorizationVerdict v = fail("constructed target differs from d");
      v.first_violation = c.index;
      return v;
    }
  }
  return {};
}

} // namespace carpenter
