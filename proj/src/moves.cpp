#include "carpenter/moves.hpp"

#include "carpenter/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace carpenter {

TwoByTwoSolution solve_two_by_two(double dt1, double dt2, double beta, double d1) {
  if (!std::isfinite(dt1) || !std::isfinite(dt2) || !std::isfinite(beta) || !std::isfinite(d1)) {
    throw DomainError("2x2 move needs finite data");
  }
  const double tol = 1e-12 * std::max({1.0, std::abs(dt1), std::abs(dt2)});
  const double lo = std::min(dt1, dt2);
  const double hi = std::max(dt1, dt2);
  if (d1 < lo - tol || d1 > hi + tol) {
    throw BracketingError(0, dt1, dt2, d1);
  }
  d1 = std::clamp(d1, lo, hi);
  if (d1 == dt1) {
    return {1.0, 0.0, -1};
  }
  // d1 != dt1 here, so dt1 != dt2.
  const double span = dt2 - dt1;
  const double alpha0 = (dt2 - d1) / span;
  const double complement0 = (d1 - dt1) / span;
  if (beta == 0.0) {
    return {alpha0, complement0, -1};
  }
  // Bisect on the angle phi with alpha = cos^2 phi. G(0) = dt1 lies on one side
  // of d1; at the beta-free solution phi0 the cross term pushes G past d1.
  const double sigma = d1 > dt1 ? 1.0 : -1.0;
  const double b = std::abs(beta);
  auto excess = [&](double phi) {
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    return c * c * dt1 + s * s * dt2 + 2.0 * sigma * b * c * s - d1;
  };
  double left = 0.0;
  double right = std::atan2(std::sqrt(complement0), std::sqrt(alpha0));
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (left + right);
    if (mid <= left || mid >= right) {
      break;
    }
    if (sigma * excess(mid) < 0.0) {
      left = mid;
    } else {
      right = mid;
    }
  }
  const double phi = 0.5 * (left + right);
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  const int sign = (beta > 0.0) == (sigma > 0.0) ? 1 : -1;
  return {c * c, s * s, sign};
}

PairResult apply_pair_move(const FrameVector& u, const FrameVector& v, const TwoByTwoSolution& sol) {
  const double a = std::sqrt(sol.alpha);
  const double b = std::sqrt(sol.complement);
  const double sg = sol.sign >= 0 ? 1.0 : -1.0;
  return {FrameVector::combine(a, u, sg * b, v, u.id()), FrameVector::combine(b, u, -sg * a, v, v.id())};
}

PairResult apply_pair_move(const FrameVector& u, const FrameVector& v, double alpha, int sign) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw DomainError("move weight must lie in [0, 1]");
  }
  if (std::abs(u.norm() - 1.0) > 1e-10 || std::abs(v.norm() - 1.0) > 1e-10 || std::abs(dot(u, v)) > 1e-10) {
    throw DomainError("pair move needs an orthonormal pair");
  }
  return apply_pair_move(u, v, TwoByTwoSolution{alpha, 1.0 - alpha, sign});
}

PairMove swap_move(const std::string& a, const std::string& b) {
  PairMove m;
  m.left_id = a;
  m.right_id = b;
  m.alpha = 0.0;
  m.complement = 1.0;
  m.sign = 1;
  return m;
}

std::string slot_id(std::size_t index) {
  return "s" + std::to_string(index);
}

namespace {

void renormalize(FrameVector& v) {
  const double n = v.norm();
  if (n > 0.0) {
    v.scale(1.0 / n);
  }
}

bool needs_renormalization(const FrameVector& v) {
  return std::abs(v.norm() - 1.0) > 1e-12;
}

} // namespace

PairMove execute_move(const EntryOracle& oracle, FrameVector& left, FrameVector& right, double target,
                      std::size_t step) {
  const double dt1 = rayleigh(oracle, left);
  const double dt2 = rayleigh(oracle, right);
  const double beta = compressed_entry(oracle, left, right);
  TwoByTwoSolution sol;
  try {
    sol = solve_two_by_two(dt1, dt2, beta, target);
  } catch (const BracketingError&) {
    throw BracketingError(step, dt1, dt2, target);
  }
  auto [e, etilde] = apply_pair_move(left, right, sol);
  PairMove move;
  move.left_id = left.id();
  move.right_id = right.id();
  move.alpha = sol.alpha;
  move.complement = sol.complement;
  move.sign = sol.sign;
  move.beta = beta;
  move.target = target;
  move.achieved = rayleigh(oracle, e);
  move.near_degenerate = sol.complement < 1e-12 && target != dt1;
  if (needs_renormalization(etilde)) {
    renormalize(etilde);
    move.renormalized = true;
  }
  left = std::move(e);
  right = std::move(etilde);
  return move;
}

ChainRun chain_execute(const EntryOracle& oracle, const FrameVector& start,
                       const std::vector<FrameVector>& feeds, const std::vector<double>& targets,
                       std::size_t max_steps, const std::string& log_id) {
  if (feeds.size() < targets.size()) {
    throw DomainError("chain has fewer feed vectors than targets");
  }
  if (targets.size() > max_steps) {
    throw DomainError("chain needs " + std::to_string(targets.size()) + " steps, max_steps is " +
                      std::to_string(max_steps));
  }
  ChainRun run;
  run.log.id = log_id;
  run.pending = start;
  run.outputs.reserve(targets.size());
  for (std::size_t k = 0; k < targets.size(); ++k) {
    FrameVector left = run.pending;
    FrameVector right = feeds[k];
    run.log.moves.push_back(execute_move(oracle, left, right, targets[k], k + 1));
    run.outputs.push_back(std::move(left));
    run.pending = std::move(right);
    run.pending_values.push_back(rayleigh(oracle, run.pending));
  }
  return run;
}

ChainRun chain_execute(const EntryOracle& oracle, std::size_t start,
                       const std::vector<std::size_t>& feeds, const std::vector<double>& targets,
                       std::size_t max_steps, const std::string& log_id) {
  std::vector<FrameVector> feed_vectors;
  feed_vectors.reserve(feeds.size());
  for (std::size_t i : feeds) {
    feed_vectors.push_back(FrameVector::unit(i, slot_id(i)));
  }
  return chain_execute(oracle, FrameVector::unit(start, slot_id(start)), feed_vectors, targets,
                       max_steps, log_id);
}

CompletenessDiagnostics completeness_diagnostics(const MoveLog& log) {
  CompletenessDiagnostics out;
  double product = 1.0;
  double sum = 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < log.moves.size(); ++k) {
    const PairMove& m = log.moves[k];
    product *= m.complement;
    if (m.complement == 0.0) {
      out.unit_alpha_steps.push_back(k + 1);
      sum = inf;
    } else {
      sum += m.alpha / m.complement;
    }
    out.products.push_back(product);
    out.sums.push_back(sum);
    if (product > 0.0 && std::isfinite(sum) && sum > (1.0 / product) * (1.0 + 1e-12)) {
      out.bound_ok = false;
    }
  }
  return out;
}

void replay(std::map<std::string, FrameVector>& family, const MoveLog& log) {
  for (const PairMove& m : log.moves) {
    auto left = family.find(m.left_id);
    auto right = family.find(m.right_id);
    if (left == family.end() || right == family.end()) {
      throw FormatError("move log " + log.id + " refers to unknown vector " +
                        (left == family.end() ? m.left_id : m.right_id));
    }
    auto [e, etilde] = apply_pair_move(left->second, right->second,
                                       TwoByTwoSolution{m.alpha, m.complement, m.sign});
    if (m.renormalized) {
      renormalize(etilde);
    }
    e.set_id(m.left_id);
    etilde.set_id(m.right_id);
    left->second = std::move(e);
    right->second = std::move(etilde);
  }
}

} // namespace carpenter
