#pragma once

#include "carpenter/frame_vector.hpp"
#include "carpenter/operators.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace carpenter {

/// Solution of the 2x2 diagonal-fixing problem.
struct TwoByTwoSolution {
  double alpha = 1.0;      // weight of the first vector
  double complement = 0.0; // 1 - alpha, carried separately for accuracy near 1
  int sign = -1;           // sign attached to the second vector
};

/// Finds alpha in [0, 1] and a sign with
///   alpha * dt1 + (1 - alpha) * dt2 + 2 * sign * sqrt(alpha (1 - alpha)) * beta = d1,
/// given the compressed diagonal (dt1, dt2) and off-diagonal beta, and
/// d1 between dt1 and dt2. Throws BracketingError otherwise. The sign is -1
/// whenever the cross term vanishes (beta = 0 or d1 = dt1).
TwoByTwoSolution solve_two_by_two(double dt1, double dt2, double beta, double d1);

struct PairResult {
  FrameVector e;      // sqrt(alpha) u + sign sqrt(1 - alpha) v
  FrameVector etilde; // sqrt(1 - alpha) u - sign sqrt(alpha) v
};

PairResult apply_pair_move(const FrameVector& u, const FrameVector& v, double alpha, int sign);
PairResult apply_pair_move(const FrameVector& u, const FrameVector& v, const TwoByTwoSolution& s);

/// One recorded move: the vectors named left_id and right_id are replaced by
/// e and etilde respectively.
struct PairMove {
  std::string left_id;
  std::string right_id;
  double alpha = 1.0;
  double complement = 0.0;
  int sign = 1;
  double beta = 0.0;
  double target = 0.0;
  double achieved = 0.0;
  bool renormalized = false;
  bool near_degenerate = false;
};

struct MoveLog {
  std::string id;
  std::vector<PairMove> moves;
};

/// Solves, applies and records one move in place: `left` receives the vector
/// with diagonal `target`, `right` its orthogonal companion. `step` (1-based)
/// is reported on bracketing failures.
PairMove execute_move(const EntryOracle& oracle, FrameVector& left, FrameVector& right, double target,
                      std::size_t step);

/// Relabeling step: swaps the vectors named a and b.
PairMove swap_move(const std::string& a, const std::string& b);

struct ChainRun {
  std::vector<FrameVector> outputs; // outputs[k] has diagonal targets[k]
  FrameVector pending;              // last etilde; still in the frame
  std::vector<double> pending_values; // Rayleigh value of pending after each step
  MoveLog log;
};

/// Chain of 2x2 moves: the pending vector (initially `start`) is rotated with
/// feeds[k] to produce a vector of diagonal targets[k]. Slot names: the
/// pending vector lives in `start.id()`, feeds in their own ids.
/// Runs targets.size() steps; more than max_steps targets is an error.
ChainRun chain_execute(const EntryOracle& oracle, const FrameVector& start,
                       const std::vector<FrameVector>& feeds, const std::vector<double>& targets,
                       std::size_t max_steps, const std::string& log_id);

/// Convenience overload: start and feeds are the unit vectors f_i, named s<i>.
ChainRun chain_execute(const EntryOracle& oracle, std::size_t start,
                       const std::vector<std::size_t>& feeds, const std::vector<double>& targets,
                       std::size_t max_steps, const std::string& log_id);

struct CompletenessDiagnostics {
  std::vector<double> products; // prod_{i <= k} (1 - alpha_i)
  std::vector<double> sums;     // sum_{i <= k} alpha_i / (1 - alpha_i)
  std::vector<std::size_t> unit_alpha_steps; // 1-based steps with alpha == 1
  bool bound_ok = true;         // sums[k] <= 1 / products[k] within rounding
};

CompletenessDiagnostics completeness_diagnostics(const MoveLog& log);

/// Replays moves on a named family of vectors (all ids must be present).
void replay(std::map<std::string, FrameVector>& family, const MoveLog& log);

/// Slot name used for f_i in every construction.
std::string slot_id(std::size_t index);

} // namespace carpenter
