#pragma once

#include "carpenter/moves.hpp"
#include "carpenter/operators.hpp"
#include "carpenter/sequences.hpp"

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace carpenter {

/// Moves `amount` of diagonal mass from position `from` to position `to`
/// (1-based positions in the block).
struct Transfer {
  std::size_t from = 0;
  std::size_t to = 0;
  double amount = 0.0;
  bool finishes_from = true; // the transfer exhausts the surplus (else it fills the deficit)
};

struct TransferPlan {
  std::vector<Transfer> transfers;
  std::vector<double> start;  // current diagonal, block order
  std::vector<double> target; // requested diagonal, block order
  /// final_value[i] is the value position i holds after the transfers; a
  /// permutation of `target` that the relabeling step puts in place.
  std::vector<double> final_value;
};

/// Greedy T-transform plan turning `dtilde` into a rearrangement of `d`.
/// Requires {d} majorized by {dtilde}.
TransferPlan robin_hood_plan(const std::vector<double>& dtilde, const std::vector<double>& d);

/// Compression of the operator to a finite family of vectors.
struct BlockCompression {
  std::vector<std::string> ids;
  std::size_t n = 0;
  std::vector<double> entries; // row-major n x n

  double at(std::size_t i, std::size_t j) const { return entries[(i - 1) * n + (j - 1)]; }
  std::vector<double> diagonal() const;
};

BlockCompression compress(const EntryOracle& oracle, const std::vector<FrameVector>& vectors);

struct BlockRun {
  std::vector<FrameVector> vectors; // same order and ids as the input
  MoveLog log;
  TransferPlan plan;
};

/// Rotates an orthonormal family so that its diagonal becomes `d`, keeping the span.
BlockRun realize_block(const EntryOracle& oracle, const std::vector<FrameVector>& vectors,
                       const std::vector<double>& d, const std::string& log_id);

/// Applies realize_block to each block of slot indices. `slots` maps a global
/// index to the vector currently held there; vectors outside the blocks are untouched.
std::vector<MoveLog> block_apply(const EntryOracle& oracle, const std::vector<Block>& blocks,
                                 std::map<std::size_t, FrameVector>& slots,
                                 const std::vector<std::vector<double>>& targets,
                                 const std::string& log_prefix);

/// Realizes d as the diagonal of diag(lambda) in the frame f_1..f_n.
BlockRun eigen_to_diagonal(const std::vector<double>& lambda, const std::vector<double>& d);

} // namespace carpenter
