#pragma once

#include "carpenter/moves.hpp"
#include "carpenter/operators.hpp"
#include "carpenter/schur_horn.hpp"
#include "carpenter/sequences.hpp"

#include <json.hpp>

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace carpenter {

struct ConstructOptions {
  std::size_t window = 0;        // 0: largest window the inputs and oracle allow
  std::size_t max_steps = 1u << 20; // moves per chain
  std::optional<std::size_t> guard; // tail-minimum guard; default max(1, W / 16)
  std::size_t chain_cap = 16;
};

struct ConstructedVector {
  std::size_t index = 0;
  FrameVector vec;
  double target = 0.0;
};

struct ResidualVector {
  std::size_t slot = 0;
  FrameVector vec;
  double value = 0.0;
  std::string chain;
};

struct ChainRecord {
  std::string id;
  std::vector<std::size_t> indices; // global i_k
  std::vector<double> x;            // x_{i_k}
  std::vector<double> alpha_tilde;  // lower bounds for the solved alphas
};

/// A named sequence transform. `input` and `output` name sequences in the
/// replay namespace ("lambda" and "d" are the inputs); `offset` places the
/// view at global indices offset+1, offset+2, ...
struct TransformRecord {
  std::string name;
  std::string input;
  std::string output;
  std::size_t offset = 0;
  nlohmann::json params;
  SequenceSpec result;
};

struct ConstructionResult {
  std::string route;
  nlohmann::json parameters = nlohmann::json::object();
  std::size_t window = 0;
  SequenceSpec lambda; // window prefixes of the inputs
  SequenceSpec d;
  std::vector<ConstructedVector> constructed;
  std::vector<ResidualVector> residuals;
  std::vector<std::size_t> untouched;
  std::vector<std::size_t> consumed;
  std::vector<MoveLog> logs; // execution order
  std::vector<TransformRecord> transforms;
  std::vector<ChainRecord> chains;
};

struct PrefixReduction {
  BlockPartition blocks;
  std::optional<std::size_t> suffix_start; // none when zeros are cofinal
};

/// Splits off the finite blocks ending at zeros of delta.
PrefixReduction reduce_prefix(const SequenceSpec& lambda, const SequenceSpec& d, const DeltaProfile& profile);

ConstructionResult decdel_construct(const EntryOracle& oracle, const SequenceSpec& lambda, const SequenceSpec& d,
                                    std::size_t steps);
ConstructionResult lim0_construct(const EntryOracle& oracle, const SequenceSpec& lambda, const SequenceSpec& d,
                                  const ConstructOptions& options = {});
ConstructionResult nondec_construct(const EntryOracle& oracle, const SequenceSpec& lambda, const SequenceSpec& d,
                                    const ConstructOptions& options = {});
ConstructionResult limalpha_construct(const EntryOracle& oracle, const SequenceSpec& lambda, const SequenceSpec& d,
                                      const ConstructOptions& options = {});
ConstructionResult tonondec_construct(const EntryOracle& oracle, const SequenceSpec& lambda, const SequenceSpec& d,
                                      const ConstructOptions& options = {});

/// Routes by the declared tail regime of d (falling back to lambda's).
ConstructionResult d2d_dispatch(const EntryOracle& oracle, const SequenceSpec& lambda, const SequenceSpec& d,
                                const ConstructOptions& options = {});

/// Recomputes every recorded transform from the inputs alone and checks that
/// the outputs and the final target assignment agree exactly.
MajorizationVerdict replay_transforms(const ConstructionResult& result);

} // namespace carpenter
