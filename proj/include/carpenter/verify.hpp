#pragma once

#include "carpenter/construct.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace carpenter {

struct Tolerances {
  double gram = 1e-9;
  double diag = 1e-9;
  double ledger = 1e-8; // multiplied by the ledger scale
};

struct VectorDeviation {
  std::string id;
  std::size_t slot = 0;
  double target = 0.0;
  double achieved = 0.0;
  double dev = 0.0;
};

struct DefectRow {
  std::size_t j = 0;
  double defect = 1.0;
  std::optional<double> closed_form; // product of complements, single-chain results only
};

struct LedgerTotals {
  double constructed = 0.0; // sum of recomputed Rayleigh values
  double residual = 0.0;
  double consumed = 0.0; // sum of oracle diagonal entries over consumed slots
  double scale = 1.0;
  double deviation = 0.0;
};

struct VerificationReport {
  double gram_max_dev = 0.0;
  double diag_max_dev = 0.0;
  std::vector<VectorDeviation> per_vector;
  std::vector<DefectRow> defect_table;
  LedgerTotals ledger;
  double ledger_dev = 0.0;
  Tolerances tolerances;
  bool pass = false;
};

/// max |<e_i, e_j> - delta_ij| over all pairs.
double gram_check(const std::vector<FrameVector>& vectors);

/// Recomputes every constructed Rayleigh value from its coefficients.
std::vector<VectorDeviation> diagonal_check(const EntryOracle& oracle, const ConstructionResult& result);

/// 1 - sum_i |<f_j, e_i>|^2 over the constructed vectors, for j = 1..J.
std::vector<DefectRow> completeness_defect(const ConstructionResult& result, std::size_t J);

LedgerTotals ledger_check(const EntryOracle& oracle, const ConstructionResult& result);

VerificationReport verify(const EntryOracle& oracle, const ConstructionResult& result, const Tolerances& tol = {});

/// Every constructed and residual vector, in slot order.
std::vector<FrameVector> result_vectors(const ConstructionResult& result);

/// Rebuilds the vectors of `result` by replaying its logs on the unit frame.
void rebuild_from_logs(ConstructionResult& result);

struct Injection {
  std::string kind; // "sign" or "alpha"
  std::string target; // vector id or "log:step"
  std::size_t frame_index = 0;
  double before = 0.0;
  double after = 0.0;
};

/// Flips the sign of one coefficient that some other vector shares, chosen by `seed`.
Injection inject_sign_flip(ConstructionResult& result, std::uint64_t seed);

/// Moves one recorded alpha by 1e-3 (towards the interior) and replays the logs.
Injection inject_alpha_perturbation(ConstructionResult& result, std::uint64_t seed, double delta = 1e-3);

} // namespace carpenter
