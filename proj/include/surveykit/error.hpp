// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace surveykit {

enum class ErrorCode {
  unknown_category,
  missing_cell,
  negative_weight,
  schema_mismatch,
  all_zero_weights,
  invalid_marginal,
  bad_variable_index,
  length_mismatch,
  dimension_mismatch,
  not_psd,
  degenerate_data,
  non_finite_loss,
  diverged,
  all_equal_scores,
  too_few_items,
  single_cluster,
  infeasible_domains,
  budget_infeasible,
  oversized_sample,
  retry_exhausted,
  invalid_size_measure,
  empty_stratum_sample,
  zero_inclusion_probability,
  non_convergence,
  parse_error,
  io_error,
  invalid_argument,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::unknown_category: return "UnknownCategory";
    case ErrorCode::missing_cell: return "MissingCell";
    case ErrorCode::negative_weight: return "NegativeWeight";
    case ErrorCode::schema_mismatch: return "SchemaMismatch";
    case ErrorCode::all_zero_weights: return "AllZeroWeights";
    case ErrorCode::invalid_marginal: return "InvalidMarginal";
    case ErrorCode::bad_variable_index: return "BadVariableIndex";
    case ErrorCode::length_mismatch: return "LengthMismatch";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::not_psd: return "NotPSD";
    case ErrorCode::degenerate_data: return "DegenerateData";
    case ErrorCode::non_finite_loss: return "NonFiniteLoss";
    case ErrorCode::diverged: return "Diverged";
    case ErrorCode::all_equal_scores: return "AllEqualScores";
    case ErrorCode::too_few_items: return "TooFewItems";
    case ErrorCode::single_cluster: return "SingleCluster";
    case ErrorCode::infeasible_domains: return "InfeasibleDomains";
    case ErrorCode::budget_infeasible: return "BudgetInfeasible";
    case ErrorCode::oversized_sample: return "OversizedSample";
    case ErrorCode::retry_exhausted: return "RetryExhausted";
    case ErrorCode::invalid_size_measure: return "InvalidSizeMeasure";
    case ErrorCode::empty_stratum_sample: return "EmptyStratumSample";
    case ErrorCode::zero_inclusion_probability: return "ZeroInclusionProbability";
    case ErrorCode::non_convergence: return "NonConvergence";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::invalid_argument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace surveykit
