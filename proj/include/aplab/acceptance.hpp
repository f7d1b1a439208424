#pragma once

// The orthotropic/anisotropic acceptance suite: eleven numbered criteria,
// each a fixed experiment with pinned parameters and tolerances.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aplab/verify.hpp"

namespace aplab {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  /// One line with the decisive numbers.
  std::string summary;
  double seconds = 0.0;
  /// Underlying checks; negative controls carry "negative" in the name and
  /// are expected to report passed = false.
  std::vector<CheckReport> reports;
};

struct AcceptanceOptions {
  std::uint64_t seed = 20240611;
  /// Report files and tables are written here when set.
  std::optional<std::filesystem::path> out;
  /// Criteria to run; empty runs all.
  std::vector<int> only;
};

inline constexpr int kCriterionCount = 11;

const char* criterion_title(int id);

/// Runs one criterion.  Exceptions thrown by the experiment are caught and
/// turn into a failed result carrying the message.
CriterionResult run_criterion(int id, const AcceptanceOptions& opt = {});

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt = {});

/// "[PASS]  5 title: summary (12.3 s)"; the timing is left out when
/// timing is false so that written tables are reproducible.
std::string format_result(const CriterionResult& r, bool timing = true);
std::string summary_table(const std::vector<CriterionResult>& results, bool timing = true);

}  // namespace aplab
