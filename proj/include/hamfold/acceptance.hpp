#pragma once

// The ten acceptance criteria as executable checks. Each produces a pass
// flag, a one-line summary and a JSON record of every measured quantity.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hamfold/report.hpp"

namespace hamfold::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string summary;
  report::Json data;
};

struct Settings {
  std::uint64_t seed = 42;
  bool keep_going = false;            // otherwise stop at the first failure
  std::vector<int> only;              // empty: all ten
  std::optional<std::string> cli;     // criterion 10 runs this binary twice when set
  std::string scratch_dir = ".";      // for the CLI runs of criterion 10
};

struct Report {
  std::uint64_t seed = 0;
  std::vector<CriterionResult> results;
  std::optional<int> stopped_at;
  bool all_pass() const;
};

constexpr int criterion_count = 10;
const char* criterion_name(int id);

CriterionResult run_criterion(int id, const Settings& settings);

/// Runs the selected criteria in order. `on_result` sees each result as soon
/// as it is available.
Report run(const Settings& settings, const std::function<void(const CriterionResult&)>& on_result = {});

report::Json to_json(const Report& r);

/// "PASS criterion 3 (singular nongauge): ..." on one line.
std::string line(const CriterionResult& r);

}  // namespace hamfold::acceptance
