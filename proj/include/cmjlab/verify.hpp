#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cmjlab {

inline constexpr const char* kVersion = "0.1.0";

/// One checked claim. `statistic` is compared against `budget` according to
/// `comparison` ("<=" or ">="); interval checks are split into two results.
struct TestResult {
  std::string name;
  int criterion = 0;
  double statistic = 0.0;
  std::optional<double> p_value;
  double n_eff = 0.0;
  double budget = 0.0;
  std::string comparison = "<=";
  bool pass = false;
  bool gating = true;
  std::string detail;
};

struct VerifyConfig {
  std::uint64_t seed = 42;
  bool quick = false;
};

struct RunManifest {
  VerifyConfig config;
  std::vector<TestResult> results;

  std::size_t failures() const;  // gating results that did not pass
  bool passed() const { return failures() == 0; }
};

/// Runs every acceptance check. The worker count is taken from the current
/// OpenMP setting and never influences the results.
RunManifest verify_suite(const VerifyConfig& config,
                         const std::function<void(const TestResult&)>& on_result = {});

/// Deterministic JSON rendering (no timings, no worker count).
std::string manifest_json(const RunManifest& manifest);

/// One human-readable line per result.
std::string result_line(const TestResult& r);

/// Seed of a named sub-experiment, derived from the master seed.
std::uint64_t experiment_seed(std::uint64_t master_seed, const std::string& name);

}  // namespace cmjlab
