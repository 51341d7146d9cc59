#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "model/config.hpp"

namespace vfn::verify {

enum class Level { fast, full };

Level level_from_string(const std::string& s);

/// Deliberate defects for exercising the oracles: each flag corrupts one
/// computation so the corresponding property must fail. All off in
/// normal operation.
struct FaultInjection {
  bool transpose_wb = false;  // vector_field consumes its second mixer transposed

  bool any() const { return transpose_wb; }
};

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::string detail;  // worst deviation, counterexample, or brief stat
};

/// Runs the property suite at the given level. Deterministic: internal
/// seeds are fixed. The model-level properties (dense-layer agreement,
/// rigid-motion invariance) use `base` when given, so the suite can
/// gate arbitrary width and depth choices; operator-level properties
/// randomize their own dimensions regardless.
std::vector<PropertyResult> run_properties(
    Level level, const FaultInjection& faults = {},
    const std::optional<model::ModelConfig>& base = std::nullopt);

/// Prints one pass/fail line per property plus a failure summary.
/// Returns true when everything passed.
bool report(std::ostream& out, const std::vector<PropertyResult>& results);

}  // namespace vfn::verify
