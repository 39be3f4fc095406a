#pragma once

// End-to-end reproduction of the bundled example with a pass/fail summary
// per acceptance criterion.

#include <string>
#include <vector>

#include "lyacanon/pipeline.hpp"

namespace lyacanon {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct ReproResult {
  SystemDef system;
  CanonicalSystem canonical;
  IntegralValidation validation;
  CanonicalChecks checks;
  StabilityReport stability;
  SimulationReport simulation;
  std::vector<CriterionResult> criteria;
  bool loosened = false;
  bool ok = false;
  /// First failing criterion, empty when all pass.
  std::string first_failure;
};

/// Runs validate, canonize, stability and simulate on the bundled example.
/// With loosened tolerances the trajectory thresholds relax to 1e-3.
ReproResult reproduce_example(const PipelineConfig& cfg);

}  // namespace lyacanon
