#pragma once

// JSON serialization of validation, canonical, stability and simulation
// results. Key names are part of the tool's stable output contract.

#include <json.hpp>

#include "lyacanon/pipeline.hpp"

namespace lyacanon {

using Json = nlohmann::ordered_json;

Json to_json(const Binding& b);
Json validation_report(const SystemDef& s, const ParamPoint& xi, const IntegralValidation& v);

/// stages[k].phi, rhs_canon[i], forward_map[i], inverse_map[i],
/// flatness[i].max_abs, round_trip, convergence.
Json canonical_report(const CanonicalSystem& cs, const CanonicalChecks& checks);

/// components[i].rank/.parity/.sign/.amap.violations, lyapunov.min_V /
/// .max_dVdt, scan.per_curve[] / .per_system[] / .inclusion.
Json stability_report(const StabilityReport& rep, const LyapunovSpec& spec);

Json simulation_report(const SimulationReport& rep);

}  // namespace lyacanon
