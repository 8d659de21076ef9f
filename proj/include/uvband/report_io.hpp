#pragma once

#include "uvband/analysis.hpp"
#include "uvband/lattice.hpp"
#include "uvband/simulate.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace uvband {

using json = nlohmann::json;

// JSON fragments shared by every report payload. Reports deliberately carry
// no timestamps: identical config + seed must serialize byte-identically.
json band_to_json(const MeasureBand& band);
json payoff_to_json(const Payoff& payoff);
json scheme_estimates_to_json(std::span<const SchemeEstimate> estimates);

json hedge_report_to_json(const HedgeReport& report);
json duality_report_to_json(const DualityReport& report);
json capacity_to_json(const CapacityEstimate& estimate);
json markov_to_json(const MarkovCheckReport& report);
json axioms_to_json(const CapacityAxiomReport& report);
json convergence_to_json(const ConvergenceReport& report);
json qv_sweep_to_json(const QvApproxSweep& sweep);

/// Canonical serialization used for files and stdout: 2-space indent,
/// sorted keys (nlohmann objects are ordered maps), trailing newline.
std::string to_canonical_json(const json& payload);

/// Human-oriented aligned-column rendering of a report payload.
std::string to_text_report(const json& payload);

// CSV exports.
void write_surface_csv(std::ostream& os, const ValueSurface& surface, const Policy& policy,
                       const HedgeStrategy& delta);
void write_shortfall_histogram_csv(std::ostream& os, const HedgeReport& report, int bins);

} // namespace uvband
