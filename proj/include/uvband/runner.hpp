#pragma once

#include "uvband/config.hpp"
#include "uvband/report_io.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace uvband {

inline constexpr std::string_view kVersion = "0.1.0";

struct RunOverrides {
    std::optional<std::uint64_t> seed;
};

struct OutputFile {
    std::string name;
    std::string content;
};

struct RunOutput {
    json report;                   // deterministic payload, no timestamps
    std::vector<OutputFile> files; // optional CSV exports
    int exit_hint = 0;             // nonzero for numerical inconsistencies
};

/// Executes one subcommand (price | hedge | duality | capacity | qv |
/// converge) against a parsed config. Throws the uvband error types for
/// validation / io problems; numerical inconsistencies are reported in the
/// payload and via exit_hint so the report still reaches disk.
RunOutput run_subcommand(const std::string& subcommand, const ConfigFile& config,
                         const RunOverrides& overrides = {});

/// Flat CSV rendering of the report's primary table (results.table).
std::string primary_table_csv(const json& report);

} // namespace uvband
