#pragma once

#include "uvband/band.hpp"
#include "uvband/payoff.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace uvband {

/// Flat, line-oriented `key = value` run configuration with one section per
/// subcommand plus [band] and [payoff]. Unknown sections or keys are
/// rejected; see docs/config-format.md.
class ConfigFile {
  public:
    static ConfigFile parse_text(const std::string& text, const std::string& origin = "<text>");
    static ConfigFile parse_file(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;

    /// Typed getters; every failure names section.key.
    std::string get_string(const std::string& section, const std::string& key,
                           std::optional<std::string> fallback = std::nullopt) const;
    double get_number(const std::string& section, const std::string& key, double lo, double hi,
                      std::optional<double> fallback = std::nullopt) const;
    long get_integer(const std::string& section, const std::string& key, long lo, long hi,
                     std::optional<long> fallback = std::nullopt) const;
    bool get_bool(const std::string& section, const std::string& key,
                  std::optional<bool> fallback = std::nullopt) const;
    std::vector<double> get_number_list(const std::string& section, const std::string& key,
                                        std::optional<std::vector<double>> fallback
                                        = std::nullopt) const;

    /// Rejects keys that were never read and sections that are not allowed.
    void finish(const std::set<std::string>& allowed_sections) const;

    const std::string& raw_text() const { return raw_; }

    /// Resolved key/value echo (only keys that were read), for provenance.
    std::map<std::string, std::string> consumed_echo() const;

  private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
    mutable std::set<std::string> consumed_;
    std::string raw_;
    std::string origin_;

    const std::string* find(const std::string& section, const std::string& key) const;
};

/// Builds the measure band described by the [band] section.
MeasureBand band_from_config(const ConfigFile& config);

/// Builds the payoff described by the [payoff] section.
Payoff payoff_from_config(const ConfigFile& config);

} // namespace uvband
