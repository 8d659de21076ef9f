#include "uvband/config.hpp"

#include "uvband/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace uvband {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a])))
        ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1])))
        --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(s);
    while (std::getline(is, cell, sep))
        out.push_back(trim(cell));
    return out;
}

} // namespace

ConfigFile ConfigFile::parse_text(const std::string& text, const std::string& origin) {
    ConfigFile config;
    config.raw_ = text;
    config.origin_ = origin;

    std::istringstream is(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';')
            continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty())
                throw ValidationError(origin + ":" + std::to_string(line_no) +
                                      ": empty section name");
            config.sections_[section];
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ValidationError(origin + ":" + std::to_string(line_no) +
                                  ": expected 'key = value', got \"" + t + "\"");
        if (section.empty())
            throw ValidationError(origin + ":" + std::to_string(line_no) +
                                  ": key outside any [section]");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ValidationError(origin + ":" + std::to_string(line_no) + ": empty key");
        auto& sect = config.sections_[section];
        if (sect.count(key))
            throw ValidationError(origin + ":" + std::to_string(line_no) + ": duplicate key " +
                                  section + "." + key);
        sect[key] = value;
    }
    return config;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_text(buffer.str(), path);
}

const std::string* ConfigFile::find(const std::string& section, const std::string& key) const {
    auto sit = sections_.find(section);
    if (sit == sections_.end())
        return nullptr;
    auto kit = sit->second.find(key);
    if (kit == sit->second.end())
        return nullptr;
    consumed_.insert(section + "." + key);
    return &kit->second;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    auto sit = sections_.find(section);
    return sit != sections_.end() && sit->second.count(key) > 0;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   std::optional<std::string> fallback) const {
    if (const std::string* v = find(section, key))
        return *v;
    if (fallback)
        return *fallback;
    throw ValidationError("missing required config key " + section + "." + key);
}

double ConfigFile::get_number(const std::string& section, const std::string& key, double lo,
                              double hi, std::optional<double> fallback) const {
    const std::string* v = find(section, key);
    if (!v) {
        if (fallback)
            return *fallback;
        throw ValidationError("missing required config key " + section + "." + key);
    }
    double x = 0.0;
    try {
        std::size_t used = 0;
        x = std::stod(*v, &used);
        if (used != v->size())
            throw std::invalid_argument("");
    } catch (const std::exception&) {
        throw ValidationError("config key " + section + "." + key + " is not a number: \"" +
                              *v + "\"");
    }
    if (!(x >= lo && x <= hi))
        throw ValidationError("config key " + section + "." + key + " = " + *v +
                              " is outside the documented range [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "]");
    return x;
}

long ConfigFile::get_integer(const std::string& section, const std::string& key, long lo, long hi,
                             std::optional<long> fallback) const {
    const std::string* v = find(section, key);
    if (!v) {
        if (fallback)
            return *fallback;
        throw ValidationError("missing required config key " + section + "." + key);
    }
    long x = 0;
    try {
        std::size_t used = 0;
        x = std::stol(*v, &used);
        if (used != v->size())
            throw std::invalid_argument("");
    } catch (const std::exception&) {
        throw ValidationError("config key " + section + "." + key + " is not an integer: \"" +
                              *v + "\"");
    }
    if (x < lo || x > hi)
        throw ValidationError("config key " + section + "." + key + " = " + *v +
                              " is outside the documented range [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "]");
    return x;
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          std::optional<bool> fallback) const {
    const std::string* v = find(section, key);
    if (!v) {
        if (fallback)
            return *fallback;
        throw ValidationError("missing required config key " + section + "." + key);
    }
    if (*v == "true" || *v == "yes" || *v == "1")
        return true;
    if (*v == "false" || *v == "no" || *v == "0")
        return false;
    throw ValidationError("config key " + section + "." + key + " must be true/false, got \"" +
                          *v + "\"");
}

std::vector<double> ConfigFile::get_number_list(const std::string& section,
                                                const std::string& key,
                                                std::optional<std::vector<double>> fallback) const {
    const std::string* v = find(section, key);
    if (!v) {
        if (fallback)
            return *fallback;
        throw ValidationError("missing required config key " + section + "." + key);
    }
    std::vector<double> out;
    for (const std::string& cell : split(*v, ',')) {
        if (cell.empty())
            continue;
        try {
            out.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw ValidationError("config key " + section + "." + key +
                                  " has a non-numeric entry: \"" + cell + "\"");
        }
    }
    if (out.empty())
        throw ValidationError("config key " + section + "." + key + " is an empty list");
    return out;
}

void ConfigFile::finish(const std::set<std::string>& allowed_sections) const {
    for (const auto& [section, keys] : sections_) {
        if (!allowed_sections.count(section))
            throw ValidationError("unknown config section [" + section + "]");
        for (const auto& [key, value] : keys) {
            if (!consumed_.count(section + "." + key))
                throw ValidationError("unknown config key " + section + "." + key);
        }
    }
}

std::map<std::string, std::string> ConfigFile::consumed_echo() const {
    std::map<std::string, std::string> echo;
    for (const auto& [section, keys] : sections_)
        for (const auto& [key, value] : keys)
            if (consumed_.count(section + "." + key))
                echo[section + "." + key] = value;
    return echo;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<Knot> parse_knots(const std::string& text, const std::string& where) {
    std::vector<Knot> knots;
    for (const std::string& cell : split(text, ',')) {
        if (cell.empty())
            continue;
        auto colon = cell.find(':');
        if (colon == std::string::npos)
            throw ValidationError("config key " + where + " expects 't:value' pairs, got \"" +
                                  cell + "\"");
        try {
            knots.push_back(
                {std::stod(cell.substr(0, colon)), std::stod(cell.substr(colon + 1))});
        } catch (const std::exception&) {
            throw ValidationError("config key " + where + " has a non-numeric knot: \"" + cell +
                                  "\"");
        }
    }
    if (knots.empty())
        throw ValidationError("config key " + where + " is an empty knot list");
    return knots;
}

} // namespace

MeasureBand band_from_config(const ConfigFile& config) {
    std::string kind = config.get_string("band", "kind", std::string("vol"));
    if (kind == "vol") {
        double horizon = config.get_number("band", "horizon", 1e-9, 1e4);
        double sigma_low = config.get_number("band", "sigma_low", 0.0, 1e3);
        double sigma_high = config.get_number("band", "sigma_high", 0.0, 1e3);
        if (sigma_low > sigma_high)
            throw ValidationError(
                "config keys band.sigma_low > band.sigma_high (" + std::to_string(sigma_low) +
                " > " + std::to_string(sigma_high) + ")");
        return make_vol_band(sigma_low, sigma_high, horizon);
    }
    if (kind == "knots") {
        auto lower = parse_knots(config.get_string("band", "lower_knots"), "band.lower_knots");
        auto upper = parse_knots(config.get_string("band", "upper_knots"), "band.upper_knots");
        double c = config.get_number("band", "holder_c", 1e-12, 1e6);
        double alpha = config.get_number("band", "holder_alpha", 1e-9, 1.0);
        return make_knot_band(std::move(lower), std::move(upper), c, alpha);
    }
    throw ValidationError("config key band.kind must be 'vol' or 'knots', got \"" + kind + "\"");
}

Payoff payoff_from_config(const ConfigFile& config) {
    std::string kind = config.get_string("payoff", "kind");
    if (kind == "terminal")
        return Payoff{TerminalPayoff{Expr::parse(config.get_string("payoff", "expr"))}};
    if (kind == "cylindrical") {
        CylindricalPayoff p;
        p.dates = config.get_number_list("payoff", "dates");
        p.f = Expr::parse(config.get_string("payoff", "expr"));
        return Payoff{std::move(p)};
    }
    if (kind == "running_max")
        return Payoff{RunningMaxPayoff{Expr::parse(config.get_string("payoff", "expr"))}};
    if (kind == "time_integral")
        return Payoff{TimeIntegralPayoff{Expr::parse(config.get_string("payoff", "f_expr")),
                                         Expr::parse(config.get_string("payoff", "g_expr"))}};
    throw ValidationError("config key payoff.kind must be terminal | cylindrical | running_max "
                          "| time_integral, got \"" +
                          kind + "\"");
}

} // namespace uvband
