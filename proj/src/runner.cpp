#include "uvband/runner.hpp"

#include "uvband/analysis.hpp"
#include "uvband/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace uvband {

namespace {

constexpr int kBlockPaths = 16384;

IncrementLaw law_from_string(const std::string& law, const std::string& key) {
    if (law == "gaussian")
        return IncrementLaw::Gaussian;
    if (law == "binomial")
        return IncrementLaw::Binomial;
    throw ValidationError("config key " + key + " must be gaussian | binomial, got \"" + law +
                          "\"");
}

// Battery selection: "default" or a comma list of band_low | band_mid |
// band_high | regimes<N> | const_vol:<sigma>.
std::vector<MeasureScheme> parse_battery(const std::string& text, IncrementLaw law,
                                         const std::string& key) {
    if (text == "default")
        return default_battery(law);
    std::vector<MeasureScheme> out;
    std::istringstream is(text);
    std::string token;
    while (std::getline(is, token, ',')) {
        std::size_t a = token.find_first_not_of(" \t");
        std::size_t b = token.find_last_not_of(" \t");
        if (a == std::string::npos)
            continue;
        token = token.substr(a, b - a + 1);
        if (token == "band_low")
            out.push_back({BandEdgeScheme{false}, law});
        else if (token == "band_mid")
            out.push_back({BandMixScheme{0.5}, law});
        else if (token == "band_high")
            out.push_back({BandEdgeScheme{true}, law});
        else if (token.rfind("regimes", 0) == 0)
            out.push_back(
                {PiecewiseRandomScheme{std::stoi(token.substr(7)), 0.5}, law});
        else if (token.rfind("const_vol:", 0) == 0)
            out.push_back({ConstVolScheme{std::stod(token.substr(10))}, law});
        else
            throw ValidationError("config key " + key + " has an unknown scheme \"" + token +
                                  "\" (band_low | band_mid | band_high | regimes<N> | "
                                  "const_vol:<sigma>)");
    }
    if (out.empty())
        throw ValidationError("config key " + key + " selects no schemes");
    return out;
}

// Every subcommand's parameters are resolved on every run, so a typo in any
// section is rejected no matter which subcommand executes.
struct Params {
    // price
    long price_steps;
    bool price_lower_too;
    bool price_export_surface;
    double sup_correction;
    // hedge
    long hedge_steps, hedge_paths;
    std::uint64_t hedge_seed;
    IncrementLaw hedge_law;
    std::string hedge_battery;
    double hedge_funding;
    std::optional<double> hedge_epsilon; // nullopt = auto (3 dx^2)
    bool hedge_policy_feedback;
    bool hedge_export_shortfalls;
    long hedge_histogram_bins;
    // duality
    long duality_steps, duality_paths;
    std::uint64_t duality_seed;
    IncrementLaw duality_law;
    std::string duality_battery;
    bool duality_policy_feedback;
    // capacity
    long capacity_steps, capacity_paths;
    std::uint64_t capacity_seed;
    IncrementLaw capacity_law;
    std::string capacity_battery;
    std::vector<double> capacity_alphas;
    double capacity_event_low, capacity_event_high;
    // qv
    long qv_containment_paths, qv_containment_steps;
    long qv_paths, qv_fine_steps;
    std::uint64_t qv_seed;
    double qv_t; // 0 = horizon
    std::vector<double> qv_subdivisions;
    // converge
    std::vector<double> converge_steps;
};

Params resolve_params(const ConfigFile& config) {
    Params p;
    p.price_steps = config.get_integer("price", "n_steps", 1, 20000, 400);
    p.price_lower_too = config.get_bool("price", "lower", true);
    p.price_export_surface = config.get_bool("price", "export_surface", false);
    p.sup_correction = config.get_number("price", "sup_correction", 0.0, 10.0,
                                         kSupMonitoringCorrection);

    p.hedge_steps = config.get_integer("hedge", "n_steps", 1, 20000, 400);
    p.hedge_paths = config.get_integer("hedge", "n_paths", 2, 100000000, 100000);
    p.hedge_seed = static_cast<std::uint64_t>(
        config.get_integer("hedge", "seed", 0, std::numeric_limits<long>::max(), 1));
    p.hedge_law = law_from_string(config.get_string("hedge", "law", std::string("binomial")),
                                  "hedge.law");
    p.hedge_battery = config.get_string("hedge", "battery", std::string("default"));
    p.hedge_funding = config.get_number("hedge", "funding", 0.0, 100.0, 1.0);
    std::string eps = config.get_string("hedge", "epsilon", std::string("auto"));
    if (eps == "auto") {
        p.hedge_epsilon = std::nullopt;
    } else {
        try {
            p.hedge_epsilon = std::stod(eps);
        } catch (const std::exception&) {
            throw ValidationError("config key hedge.epsilon must be 'auto' or a number");
        }
        if (*p.hedge_epsilon < 0.0)
            throw ValidationError("config key hedge.epsilon must be >= 0");
    }
    p.hedge_policy_feedback = config.get_bool("hedge", "include_policy_feedback", true);
    p.hedge_export_shortfalls = config.get_bool("hedge", "export_shortfalls", false);
    p.hedge_histogram_bins = config.get_integer("hedge", "histogram_bins", 1, 100000, 50);

    p.duality_steps = config.get_integer("duality", "n_steps", 1, 20000, 200);
    p.duality_paths = config.get_integer("duality", "n_paths", 2, 100000000, 100000);
    p.duality_seed = static_cast<std::uint64_t>(
        config.get_integer("duality", "seed", 0, std::numeric_limits<long>::max(), 1));
    p.duality_law = law_from_string(
        config.get_string("duality", "law", std::string("gaussian")), "duality.law");
    p.duality_battery = config.get_string("duality", "battery", std::string("default"));
    p.duality_policy_feedback = config.get_bool("duality", "include_policy_feedback", true);

    p.capacity_steps = config.get_integer("capacity", "n_steps", 1, 20000, 100);
    p.capacity_paths = config.get_integer("capacity", "n_paths", 2, 100000000, 20000);
    p.capacity_seed = static_cast<std::uint64_t>(
        config.get_integer("capacity", "seed", 0, std::numeric_limits<long>::max(), 1));
    p.capacity_law = law_from_string(
        config.get_string("capacity", "law", std::string("gaussian")), "capacity.law");
    p.capacity_battery = config.get_string("capacity", "battery", std::string("default"));
    p.capacity_alphas =
        config.get_number_list("capacity", "alpha", std::vector<double>{0.1, 0.2});
    for (double a : p.capacity_alphas)
        if (!(a > 0.0))
            throw ValidationError("config key capacity.alpha entries must be positive");
    p.capacity_event_low = config.get_number("capacity", "event_low", 1e-12, 1e6, 0.05);
    p.capacity_event_high = config.get_number("capacity", "event_high", 1e-12, 1e6, 0.1);
    if (p.capacity_event_low >= p.capacity_event_high)
        throw ValidationError("config keys capacity.event_low must be < capacity.event_high");

    p.qv_containment_paths = config.get_integer("qv", "containment_paths", 1, 100000000, 100000);
    p.qv_containment_steps = config.get_integer("qv", "containment_steps", 1, 20000, 400);
    p.qv_paths = config.get_integer("qv", "n_paths", 2, 100000000, 20000);
    p.qv_fine_steps = config.get_integer("qv", "fine_steps", 2, 1048576, 1024);
    p.qv_seed = static_cast<std::uint64_t>(
        config.get_integer("qv", "seed", 0, std::numeric_limits<long>::max(), 1));
    p.qv_t = config.get_number("qv", "t", 0.0, 1e4, 0.0);
    p.qv_subdivisions = config.get_number_list("qv", "subdivisions",
                                               std::vector<double>{4, 8, 16, 32, 64});
    p.converge_steps = config.get_number_list("converge", "steps",
                                              std::vector<double>{50, 100, 200, 400});
    return p;
}

std::vector<int> to_int_list(const std::vector<double>& xs, const std::string& key) {
    std::vector<int> out;
    for (double x : xs) {
        if (x < 1 || x != std::floor(x))
            throw ValidationError("config key " + key + " must list positive integers");
        out.push_back(static_cast<int>(x));
    }
    return out;
}

json envelope(const std::string& subcommand, const ConfigFile& config, const MeasureBand& band,
              const Payoff& payoff, std::optional<std::uint64_t> seed) {
    json config_echo = json::object();
    for (const auto& [key, value] : config.consumed_echo())
        config_echo[key] = value;
    json out = {
        {"report", subcommand},
        {"version", std::string(kVersion)},
        {"generator", std::string(kGeneratorId)},
        {"band", band_to_json(band)},
        {"payoff", payoff_to_json(payoff)},
        {"config", config_echo},
    };
    if (seed)
        out["seed"] = *seed;
    else
        out["seed"] = nullptr;
    return out;
}

template <typename Fn>
void for_each_block(const MeasureBand& band, const MeasureScheme& scheme, long n_paths,
                    int n_steps, std::uint64_t seed, Fn&& fn) {
    for (long first = 0; first < n_paths; first += kBlockPaths) {
        int count = static_cast<int>(std::min<long>(kBlockPaths, n_paths - first));
        PathEnsemble block =
            sample_path_block(band, scheme, static_cast<int>(first), count, n_steps, seed);
        fn(block);
    }
}

std::vector<MeasureScheme> with_policy_feedback(std::vector<MeasureScheme> battery,
                                                IncrementLaw law, bool include,
                                                const PricingResult& priced,
                                                const LatticeSpec& spec) {
    if (include)
        battery.push_back({PolicyFeedbackScheme{priced.policy, spec}, law});
    return battery;
}

// --------------------------------------------------------------------------

RunOutput run_price(const ConfigFile& config, const Params& p, const MeasureBand& band,
                    const Payoff& payoff) {
    LatticeOptions options;
    options.sup_correction = p.sup_correction;
    LatticeSpec spec = build_lattice(band, static_cast<int>(p.price_steps), options);
    PricingResult upper = price_upper(spec, payoff);

    json results = {
        {"n_steps", p.price_steps},
        {"dx", spec.dx},
        {"price_upper", upper.price},
        {"policy_fraction_high", upper.policy->fraction_high()},
        {"duality_class", to_string(classify_duality_class(payoff))},
    };
    if (std::holds_alternative<RunningMaxPayoff>(payoff))
        results["sup_correction"] = p.sup_correction;

    json table = json::array();
    table.push_back({{"quantity", "price_upper"}, {"value", upper.price}});
    if (p.price_lower_too) {
        PricingResult lower = price_lower(spec, payoff);
        results["price_lower"] = lower.price;
        table.push_back({{"quantity", "price_lower"}, {"value", lower.price}});
    }
    results["table"] = table;

    RunOutput out;
    if (p.price_export_surface) {
        HedgeStrategy delta = extract_delta(*upper.surface);
        std::ostringstream os;
        write_surface_csv(os, *upper.surface, *upper.policy, delta);
        out.files.push_back({"surface.csv", os.str()});
        results["surface_file"] = "surface.csv";
    }

    out.report = envelope("price", config, band, payoff, std::nullopt);
    out.report["results"] = results;
    return out;
}

RunOutput run_hedge(const ConfigFile& config, const Params& p, const MeasureBand& band,
                    const Payoff& payoff, std::uint64_t seed) {
    LatticeSpec spec = build_lattice(band, static_cast<int>(p.hedge_steps));
    PricingResult priced = price_upper(spec, payoff);
    HedgeStrategy strategy = extract_delta(*priced.surface);
    priced.surface.reset(); // the audit needs only deltas and the policy

    double capital = p.hedge_funding * priced.price;
    double epsilon = p.hedge_epsilon ? *p.hedge_epsilon : default_hedge_epsilon(spec);
    auto battery = with_policy_feedback(
        parse_battery(p.hedge_battery, p.hedge_law, "hedge.battery"), p.hedge_law,
        p.hedge_policy_feedback, priced, spec);

    HedgeReport pooled;
    pooled.initial_capital = capital;
    pooled.epsilon = epsilon;
    json per_scheme = json::array();
    for (std::size_t si = 0; si < battery.size(); ++si) {
        HedgeAuditor auditor(capital, strategy, payoff, epsilon);
        std::uint64_t scheme_seed = derive_seed(seed, si);
        for_each_block(band, battery[si], p.hedge_paths, static_cast<int>(p.hedge_steps),
                       scheme_seed, [&](const PathEnsemble& block) { auditor.add(block); });
        HedgeReport r = auditor.finish();
        per_scheme.push_back({
            {"scheme", battery[si].name()},
            {"paths", r.paths},
            {"violations", r.violations},
            {"violation_rate", r.violation_rate},
            {"max_shortfall", r.max_shortfall},
            {"mean_shortfall", r.mean_shortfall},
        });
        pooled.paths += r.paths;
        pooled.violations += r.violations;
        pooled.max_shortfall = std::max(pooled.max_shortfall, r.max_shortfall);
        pooled.mean_shortfall += r.mean_shortfall * static_cast<double>(r.paths);
        pooled.terminal_values.insert(pooled.terminal_values.end(), r.terminal_values.begin(),
                                      r.terminal_values.end());
        pooled.shortfalls.insert(pooled.shortfalls.end(), r.shortfalls.begin(),
                                 r.shortfalls.end());
    }
    if (pooled.paths > 0) {
        pooled.mean_shortfall /= static_cast<double>(pooled.paths);
        pooled.violation_rate =
            static_cast<double>(pooled.violations) / static_cast<double>(pooled.paths);
    }

    json results = hedge_report_to_json(pooled);
    results["price_upper"] = priced.price;
    results["funding"] = p.hedge_funding;
    results["n_steps"] = p.hedge_steps;
    results["n_paths_per_scheme"] = p.hedge_paths;
    results["per_scheme"] = per_scheme;
    results["table"] = per_scheme;

    RunOutput out;
    if (p.hedge_export_shortfalls) {
        std::ostringstream os;
        write_shortfall_histogram_csv(os, pooled, static_cast<int>(p.hedge_histogram_bins));
        out.files.push_back({"shortfalls.csv", os.str()});
        results["shortfall_file"] = "shortfalls.csv";
    }
    out.report = envelope("hedge", config, band, payoff, seed);
    out.report["results"] = results;
    return out;
}

RunOutput run_duality(const ConfigFile& config, const Params& p, const MeasureBand& band,
                      const Payoff& payoff, std::uint64_t seed) {
    LatticeSpec spec = build_lattice(band, static_cast<int>(p.duality_steps));
    PricingResult priced = price_upper(spec, payoff);
    priced.surface.reset();

    auto battery = with_policy_feedback(
        parse_battery(p.duality_battery, p.duality_law, "duality.battery"), p.duality_law,
        p.duality_policy_feedback, priced, spec);
    auto duals = dual_bound(payoff, band, battery, static_cast<int>(p.duality_paths),
                            static_cast<int>(p.duality_steps), seed);
    DualityReport report = duality_gap(priced.price, duals);

    json results = duality_report_to_json(report);
    results["n_steps"] = p.duality_steps;
    results["n_paths"] = p.duality_paths;
    results["table"] = scheme_estimates_to_json(report.duals);

    RunOutput out;
    out.report = envelope("duality", config, band, payoff, seed);
    out.report["results"] = results;
    out.exit_hint = report.inconsistent ? 3 : 0;
    return out;
}

RunOutput run_capacity(const ConfigFile& config, const Params& p, const MeasureBand& band,
                       const Payoff& payoff, std::uint64_t seed) {
    auto battery = parse_battery(p.capacity_battery, p.capacity_law, "capacity.battery");
    int steps = static_cast<int>(p.capacity_steps);
    int paths = static_cast<int>(p.capacity_paths);

    CapacityEstimate estimate = capacity(payoff, band, battery, paths, steps, seed);

    json markov = json::array();
    for (double alpha : p.capacity_alphas)
        markov.push_back(
            markov_to_json(markov_check(payoff, alpha, band, battery, paths, steps, seed)));

    auto event = [&](double threshold, bool above) {
        std::ostringstream os;
        os.precision(17);
        if (above)
            os << "clamp((x - " << threshold << ") * 1e13, 0, 1)";
        else
            os << "clamp((0 - x - " << threshold << ") * 1e13, 0, 1)";
        return Payoff{TerminalPayoff{Expr::parse(os.str())}};
    };
    CapacityAxiomReport nested = capacity_axiom_check(
        event(p.capacity_event_high, true), event(p.capacity_event_low, true), true, band,
        battery, paths, steps, seed);
    CapacityAxiomReport disjoint = capacity_axiom_check(
        event(p.capacity_event_high, true), event(p.capacity_event_high, false), false, band,
        battery, paths, steps, seed);

    json results = capacity_to_json(estimate);
    results["n_steps"] = p.capacity_steps;
    results["n_paths"] = p.capacity_paths;
    results["markov"] = markov;
    results["axioms_nested"] = axioms_to_json(nested);
    results["axioms_disjoint"] = axioms_to_json(disjoint);
    results["table"] = scheme_estimates_to_json(estimate.per_scheme);

    RunOutput out;
    out.report = envelope("capacity", config, band, payoff, seed);
    out.report["results"] = results;
    return out;
}

RunOutput run_qv(const ConfigFile& config, const Params& p, const MeasureBand& band,
                 const Payoff& payoff, std::uint64_t seed) {
    // Pathwise band containment over the binomial battery.
    QvContainment containment;
    json containment_schemes = json::array();
    auto battery = default_battery(IncrementLaw::Binomial);
    for (std::size_t si = 0; si < battery.size(); ++si) {
        QvContainment per;
        std::uint64_t scheme_seed = derive_seed(seed, si);
        for_each_block(band, battery[si], p.qv_containment_paths,
                       static_cast<int>(p.qv_containment_steps), scheme_seed,
                       [&](const PathEnsemble& block) {
                           QvContainment c = qv_containment(band, block);
                           per.paths_checked += c.paths_checked;
                           per.knots_checked += c.knots_checked;
                           per.violations += c.violations;
                       });
        containment_schemes.push_back({
            {"scheme", battery[si].name()},
            {"paths", per.paths_checked},
            {"violations", per.violations},
        });
        containment.paths_checked += per.paths_checked;
        containment.knots_checked += per.knots_checked;
        containment.violations += per.violations;
    }

    QvApproxParams params;
    params.n_paths = static_cast<int>(p.qv_paths);
    params.fine_steps = static_cast<int>(p.qv_fine_steps);
    params.seed = seed;
    double t = p.qv_t > 0.0 ? p.qv_t : band.horizon;
    auto subdivisions = to_int_list(p.qv_subdivisions, "qv.subdivisions");
    QvApproxSweep sweep = qv_approx_sweep(band, t, subdivisions, params);

    json results = {
        {"containment",
         {{"paths", containment.paths_checked},
          {"knots", containment.knots_checked},
          {"violations", containment.violations},
          {"per_scheme", containment_schemes}}},
        {"sweep", qv_sweep_to_json(sweep)},
        {"t", t},
    };
    json table = json::array();
    for (const auto& r : sweep.results)
        table.push_back({{"subdivisions", r.subdivisions},
                         {"max_value", r.max_value},
                         {"max_se", r.max_se},
                         {"bound", r.bound}});
    results["table"] = table;

    RunOutput out;
    out.report = envelope("qv", config, band, payoff, seed);
    out.report["results"] = results;
    return out;
}

RunOutput run_converge(const ConfigFile& config, const Params& p, const MeasureBand& band,
                       const Payoff& payoff) {
    auto steps = to_int_list(p.converge_steps, "converge.steps");
    ConvergenceReport report = convergence_sweep(band, payoff, steps);

    json results = convergence_to_json(report);
    json table = json::array();
    for (const auto& point : report.points)
        table.push_back({{"n_steps", point.n_steps}, {"price", point.price}});
    results["table"] = table;

    RunOutput out;
    out.report = envelope("converge", config, band, payoff, std::nullopt);
    out.report["results"] = results;
    return out;
}

} // namespace

RunOutput run_subcommand(const std::string& subcommand, const ConfigFile& config,
                         const RunOverrides& overrides) {
    static const std::set<std::string> kSections = {"band", "payoff",   "price", "hedge",
                                                    "duality", "capacity", "qv",    "converge"};

    MeasureBand band = band_from_config(config);
    Payoff payoff = payoff_from_config(config);
    validate_payoff(payoff, band.horizon);
    Params params = resolve_params(config);
    config.finish(kSections);

    auto seed_or = [&](std::uint64_t config_seed) {
        return overrides.seed ? *overrides.seed : config_seed;
    };

    RunOutput out;
    if (subcommand == "price")
        out = run_price(config, params, band, payoff);
    else if (subcommand == "hedge")
        out = run_hedge(config, params, band, payoff, seed_or(params.hedge_seed));
    else if (subcommand == "duality")
        out = run_duality(config, params, band, payoff, seed_or(params.duality_seed));
    else if (subcommand == "capacity")
        out = run_capacity(config, params, band, payoff, seed_or(params.capacity_seed));
    else if (subcommand == "qv")
        out = run_qv(config, params, band, payoff, seed_or(params.qv_seed));
    else if (subcommand == "converge")
        out = run_converge(config, params, band, payoff);
    else
        throw ValidationError("unknown subcommand \"" + subcommand +
                              "\" (price | hedge | duality | capacity | qv | converge)");
    return out;
}

std::string primary_table_csv(const json& report) {
    if (!report.contains("results") || !report["results"].contains("table"))
        return "";
    const json& table = report["results"]["table"];
    if (!table.is_array() || table.empty())
        return "";
    std::ostringstream os;
    std::vector<std::string> columns;
    for (const auto& [key, value] : table[0].items()) {
        (void)value;
        columns.push_back(key);
    }
    for (std::size_t c = 0; c < columns.size(); ++c)
        os << (c ? "," : "") << columns[c];
    os << "\n";
    for (const auto& row : table) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            const json& v = row.contains(columns[c]) ? row[columns[c]] : json();
            os << (c ? "," : "") << (v.is_string() ? v.get<std::string>() : v.dump());
        }
        os << "\n";
    }
    return os.str();
}

} // namespace uvband
