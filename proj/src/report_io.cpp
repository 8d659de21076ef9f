#include "uvband/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace uvband {

json band_to_json(const MeasureBand& band) {
    json lower = json::array();
    for (const Knot& k : band.lower_knots)
        lower.push_back({{"t", k.t}, {"value", k.value}});
    json upper = json::array();
    for (const Knot& k : band.upper_knots)
        upper.push_back({{"t", k.t}, {"value", k.value}});
    return {
        {"horizon", band.horizon},
        {"lower_knots", lower},
        {"upper_knots", upper},
        {"lower_total", band.lower_total()},
        {"upper_total", band.upper_total()},
        {"holder_c", band.holder_c},
        {"holder_alpha", band.holder_alpha},
    };
}

json payoff_to_json(const Payoff& payoff) {
    json out = {
        {"kind", payoff_kind_name(payoff)},
        {"duality_class", to_string(classify_duality_class(payoff))},
    };
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, TerminalPayoff>) {
                out["expr"] = p.g.to_string();
            } else if constexpr (std::is_same_v<T, CylindricalPayoff>) {
                out["expr"] = p.f.to_string();
                out["dates"] = p.dates;
            } else if constexpr (std::is_same_v<T, RunningMaxPayoff>) {
                out["expr"] = p.g.to_string();
            } else {
                out["f_expr"] = p.f.to_string();
                out["g_expr"] = p.g.to_string();
            }
        },
        payoff);
    return out;
}

json scheme_estimates_to_json(std::span<const SchemeEstimate> estimates) {
    json out = json::array();
    for (const auto& e : estimates)
        out.push_back({{"scheme", e.scheme}, {"value", e.value}, {"se", e.se}});
    return out;
}

json hedge_report_to_json(const HedgeReport& report) {
    // Raw per-path arrays are kept in memory only; the payload carries the
    // distribution summary (CSV export has the histogram).
    json quantiles = json::object();
    if (!report.shortfalls.empty()) {
        std::vector<double> sorted = report.shortfalls;
        std::sort(sorted.begin(), sorted.end());
        auto q = [&](double p) {
            double idx = p * (static_cast<double>(sorted.size()) - 1.0);
            std::size_t lo = static_cast<std::size_t>(idx);
            std::size_t hi = std::min(lo + 1, sorted.size() - 1);
            return sorted[lo] + (idx - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
        };
        quantiles = {{"p50", q(0.5)}, {"p90", q(0.9)}, {"p99", q(0.99)}, {"p100", sorted.back()}};
    }
    return {
        {"initial_capital", report.initial_capital},
        {"epsilon", report.epsilon},
        {"paths", report.paths},
        {"violations", report.violations},
        {"violation_rate", report.violation_rate},
        {"max_shortfall", report.max_shortfall},
        {"mean_shortfall", report.mean_shortfall},
        {"shortfall_quantiles", quantiles},
    };
}

json duality_report_to_json(const DualityReport& report) {
    return {
        {"primal", report.primal},
        {"duals", scheme_estimates_to_json(report.duals)},
        {"best_scheme", report.best_scheme},
        {"best_dual", report.best_dual},
        {"best_se", report.best_se},
        {"gap", report.gap},
        {"gap_relative", report.gap_relative},
        {"inconsistent", report.inconsistent},
    };
}

json capacity_to_json(const CapacityEstimate& estimate) {
    return {
        {"value", estimate.value},
        {"per_scheme", scheme_estimates_to_json(estimate.per_scheme)},
    };
}

json markov_to_json(const MarkovCheckReport& report) {
    return {
        {"alpha", report.alpha},
        {"lhs", report.lhs},
        {"lhs_se", report.lhs_se},
        {"rhs", report.rhs},
        {"pass", report.pass},
    };
}

json axioms_to_json(const CapacityAxiomReport& report) {
    return {
        {"a", capacity_to_json(report.a)},
        {"b", capacity_to_json(report.b)},
        {"a_union_b", capacity_to_json(report.a_union_b)},
        {"nested", report.nested},
        {"monotonicity_pass", report.monotonicity_pass},
        {"subadditivity_pass", report.subadditivity_pass},
    };
}

json convergence_to_json(const ConvergenceReport& report) {
    json points = json::array();
    for (const auto& p : report.points)
        points.push_back({{"n_steps", p.n_steps}, {"price", p.price}});
    json out = {{"points", points}, {"exact", report.exact}};
    if (std::isfinite(report.estimated_order))
        out["estimated_order"] = report.estimated_order;
    else
        out["estimated_order"] = nullptr;
    return out;
}

json qv_sweep_to_json(const QvApproxSweep& sweep) {
    json results = json::array();
    for (const auto& r : sweep.results) {
        json per = json::array();
        for (const auto& s : r.per_scheme)
            per.push_back({{"scheme", s.scheme}, {"value", s.value}, {"se", s.se}});
        results.push_back({
            {"subdivisions", r.subdivisions},
            {"bound", r.bound},
            {"max_value", r.max_value},
            {"max_se", r.max_se},
            {"per_scheme", per},
        });
    }
    return {{"results", results}, {"fitted_slope", sweep.fitted_slope}};
}

std::string to_canonical_json(const json& payload) {
    return payload.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Text rendering: a small indented key/value walk with aligned columns for
// arrays of homogeneous objects.

namespace {

void render(std::ostream& os, const json& node, int indent);

void render_table(std::ostream& os, const json& rows, int indent) {
    std::vector<std::string> columns;
    for (const auto& [key, value] : rows[0].items()) {
        (void)value;
        columns.push_back(key);
    }
    std::vector<std::vector<std::string>> cells;
    cells.emplace_back(columns);
    for (const auto& row : rows) {
        std::vector<std::string> line;
        for (const auto& c : columns) {
            const json& v = row.contains(c) ? row[c] : json();
            line.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        }
        cells.push_back(std::move(line));
    }
    std::vector<std::size_t> width(columns.size(), 0);
    for (const auto& line : cells)
        for (std::size_t c = 0; c < line.size(); ++c)
            width[c] = std::max(width[c], line[c].size());
    for (std::size_t r = 0; r < cells.size(); ++r) {
        os << std::string(static_cast<std::size_t>(indent), ' ');
        for (std::size_t c = 0; c < cells[r].size(); ++c) {
            os << cells[r][c] << std::string(width[c] - cells[r][c].size() + 2, ' ');
        }
        os << "\n";
    }
}

void render(std::ostream& os, const json& node, int indent) {
    std::string pad(static_cast<std::size_t>(indent), ' ');
    if (node.is_object()) {
        for (const auto& [key, value] : node.items()) {
            if (value.is_object() || (value.is_array() && !value.empty())) {
                os << pad << key << ":\n";
                render(os, value, indent + 2);
            } else {
                os << pad << key << " = "
                   << (value.is_string() ? value.get<std::string>() : value.dump()) << "\n";
            }
        }
    } else if (node.is_array()) {
        bool table = !node.empty() && node[0].is_object();
        for (const auto& item : node)
            table = table && item.is_object();
        if (table) {
            render_table(os, node, indent);
        } else {
            os << pad << node.dump() << "\n";
        }
    } else {
        os << pad << node.dump() << "\n";
    }
}

} // namespace

std::string to_text_report(const json& payload) {
    std::ostringstream os;
    os.precision(12);
    render(os, payload, 0);
    return os.str();
}

// ---------------------------------------------------------------------------

void write_surface_csv(std::ostream& os, const ValueSurface& surface, const Policy& policy,
                       const HedgeStrategy& delta) {
    os.precision(17);
    const LatticeSpec& spec = surface.spec;
    const AuxInfo& aux = surface.aux;
    os << "time_index,time,x,aux,value,policy_high,delta\n";
    for (int i = 0; i <= aux.last_step; ++i) {
        bool has_decision = i < aux.last_step;
        for (int j = -i; j <= i; ++j) {
            for (int k = 0; k < aux.aux_count(i); ++k) {
                double aux_value = 0.0;
                switch (aux.kind) {
                case AuxKind::None:
                    break;
                case AuxKind::RunningMax:
                    aux_value = k * spec.dx;
                    break;
                case AuxKind::Fixing:
                    aux_value = (k - aux.fix_step) * spec.dx;
                    break;
                case AuxKind::Integral:
                    aux_value = aux.y_value(k);
                    break;
                }
                os << i << "," << spec.time_knots[static_cast<std::size_t>(i)] << ","
                   << j * spec.dx << "," << aux_value << "," << surface.at(i, j, k) << ",";
                if (has_decision)
                    os << (policy.is_high(i, j, k) ? 1 : 0) << "," << delta.at(i, j, k);
                else
                    os << ",";
                os << "\n";
            }
        }
    }
}

void write_shortfall_histogram_csv(std::ostream& os, const HedgeReport& report, int bins) {
    os.precision(17);
    os << "bin_lo,bin_hi,count\n";
    if (report.shortfalls.empty() || bins < 1)
        return;
    double lo = 0.0, hi = report.max_shortfall;
    if (hi <= lo)
        hi = lo + 1e-12;
    double width = (hi - lo) / bins;
    std::vector<long> counts(static_cast<std::size_t>(bins), 0);
    for (double s : report.shortfalls) {
        int b = std::min(bins - 1, static_cast<int>((s - lo) / width));
        ++counts[static_cast<std::size_t>(std::max(0, b))];
    }
    for (int b = 0; b < bins; ++b)
        os << lo + b * width << "," << lo + (b + 1) * width << ","
           << counts[static_cast<std::size_t>(b)] << "\n";
}

} // namespace uvband
