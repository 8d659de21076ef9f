#include "uvband/payoff.hpp"

#include "uvband/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace uvband {

namespace {

constexpr double kDateMatchTol = 1e-9;

std::size_t grid_index_of(std::span<const double> times, double date) {
    double tol = kDateMatchTol * std::max(1.0, std::fabs(times.back()));
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (std::fabs(times[i] - date) <= tol)
            return i;
    }
    std::ostringstream os;
    os << "cylindrical date " << date << " is absent from the path grid";
    throw AlignmentError(os.str());
}

} // namespace

DualityClass classify_duality_class(const Payoff& payoff) {
    return std::visit(
        [](const auto& p) -> DualityClass {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, TerminalPayoff> ||
                          std::is_same_v<T, CylindricalPayoff>)
                return DualityClass::Cylindrical;
            else if constexpr (std::is_same_v<T, RunningMaxPayoff>)
                return DualityClass::RunningMax;
            else
                return DualityClass::TimeIntegral;
        },
        payoff);
}

void validate_payoff(const Payoff& payoff, double horizon) {
    if (const auto* cyl = std::get_if<CylindricalPayoff>(&payoff)) {
        if (cyl->dates.empty())
            throw ValidationError("cylindrical payoff needs at least one date");
        for (std::size_t i = 0; i < cyl->dates.size(); ++i) {
            if (!(cyl->dates[i] > 0.0))
                throw ValidationError("cylindrical dates must be positive");
            if (i > 0 && !(cyl->dates[i] > cyl->dates[i - 1]))
                throw ValidationError("cylindrical dates must be strictly increasing");
            if (horizon > 0.0 && cyl->dates[i] > horizon * (1.0 + kDateMatchTol))
                throw ValidationError("cylindrical date exceeds the horizon");
        }
        if (cyl->f.arity() > static_cast<int>(cyl->dates.size()))
            throw ValidationError("cylindrical expression references x" +
                                  std::to_string(cyl->f.arity()) + " but only " +
                                  std::to_string(cyl->dates.size()) + " date(s) are given");
        return;
    }
    int arity = std::visit(
        [](const auto& p) -> int {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, TerminalPayoff> ||
                          std::is_same_v<T, RunningMaxPayoff>)
                return p.g.arity();
            else if constexpr (std::is_same_v<T, TimeIntegralPayoff>)
                return std::max(p.f.arity(), p.g.arity());
            else
                return 0;
        },
        payoff);
    if (arity > 1)
        throw ValidationError("payoff expressions of this kind are functions of x1 only");
}

double evaluate_payoff(const Payoff& payoff, std::span<const double> times,
                       std::span<const double> values) {
    if (times.size() != values.size() || times.empty())
        throw AlignmentError("path must supply matching nonempty time/value arrays");

    return std::visit(
        [&](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, TerminalPayoff>) {
                return p.g.eval1(values.back());
            } else if constexpr (std::is_same_v<T, CylindricalPayoff>) {
                std::vector<double> fixings;
                fixings.reserve(p.dates.size());
                for (double d : p.dates)
                    fixings.push_back(values[grid_index_of(times, d)]);
                return p.f.eval(fixings);
            } else if constexpr (std::is_same_v<T, RunningMaxPayoff>) {
                double m = values[0];
                for (double v : values)
                    m = std::max(m, v);
                return p.g.eval1(m);
            } else {
                double acc = 0.0;
                for (std::size_t i = 0; i + 1 < times.size(); ++i)
                    acc += p.f.eval1(values[i]) * (times[i + 1] - times[i]);
                return p.g.eval1(acc);
            }
        },
        payoff);
}

Payoff exceedance_indicator(const Payoff& payoff, double threshold) {
    if (!(threshold > 0.0))
        throw ValidationError("exceedance threshold must be positive");
    // Ramp of width threshold * 1e-12: pathwise below the exact indicator of
    // {|f| > threshold}, so empirical Markov comparisons stay one-sided.
    double steep = 1e12 / threshold;
    auto wrap = [&](const Expr& e) {
        return Expr::clamp(
            Expr::mul(Expr::sub(Expr::abs(e), Expr::constant(threshold)),
                      Expr::constant(steep)),
            0.0, 1.0);
    };
    Payoff out = payoff;
    std::visit(
        [&](auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, TerminalPayoff> ||
                          std::is_same_v<T, RunningMaxPayoff>)
                p.g = wrap(p.g);
            else if constexpr (std::is_same_v<T, CylindricalPayoff>)
                p.f = wrap(p.f);
            else
                p.g = wrap(p.g);
        },
        out);
    return out;
}

std::string payoff_kind_name(const Payoff& payoff) {
    return std::visit(
        [](const auto& p) -> std::string {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, TerminalPayoff>)
                return "terminal";
            else if constexpr (std::is_same_v<T, CylindricalPayoff>)
                return "cylindrical";
            else if constexpr (std::is_same_v<T, RunningMaxPayoff>)
                return "running_max";
            else
                return "time_integral";
        },
        payoff);
}

std::string describe_payoff(const Payoff& payoff) {
    std::ostringstream os;
    os << payoff_kind_name(payoff);
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, TerminalPayoff>) {
                os << "(g = " << p.g.to_string() << ")";
            } else if constexpr (std::is_same_v<T, CylindricalPayoff>) {
                os << "(dates = [";
                for (std::size_t i = 0; i < p.dates.size(); ++i)
                    os << (i ? ", " : "") << p.dates[i];
                os << "], F = " << p.f.to_string() << ")";
            } else if constexpr (std::is_same_v<T, RunningMaxPayoff>) {
                os << "(G = " << p.g.to_string() << ")";
            } else {
                os << "(F = " << p.f.to_string() << ", G = " << p.g.to_string() << ")";
            }
        },
        payoff);
    return os.str();
}

std::string to_string(DualityClass c) {
    switch (c) {
    case DualityClass::Cylindrical:
        return "cylindrical";
    case DualityClass::RunningMax:
        return "running_max";
    case DualityClass::TimeIntegral:
        return "time_integral";
    }
    return "?";
}

} // namespace uvband
