#include "uvband/lattice.hpp"

#include "uvband/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace uvband {

namespace {

constexpr double kKnotMatchTol = 1e-9;

[[noreturn]] void misaligned(double t) {
    std::ostringstream os;
    os << "date " << t << " does not coincide with a lattice time knot";
    throw AlignmentError(os.str());
}

} // namespace

int LatticeSpec::step_of(double t) const {
    double tol = kKnotMatchTol * std::max(1.0, horizon());
    int i = nearest_step(t);
    if (std::fabs(time_knots[static_cast<std::size_t>(i)] - t) > tol)
        misaligned(t);
    return i;
}

int LatticeSpec::nearest_step(double t) const {
    auto it = std::lower_bound(time_knots.begin(), time_knots.end(), t);
    if (it == time_knots.end())
        return n_steps;
    if (it == time_knots.begin())
        return 0;
    auto prev = it - 1;
    std::size_t idx = (t - *prev <= *it - t) ? static_cast<std::size_t>(prev - time_knots.begin())
                                             : static_cast<std::size_t>(it - time_knots.begin());
    return static_cast<int>(idx);
}

LatticeSpec build_lattice(const MeasureBand& band, int n_steps, LatticeOptions options) {
    if (n_steps < 1)
        throw ValidationError("n_steps must be >= 1");
    BandValidation check = validate_band(band);
    if (!check.ok())
        throw ValidationError("build_lattice: invalid band: " + check.violations.front());
    double total = band.upper_total();
    if (!(total > 0.0))
        throw ValidationError("build_lattice: degenerate band with zero upper measure");

    LatticeSpec spec;
    spec.band = band;
    spec.n_steps = n_steps;
    spec.options = options;
    spec.time_knots.resize(static_cast<std::size_t>(n_steps) + 1);
    spec.time_knots[0] = 0.0;
    for (int i = 1; i < n_steps; ++i)
        spec.time_knots[static_cast<std::size_t>(i)] =
            band.upper_inverse(total * static_cast<double>(i) / n_steps);
    spec.time_knots[static_cast<std::size_t>(n_steps)] = band.horizon;

    spec.v_low.resize(static_cast<std::size_t>(n_steps));
    spec.v_high.resize(static_cast<std::size_t>(n_steps));
    for (int i = 0; i < n_steps; ++i) {
        auto [dl, du] = band_increment(band, spec.time_knots[static_cast<std::size_t>(i)],
                                       spec.time_knots[static_cast<std::size_t>(i) + 1]);
        spec.v_low[static_cast<std::size_t>(i)] = dl;
        spec.v_high[static_cast<std::size_t>(i)] = du;
    }
    spec.dx2 = *std::max_element(spec.v_high.begin(), spec.v_high.end());
    spec.dx = std::sqrt(spec.dx2);
    return spec;
}

// ---------------------------------------------------------------------------
// Aux layout.

int AuxInfo::aux_count(int i) const {
    switch (kind) {
    case AuxKind::None:
        return 1;
    case AuxKind::RunningMax:
        return i + 1;
    case AuxKind::Fixing:
        return i > fix_step ? 2 * fix_step + 1 : 1;
    case AuxKind::Integral:
        return y_points;
    }
    return 1;
}

std::size_t AuxInfo::slice_size(int i) const {
    return static_cast<std::size_t>(width(i)) * static_cast<std::size_t>(aux_count(i));
}

std::size_t AuxInfo::node_index(int i, int j, int k) const {
    return static_cast<std::size_t>(j + i) * static_cast<std::size_t>(aux_count(i)) +
           static_cast<std::size_t>(k);
}

double AuxInfo::y_spacing() const {
    return y_points > 1 ? (y_hi - y_lo) / (y_points - 1) : 0.0;
}

double AuxInfo::y_value(int k) const {
    return y_points > 1 ? y_lo + y_spacing() * k : y_lo;
}

AuxInfo make_aux_info(const LatticeSpec& spec, const Payoff& payoff) {
    validate_payoff(payoff, spec.horizon());
    AuxInfo aux;
    aux.last_step = spec.n_steps;

    if (const auto* cyl = std::get_if<CylindricalPayoff>(&payoff)) {
        if (cyl->dates.size() > 2)
            throw UnsupportedError("cylindrical payoffs support at most two dates on the "
                                   "lattice (got " +
                                   std::to_string(cyl->dates.size()) + ")");
        if (cyl->dates.size() == 1) {
            aux.kind = AuxKind::None;
            aux.last_step = spec.step_of(cyl->dates[0]);
        } else {
            aux.kind = AuxKind::Fixing;
            aux.fix_step = spec.step_of(cyl->dates[0]);
            aux.last_step = spec.step_of(cyl->dates[1]);
        }
    } else if (std::holds_alternative<RunningMaxPayoff>(payoff)) {
        aux.kind = AuxKind::RunningMax;
    } else if (const auto* ti = std::get_if<TimeIntegralPayoff>(&payoff)) {
        aux.kind = AuxKind::Integral;
        aux.integral_f = ti->f;
        int n = spec.n_steps;
        aux.f_at_level.resize(static_cast<std::size_t>(2 * n + 1));
        double f_min = std::numeric_limits<double>::infinity();
        double f_max = -f_min;
        for (int j = -n; j <= n; ++j) {
            double v = ti->f.eval1(j * spec.dx);
            aux.f_at_level[static_cast<std::size_t>(j + n)] = v;
            f_min = std::min(f_min, v);
            f_max = std::max(f_max, v);
        }
        // Range of the accumulated integral; always contains the start 0 so
        // the root state is representable.
        aux.y_lo = std::min(0.0, f_min * spec.horizon());
        aux.y_hi = std::max(0.0, f_max * spec.horizon());
        aux.y_points = (aux.y_hi > aux.y_lo)
                           ? std::max(2, spec.options.integral_aux_factor * spec.n_steps)
                           : 1;
    }
    return aux;
}

// ---------------------------------------------------------------------------
// Backward induction engine.

namespace {

struct InterpWeights {
    int k0;
    double w;
};

InterpWeights y_bracket(const AuxInfo& aux, double y) {
    if (aux.y_points <= 1)
        return {0, 0.0};
    double u = (std::clamp(y, aux.y_lo, aux.y_hi) - aux.y_lo) / aux.y_spacing();
    int k0 = std::min(static_cast<int>(u), aux.y_points - 2);
    return {k0, u - k0};
}

class Engine {
  public:
    Engine(const LatticeSpec& spec, const Payoff& payoff, bool maximize)
        : spec_(spec), payoff_(payoff), maximize_(maximize), aux_(make_aux_info(spec, payoff)) {}

    PricingResult run() {
        auto surface = std::make_shared<ValueSurface>();
        surface->spec = spec_;
        surface->aux = aux_;
        auto policy = std::make_shared<Policy>();
        policy->aux = aux_;

        int last = aux_.last_step;
        surface->slices.resize(static_cast<std::size_t>(last) + 1);
        policy->slices.resize(static_cast<std::size_t>(last));
        for (int i = 0; i <= last; ++i)
            surface->slices[static_cast<std::size_t>(i)].resize(aux_.slice_size(i));
        for (int i = 0; i < last; ++i)
            policy->slices[static_cast<std::size_t>(i)].resize(aux_.slice_size(i));

        fill_terminal(surface->slices[static_cast<std::size_t>(last)]);
        for (int i = last - 1; i >= 0; --i)
            step_back(*surface, *policy, i);

        PricingResult out;
        out.surface = surface;
        out.policy = policy;
        out.price = root_value(*surface);
        return out;
    }

  private:
    const LatticeSpec& spec_;
    const Payoff& payoff_;
    bool maximize_;
    AuxInfo aux_;

    double terminal_value(int j, int k) const {
        double x = j * spec_.dx;
        switch (aux_.kind) {
        case AuxKind::None:
            if (const auto* term = std::get_if<TerminalPayoff>(&payoff_))
                return term->g.eval1(x);
            return std::get<CylindricalPayoff>(payoff_).f.eval1(x);
        case AuxKind::RunningMax: {
            const auto& rm = std::get<RunningMaxPayoff>(payoff_);
            double m = (k + spec_.options.sup_correction) * spec_.dx;
            return rm.g.eval1(m);
        }
        case AuxKind::Fixing: {
            const auto& cyl = std::get<CylindricalPayoff>(payoff_);
            double args[2] = {(k - aux_.fix_step) * spec_.dx, x};
            return cyl.f.eval(args);
        }
        case AuxKind::Integral: {
            const auto& ti = std::get<TimeIntegralPayoff>(payoff_);
            return ti.g.eval1(aux_.y_value(k));
        }
        }
        return 0.0;
    }

    void fill_terminal(std::vector<double>& slice) const {
        int i = aux_.last_step;
        for (int j = -i; j <= i; ++j) {
            int ak = aux_.aux_count(i);
            for (int k = 0; k < ak; ++k)
                slice[aux_.node_index(i, j, k)] = terminal_value(j, k);
        }
        if (aux_.kind == AuxKind::RunningMax)
            project_shadow_states(slice, i);
    }

    // Nodes with a recorded maximum below the current level are formally
    // inconsistent (the maximum updates on arrival); give them the value of
    // the projected state so interpolation near the diagonal stays sane.
    void project_shadow_states(std::vector<double>& slice, int i) const {
        for (int j = 1; j <= i; ++j)
            for (int k = 0; k < j; ++k)
                slice[aux_.node_index(i, j, k)] = slice[aux_.node_index(i, j, j)];
    }
    void project_shadow_states(std::vector<std::uint8_t>& slice, int i) const {
        for (int j = 1; j <= i; ++j)
            for (int k = 0; k < j; ++k)
                slice[aux_.node_index(i, j, k)] = slice[aux_.node_index(i, j, j)];
    }

    void step_back(ValueSurface& surface, Policy& policy, int i) {
        const auto& next = surface.slices[static_cast<std::size_t>(i) + 1];
        auto& cur = surface.slices[static_cast<std::size_t>(i)];
        auto& pol = policy.slices[static_cast<std::size_t>(i)];
        const double v_lo = spec_.v_low[static_cast<std::size_t>(i)];
        const double v_hi = spec_.v_high[static_cast<std::size_t>(i)];
        const double inv2dx2 = 1.0 / (2.0 * spec_.dx2);
        const int ak = aux_.aux_count(i);

        for (int j = -i; j <= i; ++j) {
            for (int k = 0; k < ak; ++k) {
                double vu, vm, vd;
                successor_values(next, i, j, k, vu, vm, vd);
                double d2 = (vu - vm) + (vd - vm);
                double tie = policy_tie_tolerance(vu, vm, vd);
                bool high = std::fabs(d2) <= tie || (maximize_ ? d2 > 0.0 : d2 < 0.0);
                double v = high ? v_hi : v_lo;
                cur[aux_.node_index(i, j, k)] = vm + v * inv2dx2 * d2;
                pol[aux_.node_index(i, j, k)] = high ? 1 : 0;
            }
        }
        if (aux_.kind == AuxKind::RunningMax) {
            project_shadow_states(cur, i);
            project_shadow_states(pol, i);
        }
    }

    void successor_values(const std::vector<double>& next, int i, int j, int k, double& vu,
                          double& vm, double& vd) const {
        const int in = i + 1;
        switch (aux_.kind) {
        case AuxKind::None:
            vu = next[aux_.node_index(in, j + 1, 0)];
            vm = next[aux_.node_index(in, j, 0)];
            vd = next[aux_.node_index(in, j - 1, 0)];
            return;
        case AuxKind::RunningMax:
            vu = next[aux_.node_index(in, j + 1, std::max(k, j + 1))];
            vm = next[aux_.node_index(in, j, std::max(k, j))];
            vd = next[aux_.node_index(in, j - 1, std::max(k, j - 1))];
            return;
        case AuxKind::Fixing: {
            // The fixing is recorded on arrival at its date: before it there
            // is no aux state, at it the successor aux is the current level.
            int ks = (i == aux_.fix_step) ? j + aux_.fix_step
                     : (i > aux_.fix_step) ? k
                                           : 0;
            if (in <= aux_.fix_step) {
                vu = next[aux_.node_index(in, j + 1, 0)];
                vm = next[aux_.node_index(in, j, 0)];
                vd = next[aux_.node_index(in, j - 1, 0)];
            } else {
                vu = next[aux_.node_index(in, j + 1, ks)];
                vm = next[aux_.node_index(in, j, ks)];
                vd = next[aux_.node_index(in, j - 1, ks)];
            }
            return;
        }
        case AuxKind::Integral: {
            double y = aux_.y_value(k) +
                       aux_.f_at_level[static_cast<std::size_t>(j + spec_.n_steps)] *
                           spec_.step_dt(i);
            InterpWeights w = y_bracket(aux_, y);
            auto lerp = [&](int jj) {
                if (aux_.y_points <= 1)
                    return next[aux_.node_index(in, jj, 0)];
                double a = next[aux_.node_index(in, jj, w.k0)];
                double b = next[aux_.node_index(in, jj, w.k0 + 1)];
                return a + w.w * (b - a);
            };
            vu = lerp(j + 1);
            vm = lerp(j);
            vd = lerp(j - 1);
            return;
        }
        }
        vu = vm = vd = 0.0;
    }

    double root_value(const ValueSurface& surface) const {
        const auto& slice = surface.slices.front();
        if (aux_.kind != AuxKind::Integral || aux_.y_points <= 1)
            return slice[aux_.node_index(0, 0, 0)];
        InterpWeights w = y_bracket(aux_, 0.0);
        double a = slice[aux_.node_index(0, 0, w.k0)];
        double b = slice[aux_.node_index(0, 0, w.k0 + 1)];
        return a + w.w * (b - a);
    }
};

} // namespace

PricingResult price_upper(const LatticeSpec& spec, const Payoff& payoff) {
    return Engine(spec, payoff, /*maximize=*/true).run();
}

PricingResult price_lower(const LatticeSpec& spec, const Payoff& payoff) {
    return Engine(spec, payoff, /*maximize=*/false).run();
}

double Policy::fraction_high() const {
    std::size_t total = 0, high = 0;
    for (const auto& slice : slices) {
        total += slice.size();
        for (std::uint8_t c : slice)
            high += c;
    }
    return total ? static_cast<double>(high) / static_cast<double>(total) : 0.0;
}

// ---------------------------------------------------------------------------
// Hedge extraction and lookup.

HedgeStrategy extract_delta(const ValueSurface& surface) {
    const LatticeSpec& spec = surface.spec;
    const AuxInfo& aux = surface.aux;
    HedgeStrategy h;
    h.spec = spec;
    h.aux = aux;
    int last = aux.last_step;
    h.slices.resize(static_cast<std::size_t>(last));

    for (int i = 0; i < last; ++i) {
        auto& slice = h.slices[static_cast<std::size_t>(i)];
        slice.resize(aux.slice_size(i));
        const auto& next = surface.slices[static_cast<std::size_t>(i) + 1];
        const int in = i + 1;
        const int ak = aux.aux_count(i);
        const double inv2dx = 1.0 / (2.0 * spec.dx);

        for (int j = -i; j <= i; ++j) {
            for (int k = 0; k < ak; ++k) {
                double vu = 0.0, vd = 0.0;
                switch (aux.kind) {
                case AuxKind::None:
                    vu = next[aux.node_index(in, j + 1, 0)];
                    vd = next[aux.node_index(in, j - 1, 0)];
                    break;
                case AuxKind::RunningMax:
                    vu = next[aux.node_index(in, j + 1, std::max(k, j + 1))];
                    vd = next[aux.node_index(in, j - 1, std::max(k, j - 1))];
                    break;
                case AuxKind::Fixing: {
                    int ks = (i == aux.fix_step) ? j + aux.fix_step
                             : (i > aux.fix_step) ? k
                                                  : 0;
                    if (in <= aux.fix_step)
                        ks = 0;
                    vu = next[aux.node_index(in, j + 1, ks)];
                    vd = next[aux.node_index(in, j - 1, ks)];
                    break;
                }
                case AuxKind::Integral: {
                    double y = aux.y_value(k) +
                               aux.f_at_level[static_cast<std::size_t>(j + spec.n_steps)] *
                                   spec.step_dt(i);
                    InterpWeights w = y_bracket(aux, y);
                    auto lerp = [&](int jj) {
                        if (aux.y_points <= 1)
                            return next[aux.node_index(in, jj, 0)];
                        double a = next[aux.node_index(in, jj, w.k0)];
                        double b = next[aux.node_index(in, jj, w.k0 + 1)];
                        return a + w.w * (b - a);
                    };
                    vu = lerp(j + 1);
                    vd = lerp(j - 1);
                    break;
                }
                }
                slice[aux.node_index(i, j, k)] = (vu - vd) * inv2dx;
            }
        }
        if (aux.kind == AuxKind::RunningMax) {
            for (int j = 1; j <= i; ++j)
                for (int k = 0; k < j; ++k)
                    slice[aux.node_index(i, j, k)] = slice[aux.node_index(i, j, j)];
        }
    }
    return h;
}

HedgeStrategy HedgeStrategy::constant(const LatticeSpec& spec, double delta) {
    HedgeStrategy h;
    h.spec = spec;
    h.aux.kind = AuxKind::None;
    h.aux.last_step = spec.n_steps;
    h.slices.resize(static_cast<std::size_t>(spec.n_steps));
    for (int i = 0; i < spec.n_steps; ++i)
        h.slices[static_cast<std::size_t>(i)].assign(h.aux.slice_size(i), delta);
    return h;
}

double HedgeStrategy::lookup(double t, double x, double aux_value) const {
    int last = aux.last_step;
    if (last == 0 || slices.empty())
        return 0.0;
    if (t >= spec.time_knots[static_cast<std::size_t>(last)] -
                 kKnotMatchTol * std::max(1.0, spec.horizon()))
        return 0.0; // claim settled, flat position
    return lookup_at_step(std::min(spec.nearest_step(t), last - 1), x, aux_value);
}

double HedgeStrategy::lookup_at_step(int i, double x, double aux_value) const {
    if (i < 0 || i >= aux.last_step || slices.empty())
        return 0.0;

    // Space interpolation over the reachable range [-i, i].
    double u = x / spec.dx;
    int j0, j1;
    double wx;
    if (i == 0) {
        j0 = j1 = 0;
        wx = 0.0;
    } else {
        u = std::clamp(u, static_cast<double>(-i), static_cast<double>(i));
        j0 = std::min(static_cast<int>(std::floor(u)), i - 1);
        j0 = std::max(j0, -i);
        j1 = j0 + 1;
        wx = u - j0;
    }

    auto value_at = [&](int j) -> double {
        switch (aux.kind) {
        case AuxKind::None:
            return at(i, j, 0);
        case AuxKind::RunningMax: {
            double m = std::clamp(aux_value / spec.dx, 0.0, static_cast<double>(i));
            int k0 = std::min(static_cast<int>(m), std::max(i - 1, 0));
            double wk = (i == 0) ? 0.0 : m - k0;
            if (i == 0)
                return at(i, j, 0);
            return at(i, j, k0) + wk * (at(i, j, k0 + 1) - at(i, j, k0));
        }
        case AuxKind::Fixing: {
            if (i <= aux.fix_step)
                return at(i, j, 0);
            double f = std::clamp(aux_value / spec.dx, static_cast<double>(-aux.fix_step),
                                  static_cast<double>(aux.fix_step));
            int k0 = std::min(static_cast<int>(std::floor(f)) + aux.fix_step,
                              2 * aux.fix_step - 1);
            k0 = std::max(k0, 0);
            double wk = f + aux.fix_step - k0;
            if (aux.fix_step == 0)
                return at(i, j, 0);
            return at(i, j, k0) + wk * (at(i, j, k0 + 1) - at(i, j, k0));
        }
        case AuxKind::Integral: {
            if (aux.y_points <= 1)
                return at(i, j, 0);
            InterpWeights w = y_bracket(aux, aux_value);
            return at(i, j, w.k0) + w.w * (at(i, j, w.k0 + 1) - at(i, j, w.k0));
        }
        }
        return 0.0;
    };

    double lo = value_at(j0);
    if (j1 == j0)
        return lo;
    double hi = value_at(j1);
    return lo + wx * (hi - lo);
}

// ---------------------------------------------------------------------------
// Aux tracking along simulated paths.

AuxTracker::AuxTracker(const AuxInfo& aux, const LatticeSpec& spec) {
    kind_ = aux.kind;
    fix_step_ = aux.fix_step;
    if (kind_ == AuxKind::Integral)
        f_ = aux.integral_f;
    dt_.resize(static_cast<std::size_t>(spec.n_steps));
    for (int i = 0; i < spec.n_steps; ++i)
        dt_[static_cast<std::size_t>(i)] = spec.step_dt(i);
    reset();
}

AuxTracker::AuxTracker(const Payoff& payoff, const LatticeSpec& spec)
    : AuxTracker(make_aux_info(spec, payoff), spec) {}

void AuxTracker::reset() {
    acc_ = 0.0;
    fix_ = 0.0;
    max_ = 0.0;
    started_ = false;
}

double AuxTracker::observe(int knot, double b) {
    switch (kind_) {
    case AuxKind::None:
        return 0.0;
    case AuxKind::RunningMax:
        max_ = started_ ? std::max(max_, b) : b;
        started_ = true;
        return max_;
    case AuxKind::Fixing:
        if (knot == fix_step_)
            fix_ = b;
        return knot >= fix_step_ ? fix_ : 0.0;
    case AuxKind::Integral: {
        double current = acc_;
        if (knot < static_cast<int>(dt_.size()))
            acc_ += f_.eval1(b) * dt_[static_cast<std::size_t>(knot)];
        return current;
    }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------

ConvergenceReport convergence_sweep(const MeasureBand& band, const Payoff& payoff,
                                    std::span<const int> steps, LatticeOptions options) {
    if (steps.empty())
        throw ValidationError("convergence sweep needs at least one resolution");
    for (std::size_t i = 1; i < steps.size(); ++i)
        if (steps[i] <= steps[i - 1])
            throw ValidationError("convergence sweep resolutions must be increasing");

    ConvergenceReport report;
    for (int n : steps) {
        LatticeSpec spec = build_lattice(band, n, options);
        report.points.push_back({n, price_upper(spec, payoff).price});
    }

    // Fit |price_n - price_next| ~ C n^-p by least squares on logs.
    std::vector<double> lx, ly;
    double scale = 0.0;
    for (const auto& p : report.points)
        scale = std::max(scale, std::fabs(p.price));
    for (std::size_t i = 0; i + 1 < report.points.size(); ++i) {
        double diff = std::fabs(report.points[i].price - report.points[i + 1].price);
        if (diff <= 1e-13 * std::max(1.0, scale))
            continue;
        lx.push_back(std::log(static_cast<double>(report.points[i].n_steps)));
        ly.push_back(std::log(diff));
    }
    if (lx.size() < 2) {
        report.exact = true;
        report.estimated_order = std::numeric_limits<double>::quiet_NaN();
        return report;
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(lx.size());
    my /= static_cast<double>(lx.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        num += (lx[i] - mx) * (ly[i] - my);
        den += (lx[i] - mx) * (lx[i] - mx);
    }
    report.estimated_order = den > 0.0 ? -num / den : 0.0;
    return report;
}

} // namespace uvband
