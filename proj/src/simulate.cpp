#include "uvband/simulate.hpp"

#include "uvband/errors.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

namespace uvband {

namespace {

constexpr double kBandTol = 1e-9;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

int knot_index(std::span<const double> knots, double t) {
    double tol = 1e-9 * std::max(1.0, std::fabs(knots.back()));
    for (std::size_t i = 0; i < knots.size(); ++i)
        if (std::fabs(knots[i] - t) <= tol)
            return static_cast<int>(i);
    throw AlignmentError("time " + fmt(t) + " is not an ensemble knot");
}

} // namespace

std::string MeasureScheme::name() const {
    std::string base = std::visit(
        [](const auto& s) -> std::string {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, ConstVolScheme>) {
                return "const_vol(" + fmt(s.sigma) + ")";
            } else if constexpr (std::is_same_v<T, DeterministicProfileScheme>) {
                return s.label;
            } else if constexpr (std::is_same_v<T, BandEdgeScheme>) {
                return s.high ? "band_high" : "band_low";
            } else if constexpr (std::is_same_v<T, BandMixScheme>) {
                return "band_mix(" + fmt(s.weight) + ")";
            } else if constexpr (std::is_same_v<T, PiecewiseRandomScheme>) {
                return "regimes(" + std::to_string(s.n_regimes) + ",p=" + fmt(s.p_high) + ")";
            } else {
                return "policy_feedback";
            }
        },
        kind);
    return base + (law == IncrementLaw::Binomial ? "[binomial]" : "[gaussian]");
}

std::vector<MeasureScheme> default_battery(IncrementLaw law) {
    std::vector<MeasureScheme> battery;
    battery.push_back({BandEdgeScheme{false}, law});
    battery.push_back({BandMixScheme{0.5}, law});
    battery.push_back({BandEdgeScheme{true}, law});
    battery.push_back({PiecewiseRandomScheme{2, 0.5}, law});
    battery.push_back({PiecewiseRandomScheme{4, 0.5}, law});
    battery.push_back({PiecewiseRandomScheme{8, 0.5}, law});
    return battery;
}

// ---------------------------------------------------------------------------
// Path generation.

namespace {

// Per-path variance chooser over a fixed grid. Draw order per path is part
// of the reproducibility contract: regime coins first, then one increment
// draw per step.
class VarianceSource {
  public:
    VarianceSource(const MeasureScheme& scheme, std::span<const double> v_low,
                   std::span<const double> v_high, std::span<const double> dt)
        : scheme_(scheme), v_low_(v_low), v_high_(v_high), dt_(dt) {
        int n = static_cast<int>(dt.size());
        if (const auto* cv = std::get_if<ConstVolScheme>(&scheme_.kind)) {
            fixed_.resize(dt.size());
            for (int i = 0; i < n; ++i) {
                double v = cv->sigma * cv->sigma * dt_[static_cast<std::size_t>(i)];
                double lo = v_low_[static_cast<std::size_t>(i)];
                double hi = v_high_[static_cast<std::size_t>(i)];
                double slack = kBandTol * std::max(1.0, hi);
                if (v < lo - slack || v > hi + slack)
                    throw ValidationError("const-vol variance " + fmt(v) +
                                          " leaves the band [" + fmt(lo) + ", " + fmt(hi) +
                                          "] at step " + std::to_string(i));
                fixed_[static_cast<std::size_t>(i)] = std::clamp(v, lo, hi);
            }
        } else if (const auto* prof = std::get_if<DeterministicProfileScheme>(&scheme_.kind)) {
            if (static_cast<int>(prof->variances.size()) != n)
                throw ValidationError("deterministic profile has " +
                                      std::to_string(prof->variances.size()) +
                                      " entries for " + std::to_string(n) + " steps");
            fixed_.resize(dt.size());
            for (int i = 0; i < n; ++i) {
                double v = prof->variances[static_cast<std::size_t>(i)];
                double lo = v_low_[static_cast<std::size_t>(i)];
                double hi = v_high_[static_cast<std::size_t>(i)];
                double slack = kBandTol * std::max(1.0, hi);
                if (v < lo - slack || v > hi + slack)
                    throw ValidationError("profile variance " + fmt(v) + " leaves the band [" +
                                          fmt(lo) + ", " + fmt(hi) + "] at step " +
                                          std::to_string(i));
                fixed_[static_cast<std::size_t>(i)] = std::clamp(v, lo, hi);
            }
        } else if (const auto* edge = std::get_if<BandEdgeScheme>(&scheme_.kind)) {
            fixed_.assign(edge->high ? v_high_.begin() : v_low_.begin(),
                          edge->high ? v_high_.end() : v_low_.end());
        } else if (const auto* mix = std::get_if<BandMixScheme>(&scheme_.kind)) {
            if (!(mix->weight >= 0.0 && mix->weight <= 1.0))
                throw ValidationError("band mix weight must lie in [0, 1]");
            fixed_.resize(dt.size());
            for (int i = 0; i < n; ++i)
                fixed_[static_cast<std::size_t>(i)] =
                    v_low_[static_cast<std::size_t>(i)] +
                    mix->weight * (v_high_[static_cast<std::size_t>(i)] -
                                   v_low_[static_cast<std::size_t>(i)]);
        } else if (const auto* reg = std::get_if<PiecewiseRandomScheme>(&scheme_.kind)) {
            if (reg->n_regimes < 1)
                throw ValidationError("regime scheme needs n_regimes >= 1");
            if (!(reg->p_high >= 0.0 && reg->p_high <= 1.0))
                throw ValidationError("regime p_high must lie in [0, 1]");
            regime_of_step_.resize(dt.size());
            for (int i = 0; i < n; ++i)
                regime_of_step_[static_cast<std::size_t>(i)] =
                    std::min(reg->n_regimes - 1,
                             static_cast<int>(static_cast<long>(i) * reg->n_regimes / n));
        } else if (const auto* pf = std::get_if<PolicyFeedbackScheme>(&scheme_.kind)) {
            if (!pf->policy)
                throw ValidationError("policy feedback scheme has no policy");
            if (pf->spec.n_steps != n)
                throw ValidationError("policy feedback spec has " +
                                      std::to_string(pf->spec.n_steps) + " steps, ensemble has " +
                                      std::to_string(n));
            tracker_.emplace(pf->policy->aux, pf->spec);
        }
    }

    void start_path(Rng& rng) {
        if (const auto* reg = std::get_if<PiecewiseRandomScheme>(&scheme_.kind)) {
            regime_high_.resize(static_cast<std::size_t>(reg->n_regimes));
            for (int r = 0; r < reg->n_regimes; ++r)
                regime_high_[static_cast<std::size_t>(r)] = rng.next_unit() < reg->p_high;
        }
        if (tracker_)
            tracker_->reset();
    }

    double variance(int step, double b) {
        if (!fixed_.empty())
            return fixed_[static_cast<std::size_t>(step)];
        if (!regime_of_step_.empty()) {
            bool high = regime_high_[static_cast<std::size_t>(
                regime_of_step_[static_cast<std::size_t>(step)])];
            return high ? v_high_[static_cast<std::size_t>(step)]
                        : v_low_[static_cast<std::size_t>(step)];
        }
        const auto& pf = std::get<PolicyFeedbackScheme>(scheme_.kind);
        double aux_value = tracker_->observe(step, b);
        bool high = true; // beyond the claim's life any in-band choice works
        if (step < static_cast<int>(pf.policy->slices.size())) {
            const AuxInfo& aux = pf.policy->aux;
            const LatticeSpec& ps = pf.spec;
            int j = std::clamp(static_cast<int>(std::lround(b / ps.dx)), -step, step);
            int k = 0;
            switch (aux.kind) {
            case AuxKind::None:
                break;
            case AuxKind::RunningMax:
                k = std::clamp(static_cast<int>(std::lround(aux_value / ps.dx)), 0, step);
                break;
            case AuxKind::Fixing:
                if (step > aux.fix_step)
                    k = std::clamp(static_cast<int>(std::lround(aux_value / ps.dx)),
                                   -aux.fix_step, aux.fix_step) +
                        aux.fix_step;
                break;
            case AuxKind::Integral:
                if (aux.y_points > 1)
                    k = std::clamp(
                        static_cast<int>(std::lround((aux_value - aux.y_lo) / aux.y_spacing())),
                        0, aux.y_points - 1);
                break;
            }
            high = pf.policy->is_high(step, j, k);
        }
        return high ? v_high_[static_cast<std::size_t>(step)]
                    : v_low_[static_cast<std::size_t>(step)];
    }

  private:
    const MeasureScheme& scheme_;
    std::span<const double> v_low_, v_high_, dt_;
    std::vector<double> fixed_;
    std::vector<int> regime_of_step_;
    std::vector<bool> regime_high_;
    std::optional<AuxTracker> tracker_;
};

} // namespace

PathEnsemble sample_path_block(const MeasureBand& band, const MeasureScheme& scheme,
                               int first_path, int count, int n_steps, std::uint64_t seed) {
    if (count < 1 || first_path < 0)
        throw ValidationError("sample_paths needs first_path >= 0 and count >= 1");

    // PolicyFeedback replays its own grid; everything else uses the band's
    // equal-upper-variance grid for the requested resolution.
    LatticeSpec grid;
    if (const auto* pf = std::get_if<PolicyFeedbackScheme>(&scheme.kind)) {
        if (pf->spec.n_steps != n_steps)
            throw ValidationError("policy feedback spec resolution (" +
                                  std::to_string(pf->spec.n_steps) +
                                  ") does not match n_steps (" + std::to_string(n_steps) + ")");
        grid = pf->spec;
    } else {
        grid = build_lattice(band, n_steps);
    }

    std::vector<double> dt(static_cast<std::size_t>(n_steps));
    for (int i = 0; i < n_steps; ++i)
        dt[static_cast<std::size_t>(i)] = grid.step_dt(i);

    VarianceSource source(scheme, grid.v_low, grid.v_high, dt);

    PathEnsemble ens;
    ens.knots = grid.time_knots;
    ens.n_paths = count;
    ens.n_steps = n_steps;
    ens.first_path = first_path;
    ens.seed = seed;
    ens.scheme = scheme.name();
    ens.values.resize(static_cast<std::size_t>(count) * (n_steps + 1));
    ens.variances.resize(static_cast<std::size_t>(count) * n_steps);

    const bool binomial = scheme.law == IncrementLaw::Binomial;
    for (int p = 0; p < count; ++p) {
        Rng rng(seed, static_cast<std::uint64_t>(first_path + p));
        source.start_path(rng);
        double* b = ens.values.data() + static_cast<std::size_t>(p) * (n_steps + 1);
        double* v = ens.variances.data() + static_cast<std::size_t>(p) * n_steps;
        b[0] = 0.0;
        for (int i = 0; i < n_steps; ++i) {
            double vi = source.variance(i, b[i]);
            double sd = std::sqrt(vi);
            double db = binomial ? (rng.next_sign() ? 1.0 : -1.0) * quantize_increment(sd)
                                 : sd * rng.next_normal();
            v[i] = vi;
            b[i + 1] = b[i] + db;
        }
    }
    return ens;
}

PathEnsemble sample_paths(const MeasureBand& band, const MeasureScheme& scheme, int n_paths,
                          int n_steps, std::uint64_t seed) {
    return sample_path_block(band, scheme, 0, n_paths, n_steps, seed);
}

// ---------------------------------------------------------------------------

QVCurve realized_qv(const PathEnsemble& ensemble, int path_index) {
    if (path_index < 0 || path_index >= ensemble.n_paths)
        throw RangeError("path index out of range");
    auto b = ensemble.path(path_index);
    QVCurve curve;
    curve.values.resize(b.size());
    curve.values[0] = 0.0;
    double acc = 0.0;
    for (std::size_t i = 1; i < b.size(); ++i) {
        double db = b[i] - b[i - 1];
        acc += db * db;
        curve.values[i] = acc;
    }
    return curve;
}

double stochastic_integral(const HedgeStrategy& strategy, const PathEnsemble& ensemble,
                           int path_index) {
    if (path_index < 0 || path_index >= ensemble.n_paths)
        throw RangeError("path index out of range");
    if (static_cast<int>(strategy.spec.time_knots.size()) != static_cast<int>(ensemble.knots.size()))
        throw AlignmentError("strategy grid does not cover the ensemble knots");
    auto b = ensemble.path(path_index);
    AuxTracker tracker(strategy.aux, strategy.spec);
    double acc = 0.0;
    for (int i = 0; i < ensemble.n_steps; ++i) {
        double aux_value = tracker.observe(i, b[static_cast<std::size_t>(i)]);
        double h = strategy.lookup_at_step(i, b[static_cast<std::size_t>(i)], aux_value);
        acc += h * (b[static_cast<std::size_t>(i) + 1] - b[static_cast<std::size_t>(i)]);
    }
    return acc;
}

Estimate moment_estimate(const PathEnsemble& ensemble, int order, double s, double t) {
    if (order < 1 || order > 3)
        throw ValidationError("moment order must be 1, 2 or 3");
    int is = knot_index(ensemble.knots, s);
    int it = knot_index(ensemble.knots, t);
    if (is > it)
        throw RangeError("moment interval requires s <= t");
    double mean = 0.0, m2 = 0.0;
    long n = 0;
    for (int p = 0; p < ensemble.n_paths; ++p) {
        auto b = ensemble.path(p);
        double d = b[static_cast<std::size_t>(it)] - b[static_cast<std::size_t>(is)];
        double x = 1.0;
        for (int q = 0; q < 2 * order; ++q)
            x *= d;
        ++n;
        double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }
    Estimate e;
    e.value = mean;
    e.se = n > 1 ? std::sqrt(m2 / (static_cast<double>(n) - 1.0) / static_cast<double>(n)) : 0.0;
    return e;
}

std::pair<std::vector<double>, std::vector<double>>
qv_band_curves(std::span<const double> v_low, std::span<const double> v_high) {
    // Same accumulation as realized_qv over quantized extreme increments:
    // per-step monotonicity then survives rounding, making the sandwich an
    // exact statement.
    std::vector<double> lo(v_low.size() + 1, 0.0), hi(v_high.size() + 1, 0.0);
    double al = 0.0, ah = 0.0;
    for (std::size_t i = 0; i < v_low.size(); ++i) {
        double sl = quantize_increment(std::sqrt(v_low[i]));
        double sh = quantize_increment(std::sqrt(v_high[i]));
        al += sl * sl;
        ah += sh * sh;
        lo[i + 1] = al;
        hi[i + 1] = ah;
    }
    return {std::move(lo), std::move(hi)};
}

QvContainment qv_containment(const MeasureBand& band, const PathEnsemble& ensemble) {
    std::vector<double> v_low(static_cast<std::size_t>(ensemble.n_steps));
    std::vector<double> v_high(static_cast<std::size_t>(ensemble.n_steps));
    for (int i = 0; i < ensemble.n_steps; ++i) {
        auto [dl, du] = band_increment(band, ensemble.knots[static_cast<std::size_t>(i)],
                                       ensemble.knots[static_cast<std::size_t>(i) + 1]);
        v_low[static_cast<std::size_t>(i)] = dl;
        v_high[static_cast<std::size_t>(i)] = du;
    }
    auto [lo, hi] = qv_band_curves(v_low, v_high);

    QvContainment out;
    for (int p = 0; p < ensemble.n_paths; ++p) {
        auto b = ensemble.path(p);
        double acc = 0.0;
        ++out.paths_checked;
        for (int i = 1; i <= ensemble.n_steps; ++i) {
            double db = b[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i) - 1];
            acc += db * db;
            ++out.knots_checked;
            if (acc < lo[static_cast<std::size_t>(i)] || acc > hi[static_cast<std::size_t>(i)])
                ++out.violations;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// QV approximation error on uniform subdivisions.

namespace {

// Uniform-grid variance bounds over [0, t].
struct UniformGrid {
    std::vector<double> knots;
    std::vector<double> v_low, v_high, dt;
};

UniformGrid uniform_grid(const MeasureBand& band, double t, int steps) {
    UniformGrid g;
    g.knots.resize(static_cast<std::size_t>(steps) + 1);
    for (int i = 0; i <= steps; ++i)
        g.knots[static_cast<std::size_t>(i)] = t * static_cast<double>(i) / steps;
    g.v_low.resize(static_cast<std::size_t>(steps));
    g.v_high.resize(static_cast<std::size_t>(steps));
    g.dt.assign(static_cast<std::size_t>(steps), t / steps);
    for (int i = 0; i < steps; ++i) {
        auto [dl, du] = band_increment(band, g.knots[static_cast<std::size_t>(i)],
                                       g.knots[static_cast<std::size_t>(i) + 1]);
        g.v_low[static_cast<std::size_t>(i)] = dl;
        g.v_high[static_cast<std::size_t>(i)] = du;
    }
    return g;
}

std::vector<MeasureScheme> qv_battery() {
    std::vector<MeasureScheme> battery;
    battery.push_back({BandEdgeScheme{false}, IncrementLaw::Gaussian});
    battery.push_back({BandMixScheme{0.5}, IncrementLaw::Gaussian});
    battery.push_back({BandEdgeScheme{true}, IncrementLaw::Gaussian});
    battery.push_back({PiecewiseRandomScheme{4, 0.5}, IncrementLaw::Gaussian});
    battery.push_back({PiecewiseRandomScheme{8, 0.5}, IncrementLaw::Gaussian});
    return battery;
}

} // namespace

QvApproxSweep qv_approx_sweep(const MeasureBand& band, double t,
                              std::span<const int> subdivisions, const QvApproxParams& params) {
    if (subdivisions.empty())
        throw ValidationError("qv approximation sweep needs at least one subdivision count");
    if (!(t > 0.0) || t > band.horizon)
        throw RangeError("qv approximation time must lie in (0, horizon]");
    for (int n : subdivisions) {
        if (n < 1)
            throw ValidationError("subdivision count must be >= 1");
        if (n > params.fine_steps || params.fine_steps % n != 0)
            throw RangeError("subdivision count " + std::to_string(n) +
                             " must divide the fine grid resolution " +
                             std::to_string(params.fine_steps));
    }

    UniformGrid grid = uniform_grid(band, t, params.fine_steps);
    auto battery = qv_battery();

    QvApproxSweep sweep;
    sweep.results.resize(subdivisions.size());
    for (std::size_t m = 0; m < subdivisions.size(); ++m) {
        sweep.results[m].subdivisions = subdivisions[m];
        sweep.results[m].bound = 4.0 * band.holder_c *
                                 std::pow(t / subdivisions[m], band.holder_alpha) *
                                 band.upper_at(t);
    }

    std::vector<double> path(static_cast<std::size_t>(params.fine_steps) + 1);
    for (std::size_t si = 0; si < battery.size(); ++si) {
        const MeasureScheme& scheme = battery[si];
        VarianceSource source(scheme, grid.v_low, grid.v_high, grid.dt);
        std::uint64_t scheme_seed = derive_seed(params.seed, si);

        // Running mean/variance of (S^n - QV)^2 per subdivision count.
        std::vector<double> mean(subdivisions.size(), 0.0), m2(subdivisions.size(), 0.0);
        for (int p = 0; p < params.n_paths; ++p) {
            Rng rng(scheme_seed, static_cast<std::uint64_t>(p));
            source.start_path(rng);
            path[0] = 0.0;
            double qv = 0.0;
            for (int i = 0; i < params.fine_steps; ++i) {
                double vi = source.variance(i, path[static_cast<std::size_t>(i)]);
                double db = std::sqrt(vi) * rng.next_normal();
                path[static_cast<std::size_t>(i) + 1] = path[static_cast<std::size_t>(i)] + db;
                qv += db * db;
            }
            for (std::size_t m = 0; m < subdivisions.size(); ++m) {
                int n = subdivisions[m];
                int block = params.fine_steps / n;
                double coarse = 0.0;
                for (int q = 0; q < n; ++q) {
                    double d = path[static_cast<std::size_t>((q + 1) * block)] -
                               path[static_cast<std::size_t>(q * block)];
                    coarse += d * d;
                }
                double err = coarse - qv;
                double x = err * err;
                double delta = x - mean[m];
                mean[m] += delta / static_cast<double>(p + 1);
                m2[m] += delta * (x - mean[m]);
            }
        }
        for (std::size_t m = 0; m < subdivisions.size(); ++m) {
            double se = params.n_paths > 1
                            ? std::sqrt(m2[m] / (params.n_paths - 1.0) / params.n_paths)
                            : 0.0;
            sweep.results[m].per_scheme.push_back({scheme.name(), mean[m], se});
        }
    }

    for (auto& result : sweep.results) {
        const auto* best = &result.per_scheme.front();
        for (const auto& e : result.per_scheme)
            if (e.value > best->value)
                best = &e;
        result.max_value = best->value;
        result.max_se = best->se;
    }

    // Log-log slope of the max estimate against the subdivision count.
    if (sweep.results.size() >= 2) {
        double mx = 0.0, my = 0.0;
        for (const auto& r : sweep.results) {
            mx += std::log(static_cast<double>(r.subdivisions));
            my += std::log(std::max(r.max_value, 1e-300));
        }
        mx /= static_cast<double>(sweep.results.size());
        my /= static_cast<double>(sweep.results.size());
        double num = 0.0, den = 0.0;
        for (const auto& r : sweep.results) {
            double lx = std::log(static_cast<double>(r.subdivisions)) - mx;
            num += lx * (std::log(std::max(r.max_value, 1e-300)) - my);
            den += lx * lx;
        }
        sweep.fitted_slope = den > 0.0 ? num / den : 0.0;
    }
    return sweep;
}

QvApproxResult qv_approx_error(const MeasureBand& band, double t, int subdivisions,
                               const QvApproxParams& params) {
    int ns[1] = {subdivisions};
    return qv_approx_sweep(band, t, ns, params).results.front();
}

// ---------------------------------------------------------------------------
// CSV round-trip.

void write_ensemble_csv(std::ostream& os, const PathEnsemble& ensemble) {
    os.precision(17);
    os << "# uvband-ensemble scheme=" << ensemble.scheme << " seed=" << ensemble.seed
       << " generator=" << ensemble.generator << " n_paths=" << ensemble.n_paths
       << " n_steps=" << ensemble.n_steps << " first_path=" << ensemble.first_path << "\n";
    os << "path,knot,time,B,v\n";
    for (int p = 0; p < ensemble.n_paths; ++p) {
        auto b = ensemble.path(p);
        auto v = ensemble.path_variances(p);
        for (int i = 0; i <= ensemble.n_steps; ++i) {
            os << ensemble.first_path + p << "," << i << ","
               << ensemble.knots[static_cast<std::size_t>(i)] << ","
               << b[static_cast<std::size_t>(i)] << ",";
            if (i < ensemble.n_steps)
                os << v[static_cast<std::size_t>(i)];
            os << "\n";
        }
    }
}

PathEnsemble read_ensemble_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("# uvband-ensemble", 0) != 0)
        throw IoError("ensemble CSV must start with a '# uvband-ensemble' header");

    PathEnsemble ens;
    std::istringstream header(line.substr(std::string("# uvband-ensemble").size()));
    std::string token;
    while (header >> token) {
        auto eq = token.find('=');
        if (eq == std::string::npos)
            continue;
        std::string key = token.substr(0, eq);
        std::string value = token.substr(eq + 1);
        if (key == "scheme")
            ens.scheme = value;
        else if (key == "seed")
            ens.seed = std::stoull(value);
        else if (key == "generator")
            ens.generator = value;
        else if (key == "n_paths")
            ens.n_paths = std::stoi(value);
        else if (key == "n_steps")
            ens.n_steps = std::stoi(value);
        else if (key == "first_path")
            ens.first_path = std::stoi(value);
    }
    if (ens.n_paths < 1 || ens.n_steps < 1)
        throw IoError("ensemble CSV header lacks n_paths / n_steps");
    if (!std::getline(is, line) || line != "path,knot,time,B,v")
        throw IoError("ensemble CSV column header mismatch");

    ens.knots.assign(static_cast<std::size_t>(ens.n_steps) + 1, 0.0);
    ens.values.assign(static_cast<std::size_t>(ens.n_paths) * (ens.n_steps + 1), 0.0);
    ens.variances.assign(static_cast<std::size_t>(ens.n_paths) * ens.n_steps, 0.0);

    long rows = 0;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        std::istringstream row(line);
        std::string cell;
        auto next_cell = [&]() {
            if (!std::getline(row, cell, ','))
                throw IoError("ensemble CSV row is truncated: " + line);
            return cell;
        };
        int p = std::stoi(next_cell()) - ens.first_path;
        int i = std::stoi(next_cell());
        double time = std::stod(next_cell());
        double b = std::stod(next_cell());
        std::string vcell;
        std::getline(row, vcell, ',');
        if (p < 0 || p >= ens.n_paths || i < 0 || i > ens.n_steps)
            throw IoError("ensemble CSV row out of range: " + line);
        ens.knots[static_cast<std::size_t>(i)] = time;
        ens.values[static_cast<std::size_t>(p) * (ens.n_steps + 1) +
                   static_cast<std::size_t>(i)] = b;
        if (i < ens.n_steps && !vcell.empty())
            ens.variances[static_cast<std::size_t>(p) * ens.n_steps +
                          static_cast<std::size_t>(i)] = std::stod(vcell);
        ++rows;
    }
    if (rows != static_cast<long>(ens.n_paths) * (ens.n_steps + 1))
        throw IoError("ensemble CSV row count mismatch");
    return ens;
}

} // namespace uvband
