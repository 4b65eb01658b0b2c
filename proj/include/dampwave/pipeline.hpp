#pragma once

// Scenario pipeline: assemble -> eigencurves -> thresholds -> intersections
// -> block spectrum and cross-validation -> evolution, plus the alpha sweep.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "dampwave/block_operator.hpp"
#include "dampwave/coefficients.hpp"
#include "dampwave/config.hpp"
#include "dampwave/eigencurve.hpp"
#include "dampwave/error.hpp"
#include "dampwave/evolution.hpp"
#include "dampwave/grid.hpp"
#include "dampwave/intersection.hpp"
#include "dampwave/io.hpp"
#include "dampwave/threshold.hpp"

namespace dampwave {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kOutputDirEnv = "DAMPWAVE_OUTPUT_DIR";

// An error raised inside a pipeline stage. Keeps the exit code of the
// original error.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& message, int exit_code)
        : Error("[" + stage + "] " + message), stage_(std::move(stage)), exit_code_(exit_code) {}

    const std::string& stage() const noexcept { return stage_; }
    int exit_code() const noexcept { return exit_code_; }

private:
    std::string stage_;
    int exit_code_;
};

inline int exit_code_for(const std::exception& e) {
    if (const auto* s = dynamic_cast<const StageError*>(&e)) return s->exit_code();
    if (dynamic_cast<const ValidationError*>(&e)) return 2;
    if (dynamic_cast<const SolverError*>(&e) || dynamic_cast<const RangeError*>(&e)) return 3;
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const CoefficientError*>(&e) ||
        dynamic_cast<const DomainError*>(&e))
        return 4;
    return 1;
}

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct RunManifest {
    std::string config_hash;
    std::string tool_version = kToolVersion;
    std::string scenario;
    std::string command;
    std::string output_directory;
    std::vector<StageTiming> timings;
    std::vector<std::string> artifacts;
    std::vector<std::string> warnings;
    std::string status = "ok";
    std::string failed_stage;
    std::string error;
    int exit_code = 0;
    Json summary = Json::object();

    Json to_json() const {
        Json t = Json::array();
        for (const auto& s : timings) t.push_back({{"stage", s.stage}, {"seconds", s.seconds}});
        return {{"config_hash", config_hash},
                {"tool_version", tool_version},
                {"scenario", scenario},
                {"command", command},
                {"output_directory", output_directory},
                {"timings", t},
                {"artifacts", artifacts},
                {"warnings", warnings},
                {"status", status},
                {"failed_stage", failed_stage},
                {"error", error},
                {"exit_code", exit_code},
                {"summary", summary}};
    }
};

// Grid and sampled coefficients of a configuration.
struct Scenario {
    ScenarioConfig config;
    Grid grid;
    CoefficientSet coeffs;

    static Scenario build(const ScenarioConfig& c) {
        if (c.axes.empty()) throw ConfigError("'domain.axes' is empty");
        Grid g = build_grid(c.domain());
        CoefficientSet co = sample_coefficients(g, c.coefficients.a, c.coefficients.b, c.declaration());
        return {c, std::move(g), std::move(co)};
    }

    EigenSolveOptions eigen() const {
        EigenSolveOptions o;
        o.tol = config.solver.eigen_tol;
        o.seed = config.seed;
        return o;
    }

    IntersectOptions intersect_options() const {
        IntersectOptions o;
        o.root_tol = config.solver.root_tol;
        o.tangency_tol = config.solver.tangency_tol;
        return o;
    }

    SpectrumOptions spectrum_options() const {
        SpectrumOptions o;
        o.dense_budget = config.solver.dense_budget;
        return o;
    }

    // gamma_inf(0) = b_inf unless declared.
    std::optional<double> gamma_inf_0() const { return coeffs.gamma_inf_0 ? coeffs.gamma_inf_0 : coeffs.b_inf; }
};

// Only curves with gamma_n(0) <= alpha^2 ||a||^2 / 4 can meet the parabola,
// so one more than their number covers every real eigenvalue.
inline int auto_curve_count(const Scenario& s, double alpha_max, int cap = 64) {
    const int n = s.grid.size();
    const double a = s.coeffs.a_sup_norm();
    const double tau = 0.25 * alpha_max * alpha_max * a * a;
    const auto op = assemble_schrodinger(s.grid, s.coeffs, 0.0);
    int k = std::min(n, 8);
    while (true) {
        const auto sl = lowest_eigenvalues(op, k, s.eigen());
        const auto below = std::count_if(sl.eigenvalues.begin(), sl.eigenvalues.end(), [&](double g) { return g <= tau; });
        if (below < k || k >= std::min(n, cap)) return std::clamp(static_cast<int>(below) + 1, std::min(2, n), std::min(n, cap));
        k = std::min({2 * k, n, cap});
    }
}

inline std::shared_ptr<const CurveSampler> make_sampler(const Scenario& s, int k) {
    CurveSamplerOptions o;
    o.k = k;
    o.eigen = s.eigen();
    o.classification_tol = s.config.solver.classification_tol;
    return std::make_shared<const CurveSampler>(s.grid, s.coeffs, o);
}

inline MuRange scenario_mu_range(const Scenario& s, double alpha_max) {
    if (s.config.curves.mu_lower) return {*s.config.curves.mu_lower, *s.config.curves.mu_upper};
    const auto g = lowest_eigenvalues(assemble_schrodinger(s.grid, s.coeffs, 0.0), 1, s.eigen());
    return default_mu_range(g.eigenvalues.front(), s.coeffs.a_sup_norm(), alpha_max);
}

inline EigencurveTable scenario_table(const Scenario& s, double alpha_max, int k) {
    return sample_eigencurves(make_sampler(s, k), scenario_mu_range(s, alpha_max), s.config.curves.samples);
}

// Adds samples so that mu = alpha lambda of every real eigenvalue lies in the table.
inline bool cover_real_eigenvalues(EigencurveTable& table, const SpectrumReport& rep) {
    double lo = table.mu_min(), hi = table.mu_max();
    for (const auto& p : rep.real) {
        lo = std::min(lo, rep.alpha * p.lambda);
        hi = std::max(hi, rep.alpha * p.lambda);
    }
    if (lo >= table.mu_min() && hi <= table.mu_max()) return false;
    std::vector<double> extra;
    if (lo < table.mu_min()) extra.push_back(lo - 0.05 * std::abs(lo));
    if (hi > table.mu_max()) extra.push_back(hi + 0.05 * std::abs(hi));
    table = with_samples(table, extra);
    return true;
}

struct AlphaPoint {
    bool predicted = false;  // a discrete positive real point on the curves
    bool validated = false;  // confirmed by the block operator
    std::vector<double> predicted_lambdas;
    std::vector<double> block_lambdas;
    std::string note;
};

struct SweepResult {
    bool found = false;
    double alpha0 = std::numeric_limits<double>::quiet_NaN();
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    double scanned_lo = 0.0;
    double scanned_hi = 0.0;
    int evaluations = 0;
    // Threshold of curve 1 on mu > 0 from the eigencurve path alone.
    double curve_threshold = std::numeric_limits<double>::infinity();
    std::vector<std::string> warnings;
    std::string note;

    double width() const { return bracket_hi - bracket_lo; }

    Json to_json() const {
        return {{"found", found},
                {"alpha0", number_json(alpha0)},
                {"bracket", {bracket_lo, bracket_hi}},
                {"bracket_width", width()},
                {"scanned", {scanned_lo, scanned_hi}},
                {"evaluations", evaluations},
                {"curve_threshold", number_json(curve_threshold)},
                {"warnings", warnings},
                {"note", note}};
    }
};

// Positive real spectrum at alpha, predicted by the lowest curve and
// confirmed by a real-window block solve. Both paths must agree.
inline AlphaPoint positive_real_point(const Scenario& s, const EigencurveTable& table, double alpha) {
    AlphaPoint r;
    auto io = s.intersect_options();
    io.curves = {0};
    io.side = 1;
    io.include_essential = false;
    const auto records = intersect_all(table, alpha, io);
    std::vector<IntersectionRecord> discrete;
    for (const auto& rec : records) {
        if (rec.out_of_range()) continue;
        if (rec.classification != SpectralClass::Discrete) {
            r.note = "non-discrete intersection ignored";
            continue;
        }
        if (rec.lambda > 0.0) {
            discrete.push_back(rec);
            r.predicted_lambdas.push_back(rec.lambda);
        }
    }
    r.predicted = !discrete.empty();
    if (!r.predicted) return r;
    const auto op = assemble_block(s.grid, s.coeffs, alpha);
    SpectrumReport rep;
    try {
        rep = spectrum_window(op, window_from_intersections(discrete), s.spectrum_options());
    } catch (const SolverError& e) {
        r.note = e.what();
        return r;
    }
    for (const auto& p : rep.real)
        if (p.lambda > 0.0) r.block_lambdas.push_back(p.lambda);
    std::erase_if(rep.real, [&](const RealEigenpair& p) {
        const double mu = alpha * p.lambda;
        return mu < table.mu_min() || mu > table.mu_max();
    });
    const auto v = cross_validate(rep, table, alpha, discrete, s.config.solver.match_tol, s.config.solver.tangency_tol);
    r.validated = v.ok() && !r.block_lambdas.empty();
    if (!v.ok()) r.note = "eigencurve and block paths disagree at alpha = " + std::to_string(alpha);
    return r;
}

// Bisection for the smallest alpha with a validated positive real eigenvalue.
inline SweepResult sweep_alpha(const Scenario& s, double alpha_min, double alpha_max, double tol = 1e-2) {
    if (!(alpha_min > 0.0 && alpha_max > alpha_min && tol > 0.0)) throw DomainError("sweep needs 0 < alpha_min < alpha_max and tol > 0");
    SweepResult r;
    r.scanned_lo = alpha_min;
    r.scanned_hi = alpha_max;
    const auto table = scenario_table(s, alpha_max, std::min(2, s.grid.size()));
    try {
        r.curve_threshold = thresholds(table, 0, 1, ThresholdOptions{1e-9, s.intersect_options()}).alpha_threshold;
    } catch (const Error& e) {
        r.warnings.push_back(std::string("curve threshold unavailable: ") + e.what());
    }
    const auto test = [&](double a) {
        ++r.evaluations;
        const auto p = positive_real_point(s, table, a);
        if (p.predicted && !p.validated) r.warnings.push_back(p.note.empty() ? "prediction not confirmed by the block operator" : p.note);
        return p.validated;
    };
    if (!test(alpha_max)) {
        r.bracket_lo = alpha_min;
        r.bracket_hi = alpha_max;
        r.note = "no validated positive real eigenvalue for alpha in [" + format_number(alpha_min) + ", " +
                 format_number(alpha_max) + "]";
        return r;
    }
    r.found = true;
    if (test(alpha_min)) {
        r.bracket_lo = 0.0;
        r.bracket_hi = alpha_min;
        r.alpha0 = alpha_min;
        r.note = "unstable already at alpha_min; alpha0 <= alpha_min";
        return r;
    }
    double lo = alpha_min, hi = alpha_max;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (test(mid) ? hi : lo) = mid;
    }
    r.bracket_lo = lo;
    r.bracket_hi = hi;
    r.alpha0 = 0.5 * (lo + hi);
    return r;
}

enum class PipelineCommand { Run, Curves, Spectrum, Evolve, Validate, Sweep };

inline const char* to_string(PipelineCommand c) {
    switch (c) {
        case PipelineCommand::Run: return "run";
        case PipelineCommand::Curves: return "curves";
        case PipelineCommand::Spectrum: return "spectrum";
        case PipelineCommand::Evolve: return "evolve";
        case PipelineCommand::Validate: return "validate";
        case PipelineCommand::Sweep: return "sweep";
    }
    return "?";
}

struct PipelineOptions {
    PipelineCommand command = PipelineCommand::Run;
    std::optional<double> alpha;  // overrides alpha.values
    std::optional<double> alpha_min, alpha_max;
    std::optional<double> T, dt;
    // Empty: DAMPWAVE_OUTPUT_DIR, else the configured directory.
    std::string output_directory;
    bool write = true;
};

namespace detail {

inline std::string alpha_tag(double a) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "alpha_%g", a);
    return buf;
}

class StageRunner {
public:
    StageRunner(RunManifest& m, std::filesystem::path dir, bool write) : m_(m), dir_(std::move(dir)), write_(write) {}

    template <class F>
    auto run(const std::string& stage, F&& fn) {
        const auto start = std::chrono::steady_clock::now();
        const auto stop = [&] {
            m_.timings.push_back({stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
        };
        try {
            if constexpr (std::is_void_v<decltype(fn())>) {
                fn();
                stop();
            } else {
                auto out = fn();
                stop();
                return out;
            }
        } catch (const StageError&) {
            stop();
            throw;
        } catch (const std::exception& e) {
            stop();
            m_.status = "failed";
            m_.failed_stage = stage;
            m_.error = e.what();
            m_.exit_code = exit_code_for(e);
            throw StageError(stage, e.what(), m_.exit_code);
        }
    }

    void text(const std::string& name, const std::string& content) {
        if (!write_) return;
        write_text(dir_ / name, content);
        m_.artifacts.push_back(name);
    }

    void json(const std::string& name, const Json& j) { text(name, j.dump(2) + "\n"); }

    void manifest() {
        if (!write_) return;
        m_.artifacts.push_back("manifest.json");
        write_text(dir_ / "manifest.json", m_.to_json().dump(2) + "\n");
    }

private:
    RunManifest& m_;
    std::filesystem::path dir_;
    bool write_;
};

inline StateVector initial_state(const Scenario& s, const BlockOperator& op, const SpectrumReport* rep) {
    const auto e = op.energy();
    if (s.config.evolution.initial == "top-eigenvector" && rep && !rep->real.empty()) {
        const auto& p = rep->real.back();
        return StateVector::make(e, p.v1, p.lambda * p.v1);
    }
    std::mt19937_64 rng(s.config.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vector p1(op.n()), p2(op.n());
    for (Eigen::Index i = 0; i < op.n(); ++i) p1[i] = u(rng);
    for (Eigen::Index i = 0; i < op.n(); ++i) p2[i] = u(rng);
    return StateVector::make(e, p1, p2);
}

}  // namespace detail

// Runs the stages selected by opts.command and writes CSV/JSON artifacts and
// manifest.json. Stage failures are rethrown as StageError after the manifest
// is written; a cross-validation mismatch sets exit_code 2.
inline RunManifest run_pipeline(const ScenarioConfig& config, const PipelineOptions& opts = {}) {
    RunManifest m;
    m.config_hash = config_hash(config);
    m.scenario = config.name;
    m.command = to_string(opts.command);
    std::string dir = opts.output_directory;
    if (dir.empty()) {
        const char* env = std::getenv(kOutputDirEnv);
        dir = env && *env ? env : config.output_directory;
    }
    m.output_directory = dir;
    detail::StageRunner st(m, dir, opts.write);
    const auto cmd = opts.command;

    try {
        std::vector<double> alphas = opts.alpha ? std::vector<double>{*opts.alpha} : config.alphas;
        for (double a : alphas)
            if (!(a > 0.0)) throw StageError("config", "alpha must be positive", 4);
        if (alphas.empty() && (cmd == PipelineCommand::Spectrum || cmd == PipelineCommand::Evolve || cmd == PipelineCommand::Validate))
            throw StageError("config", "no alpha given (set alpha.values or pass --alpha)", 4);

        const Scenario s = st.run("assemble", [&] { return Scenario::build(config); });
        m.summary["grid_unknowns"] = s.grid.size();
        m.summary["a_min"] = s.coeffs.a_min;
        m.summary["a_max"] = s.coeffs.a_max;
        if (s.coeffs.a_inf_estimated) m.warnings.push_back("a_inf estimated from boundary samples");
        if (s.coeffs.b_inf_estimated) m.warnings.push_back("b_inf estimated from boundary samples");

        if (cmd == PipelineCommand::Sweep || (cmd == PipelineCommand::Run && config.sweep)) {
            const double lo = opts.alpha_min.value_or(config.sweep ? config.sweep->min : 0.1);
            const double hi = opts.alpha_max.value_or(config.sweep ? config.sweep->max : 10.0);
            const double tol = config.sweep ? config.sweep->tol : 1e-2;
            const auto r = st.run("sweep", [&] { return sweep_alpha(s, lo, hi, tol); });
            for (const auto& w : r.warnings) m.warnings.push_back("sweep: " + w);
            st.json("sweep.json", r.to_json());
            m.summary["sweep"] = r.to_json();
            if (cmd == PipelineCommand::Sweep) {
                st.manifest();
                return m;
            }
        }

        double alpha_max = 0.0;
        for (double a : alphas) alpha_max = std::max(alpha_max, a);
        if (alpha_max == 0.0) alpha_max = 1.0;

        std::optional<EigencurveTable> table;
        const bool need_table = cmd != PipelineCommand::Spectrum && cmd != PipelineCommand::Evolve;
        if (need_table) {
            table = st.run("eigencurves", [&] {
                int k = config.curves.k ? std::min(*config.curves.k, s.grid.size()) : auto_curve_count(s, alpha_max);
                if (!config.curves.k && k == std::min(s.grid.size(), 64))
                    m.warnings.push_back("automatic curve count capped at " + std::to_string(k));
                return scenario_table(s, alpha_max, k);
            });
            st.text("curves.csv", curves_csv(*table));
            const auto lip = check_lipschitz(*table);
            if (!lip.ok()) m.warnings.push_back(std::to_string(lip.violations.size()) + " Lipschitz violations in the eigencurve table");
            if (!rows_ordered(*table)) m.warnings.push_back("eigencurve rows are not ordered");
            m.summary["curves"] = {{"k", table->k()},
                                   {"samples", table->samples()},
                                   {"mu_range", {table->mu_min(), table->mu_max()}},
                                   {"lipschitz", to_json(lip)}};
            if (cmd == PipelineCommand::Curves) {
                st.manifest();
                return m;
            }
        }

        if (cmd == PipelineCommand::Run) {
            st.run("thresholds", [&] {
                Json out = Json::array();
                const int nc = std::min(table->k(), 4);
                // gamma_n(mu) >= gamma_n(0) - ||a|| |mu| puts every threshold above
                // 2 sqrt(gamma_n(0)) / ||a||; sample to twice that.
                const double g = table->gamma(nc - 1, table->index_of(0.0).value_or(0));
                const double a = s.coeffs.a_sup_norm();
                const double reach = a > 0.0 ? 4.0 * std::sqrt(std::max(g, 0.0)) / a : 0.0;
                const EigencurveTable tt = reach > alpha_max && !config.curves.mu_lower
                                               ? scenario_table(s, reach, nc)
                                               : *table;
                ThresholdOptions to;
                to.rel_tol = 1e-7;
                to.intersect = s.intersect_options();
                for (int side : {1, -1}) {
                    for (int n = 0; n < nc; ++n) {
                        try {
                            const auto t = thresholds(tt, n, side, to);
                            if (t.range_limited)
                                m.warnings.push_back("threshold of curve " + std::to_string(n + 1) +
                                                     " is range limited; widen curves.mu_range");
                            out.push_back(to_json(t));
                        } catch (const RangeError& e) {
                            m.warnings.push_back("threshold of curve " + std::to_string(n + 1) + ": " + e.what());
                        }
                    }
                }
                st.json("thresholds.json", out);
                m.summary["thresholds"] = out;
            });
        }

        Json per_alpha = Json::array();
        bool mismatch = false;
        for (double alpha : alphas) {
            const std::string tag = detail::alpha_tag(alpha);
            Json summary = {{"alpha", alpha}};
            std::optional<RealPointCounts> counts;
            if (table) {
                counts = st.run("intersections", [&] { return count_real_points(*table, alpha, s.intersect_options()); });
                st.text(tag + "/intersections.csv", intersections_csv(counts->records));
                summary["counts"] = to_json(*counts);
                int ambiguous = counts->positive.ambiguous + counts->negative.ambiguous;
                if (ambiguous > 0) m.warnings.push_back(tag + ": " + std::to_string(ambiguous) + " ambiguous intersections");
                if (const auto g0 = s.gamma_inf_0(); g0 && s.coeffs.a_inf) {
                    const auto ess = essential_interval(*g0, *s.coeffs.a_inf, alpha);
                    summary["essential_interval"] =
                        ess ? Json{ess->lower, ess->upper} : Json(nullptr);
                }
            }

            std::optional<SpectrumReport> rep;
            const auto op = assemble_block(s.grid, s.coeffs, alpha);
            const bool need_spectrum = cmd != PipelineCommand::Evolve || config.evolution.initial == "top-eigenvector";
            if (need_spectrum) {
                rep = st.run("spectrum", [&] {
                    const auto so = s.spectrum_options();
                    if (op.dimension() <= so.dense_budget) return spectrum_full(op, so);
                    if (!counts) throw SolverError("block dimension exceeds the dense budget and no intersections are available as seeds", 0.0);
                    return spectrum_window(op, window_from_intersections(counts->records), so);
                });
                for (const auto& w : rep->warnings) m.warnings.push_back(tag + ": " + w);
                st.text(tag + "/spectrum.csv", spectrum_csv(*rep));
            }

            if (table && rep && cmd != PipelineCommand::Spectrum) {
                const auto v = st.run("validate", [&] {
                    if (cover_real_eigenvalues(*table, *rep))
                        m.warnings.push_back(tag + ": mu range extended to [" + format_number(table->mu_min()) + ", " +
                                             format_number(table->mu_max()) + "] to cover the real eigenvalues");
                    return cross_validate(*rep, *table, alpha, counts->records, config.solver.match_tol,
                                          config.solver.tangency_tol);
                });
                st.json(tag + "/validation.json", to_json(v));
                summary["validation"] = to_json(v);
                if (!v.ok()) mismatch = true;
                // Instability is reported only when both paths agree.
                const auto top = rep->largest_real_part();
                const bool curves_say = counts->positive.discrete > 0;
                // Positive real eigenvalues whose -lambda^2 is discrete spectrum of S_(alpha lambda);
                // the rest approximate essential spectrum of the truncated problem.
                bool block_says = false;
                int essential_like = 0;
                for (const auto& p : rep->real) {
                    if (!(p.lambda > 0.0)) continue;
                    const double mu = alpha * p.lambda;
                    const auto cls = table->source->classify(-p.lambda * p.lambda, table->source->essential(mu));
                    if (cls == SpectralClass::Discrete) block_says = true;
                    else ++essential_like;
                }
                summary["positive_real_essential"] = essential_like;
                summary["unstable"] = v.ok() && curves_say && block_says;
                if (curves_say != block_says)
                    m.warnings.push_back(tag + ": eigencurve and block paths disagree on a positive real eigenvalue");
                if (top) summary["largest_real_part"] = *top;
            }
            if (rep) {
                summary["spectrum"] = to_json(*rep);
                st.json(tag + "/spectrum.json", to_json(*rep));
            }

            if (cmd == PipelineCommand::Evolve || (cmd == PipelineCommand::Run && config.evolution.enabled)) {
                st.run("evolution", [&] {
                    const double T = opts.T.value_or(config.evolution.T);
                    const double dt = opts.dt.value_or(config.evolution.dt.value_or(default_time_step(op)));
                    const auto psi0 = detail::initial_state(s, op, rep ? &*rep : nullptr);
                    const auto tr = evolve(op, psi0, T, dt);
                    st.text(tag + "/trace.csv", trace_csv(tr));
                    Json ev = to_json(tr);
                    const auto bound = check_semigroup_bound(tr, semigroup_constants(op));
                    ev["semigroup_bound"] = to_json(bound);
                    if (!bound.ok()) m.warnings.push_back(tag + ": semigroup bound exceeded beyond the scheme error");
                    try {
                        ev["growth_rate"] = growth_rate(tr, config.evolution.tail_fraction);
                    } catch (const RangeError& e) {
                        m.warnings.push_back(tag + ": " + e.what());
                    }
                    st.json(tag + "/evolution.json", ev);
                    summary["evolution"] = ev;
                });
            }
            per_alpha.push_back(summary);
        }
        m.summary["alphas"] = per_alpha;
        if (mismatch) {
            m.status = "mismatch";
            m.exit_code = 2;
        }
        st.manifest();
        return m;
    } catch (const StageError& e) {
        if (m.status == "ok") {
            m.status = "failed";
            m.failed_stage = e.stage();
            m.error = e.what();
            m.exit_code = e.exit_code();
        }
        st.manifest();
        throw;
    }
}

}  // namespace dampwave
