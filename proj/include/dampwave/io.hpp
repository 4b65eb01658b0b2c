#pragma once

// CSV and JSON writers for tables, records and reports. Numbers are written
// with 17 significant digits so that values read back are bit-identical.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dampwave/block_operator.hpp"
#include "dampwave/eigencurve.hpp"
#include "dampwave/error.hpp"
#include "dampwave/evolution.hpp"
#include "dampwave/intersection.hpp"
#include "dampwave/threshold.hpp"

namespace dampwave {

using Json = nlohmann::json;

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// JSON has no inf or nan; they become null.
inline Json number_json(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

inline void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

// mu, gamma_1..gamma_k and, on truncated domains, gamma_inf and its lower estimate.
inline std::string curves_csv(const EigencurveTable& t) {
    std::ostringstream os;
    os << "mu";
    for (int n = 0; n < t.k(); ++n) os << ",gamma_" << n + 1;
    if (t.has_essential()) os << ",gamma_inf,gamma_inf_lower";
    os << '\n';
    for (int i = 0; i < t.samples(); ++i) {
        const auto ui = static_cast<std::size_t>(i);
        os << format_number(t.mu[ui]);
        for (int n = 0; n < t.k(); ++n) os << ',' << format_number(t.gamma(n, i));
        if (t.has_essential()) os << ',' << format_number(t.essential[ui]) << ',' << format_number(t.essential_lower[ui]);
        os << '\n';
    }
    return os.str();
}

inline std::string curve_index(int curve) {
    return curve == IntersectionRecord::kEssential ? "inf" : std::to_string(curve + 1);
}

inline std::string intersections_csv(const std::vector<IntersectionRecord>& records) {
    std::ostringstream os;
    os << "curve,alpha,mu_star,lambda,kind,multiplicity,classification,bracket_lo,bracket_hi,residual\n";
    for (const auto& r : records) {
        os << curve_index(r.curve) << ',' << format_number(r.alpha) << ',' << format_number(r.mu_star) << ','
           << format_number(r.lambda) << ',' << to_string(r.kind) << ',' << r.multiplicity() << ','
           << to_string(r.classification) << ',' << format_number(r.bracket_lo) << ','
           << format_number(r.bracket_hi) << ',' << format_number(r.residual) << '\n';
    }
    return os.str();
}

// re, im, residual, matched_curve (empty unless a real eigenvalue was matched).
inline std::string spectrum_csv(const SpectrumReport& rep) {
    std::ostringstream os;
    os << "re,im,residual,matched_curve\n";
    for (const auto& e : rep.eigenvalues) {
        std::string matched;
        if (e.real) {
            for (const auto& p : rep.real)
                if (std::abs(p.lambda - e.lambda.real()) <= 1e-6 * std::max(1.0, std::abs(p.lambda)) && p.matched_curve >= 0)
                    matched = std::to_string(p.matched_curve + 1);
        }
        os << format_number(e.lambda.real()) << ',' << format_number(e.lambda.imag()) << ','
           << format_number(e.residual) << ',' << matched << '\n';
    }
    if (rep.eigenvalues.empty()) {
        for (const auto& p : rep.real) {
            os << format_number(p.lambda) << ",0," << format_number(p.qep_residual) << ','
               << (p.matched_curve >= 0 ? std::to_string(p.matched_curve + 1) : "") << '\n';
        }
    }
    return os.str();
}

inline std::string trace_csv(const EvolutionTrace& tr) {
    std::ostringstream os;
    os << "t,h_norm,log_h_norm\n";
    for (std::size_t i = 0; i < tr.samples(); ++i)
        os << format_number(tr.t[i]) << ',' << format_number(tr.h_norm(i)) << ',' << format_number(tr.log_h_norm[i]) << '\n';
    return os.str();
}

inline Json to_json(const IntersectionRecord& r) {
    return {{"curve", r.essential() ? Json("inf") : Json(r.curve + 1)},
            {"alpha", r.alpha},
            {"mu_star", number_json(r.mu_star)},
            {"lambda", number_json(r.lambda)},
            {"kind", to_string(r.kind)},
            {"multiplicity", r.multiplicity()},
            {"classification", to_string(r.classification)},
            {"bracket", {number_json(r.bracket_lo), number_json(r.bracket_hi)}},
            {"residual", number_json(r.residual)},
            {"note", r.note}};
}

inline Json to_json(const std::vector<IntersectionRecord>& records) {
    Json out = Json::array();
    for (const auto& r : records) out.push_back(to_json(r));
    return out;
}

inline Json to_json(const ThresholdRecord& r) {
    return {{"curve", r.curve + 1},
            {"side", r.side},
            {"alpha_threshold", number_json(r.alpha_threshold)},
            {"zero_plus", r.zero_plus},
            {"mechanism", to_string(r.mechanism)},
            {"witness_mu", number_json(r.witness_mu)},
            {"gamma_at_witness", number_json(r.gamma_at_witness)},
            {"formula_alpha", number_json(r.formula_alpha)},
            {"bracket", {number_json(r.bracket_lo), number_json(r.bracket_hi)}},
            {"range_limited", r.range_limited},
            {"note", r.note}};
}

inline Json to_json(const SideCount& s) {
    return {{"predicted", s.predicted},   {"discrete", s.discrete},
            {"ambiguous", s.ambiguous},   {"essential_class", s.essential_class},
            {"out_of_range", s.out_of_range}, {"essential_points", s.essential_points},
            {"guaranteed", s.guaranteed}, {"guarantee", s.guarantee},
            {"guarantee_met", s.guarantee_met}};
}

inline Json to_json(const RealPointCounts& c) {
    Json tp = Json::array(), tn = Json::array();
    for (double v : c.thresholds_positive) tp.push_back(number_json(v));
    for (double v : c.thresholds_negative) tn.push_back(number_json(v));
    return {{"alpha", c.alpha},
            {"n0", c.n0},
            {"n0_saturated", c.n0_saturated},
            {"positive", to_json(c.positive)},
            {"negative", to_json(c.negative)},
            {"thresholds_positive", tp},
            {"thresholds_negative", tn}};
}

inline Json to_json(const SpectrumReport& rep) {
    Json real = Json::array();
    for (const auto& p : rep.real) {
        real.push_back({{"lambda", p.lambda},
                        {"qep_residual", number_json(p.qep_residual)},
                        {"curve_distance", number_json(p.curve_distance)},
                        {"matched_curve", p.matched_curve >= 0 ? Json(p.matched_curve + 1) : Json(nullptr)}});
    }
    const auto top = rep.largest_real_part();
    return {{"alpha", rep.alpha},
            {"mode", rep.mode == SpectrumMode::Full ? "full" : "real-window"},
            {"eigenvalue_count", rep.eigenvalues.size()},
            {"real", real},
            {"largest_real_part", top ? number_json(*top) : Json(nullptr)},
            {"max_qep_residual", number_json(rep.max_qep_residual)},
            {"warnings", rep.warnings}};
}

inline Json to_json(const ValidationSummary& s) {
    Json mm = Json::array();
    for (const auto& m : s.mismatches) {
        mm.push_back({{"direction", m.direction},
                      {"lambda", number_json(m.lambda)},
                      {"curve", m.curve >= 0 ? Json(m.curve + 1) : Json(nullptr)},
                      {"distance", number_json(m.distance)},
                      {"detail", m.detail}});
    }
    return {{"alpha", s.alpha},
            {"tol", s.tol},
            {"ok", s.ok()},
            {"real_checked", s.real_checked},
            {"intersections_checked", s.intersections_checked},
            {"intersections_skipped", s.intersections_skipped},
            {"beyond_k", s.beyond_k},
            {"mismatches", mm}};
}

inline Json to_json(const LipschitzReport& r) {
    return {{"pairs_checked", r.pairs_checked}, {"worst_ratio", number_json(r.worst_ratio)}, {"violations", r.violations.size()}};
}

inline Json to_json(const SemigroupBoundReport& r) {
    return {{"omega_alpha", r.omega_alpha},
            {"worst_excess", number_json(r.worst_excess)},
            {"violations", r.violations},
            {"certified_violations", r.certified_violations},
            {"ok", r.ok()}};
}

inline Json to_json(const GrowthStudy& g) {
    return {{"dt", g.dt},
            {"rate", number_json(g.rate)},
            {"rate_half_step", number_json(g.rate_half)},
            {"extrapolated", number_json(g.extrapolated)},
            {"difference", number_json(g.difference)}};
}

inline Json to_json(const EvolutionTrace& tr) {
    return {{"dt", tr.dt},
            {"steps", tr.steps},
            {"scheme", tr.scheme},
            {"order", tr.order},
            {"renormalizations", tr.renormalizations},
            {"energy_drift", number_json(tr.energy_drift)},
            {"final_log_h_norm", tr.log_h_norm.empty() ? Json(nullptr) : number_json(tr.log_h_norm.back())}};
}

}  // namespace dampwave
