// io.hpp: JSON and CSV formats.
//
//   matrix            {"dim": n, "entries": [[re, im], ...]}            row-major
//   AtomFieldState    {"n_max": n, "amplitudes": [[re, im], ...]}       k-major, then n
//   CanonicalParams   {"p": [p1, p2, p3, p4], "theta_c": x, "theta_e": y}
//   SeriesPlan        {"bits": x, "total_events": n, "series": [{"id": i, "events": m}, ...]}
//   event log (CSV)   event_index,detector_id,outcome

#pragma once

#include "qpair/complexity.hpp"
#include "qpair/core.hpp"
#include "qpair/jc_dynamics.hpp"
#include "qpair/measurement_sim.hpp"
#include "qpair/tomography.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace qpair::io {

using nlohmann::json;

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// %.17g, the lossless representation used in CSV output.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------- matrices / vectors

inline json complex_array(const cplx* data, Eigen::Index n) {
    json a = json::array();
    for (Eigen::Index i = 0; i < n; ++i) a.push_back({data[i].real(), data[i].imag()});
    return a;
}

inline std::vector<cplx> parse_complex_array(const json& a) {
    if (!a.is_array()) throw FormatError("expected an array of [re, im] pairs");
    std::vector<cplx> out;
    for (const auto& e : a) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
            throw FormatError("expected [re, im] pair");
        out.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
    return out;
}

inline json to_json(const Matrix& m) {
    Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
    return {{"dim", m.rows()}, {"entries", complex_array(rm.data(), rm.size())}};
}

inline Matrix matrix_from_json(const json& j) {
    if (!j.is_object() || !j.contains("dim") || !j.contains("entries")) throw FormatError("matrix needs dim and entries");
    const auto dim = j.at("dim").get<Eigen::Index>();
    const auto e = parse_complex_array(j.at("entries"));
    if (dim < 1 || static_cast<Eigen::Index>(e.size()) != dim * dim) throw FormatError("matrix entry count != dim²");
    Matrix m(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r)
        for (Eigen::Index c = 0; c < dim; ++c) m(r, c) = e[static_cast<std::size_t>(r * dim + c)];
    return m;
}

inline json to_json(const Rot3& r) {
    json a = json::array();
    for (int i = 0; i < 3; ++i) a.push_back({r(i, 0), r(i, 1), r(i, 2)});
    return a;
}

// ---------------------------------------------------------------- atom-field state

inline json to_json(const jc::AtomFieldState& s) {
    return {{"n_max", s.n_max()}, {"amplitudes", complex_array(s.amplitudes().data(), s.amplitudes().size())}};
}

inline jc::AtomFieldState atom_field_state_from_json(const json& j) {
    if (!j.is_object() || !j.contains("n_max") || !j.contains("amplitudes"))
        throw FormatError("state needs n_max and amplitudes");
    if (!j.at("n_max").is_number_integer()) throw FormatError("n_max must be an integer");
    const int n_max = j.at("n_max").get<int>();
    const auto a = parse_complex_array(j.at("amplitudes"));
    Vector v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i];
    return {n_max, std::move(v)};
}

// ---------------------------------------------------------------- complexity

inline json to_json(const complexity::SeriesPlan& p) {
    json series = json::array();
    for (std::int64_t i = 0; i < p.num_series; ++i) series.push_back({{"id", i + 1}, {"events", p.events_per_series}});
    return {{"bits", p.bits}, {"total_events", p.total_events}, {"series", series}};
}

// ---------------------------------------------------------------- tomography

inline json to_json(const tomo::CanonicalParams& p) {
    return {{"p", p.p}, {"theta_c", p.theta_c}, {"theta_e", p.theta_e}};
}

inline tomo::CanonicalParams canonical_params_from_json(const json& j) {
    if (!j.is_object() || !j.contains("p")) throw FormatError("params need p, theta_c, theta_e");
    const auto& p = j.at("p");
    if (!p.is_array() || p.size() != 4) throw FormatError("p must hold four eigenvalues");
    tomo::CanonicalParams out;
    for (std::size_t i = 0; i < 4; ++i) out.p[i] = p[i].get<double>();
    out.theta_c = j.value("theta_c", 0.0);
    out.theta_e = j.value("theta_e", 0.0);
    out.validate();
    return out;
}

inline json to_json(const tomo::LocalPair& lp) {
    return {{"atom_axis", {lp.atom_axis(0), lp.atom_axis(1), lp.atom_axis(2)}},
            {"field_axis", {lp.field_axis(0), lp.field_axis(1), lp.field_axis(2)}}};
}

inline json to_json(const tomo::ReconstructionDiagnostics& d) {
    json pairs = json::array();
    for (const auto& p : d.pairs) pairs.push_back(to_json(p));
    const auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    return {{"atom_alignment_degenerate", d.atom_alignment_degenerate},
            {"field_alignment_degenerate", d.field_alignment_degenerate},
            {"azimuth_undetermined", d.azimuth_undetermined},
            {"cat_undetermined", d.cat_undetermined},
            {"epr_undetermined", d.epr_undetermined},
            {"projected", d.projected},
            {"infeasibility", d.infeasibility},
            {"frame_condition", finite_or_null(d.frame_condition)},
            {"inversion_condition", finite_or_null(d.inversion_condition)},
            {"residual", d.residual},
            {"events_used", d.events_used},
            {"series", d.series},
            {"pairs", pairs}};
}

inline json to_json(const tomo::ReconstructionResult& r) {
    return {{"params", r.params ? to_json(*r.params) : json(nullptr)},
            {"rho", to_json(r.rho.matrix())},
            {"frames", {{"atom", to_json(r.atom_frame)}, {"field", to_json(r.field_frame)}}},
            {"diagnostics", to_json(r.diagnostics)}};
}

// ---------------------------------------------------------------- measurement records

inline json to_json(const sim::EavesdropReport& r) {
    json td = json::array();
    for (const auto& [id, d] : r.trace_distance) td.push_back({{"detector", id}, {"value", d ? json(*d) : json(nullptr)}});
    json out{{"trace_distance", td},
             {"nondemolition_candidate", r.nondemolition_candidate},
             {"nondemolition_detectors", r.nondemolition_detectors},
             {"basis_verdict", sim::to_string(r.basis_verdict)}};
    if (r.basis) {
        out["basis_estimate"] = {{"bloch", {r.basis->bloch(0), r.basis->bloch(1), r.basis->bloch(2)}},
                                 {"threshold", r.basis->threshold}};
    }
    return out;
}

inline void write_events_csv(std::ostream& os, const sim::RegistrationRecord& rec) {
    os << "event_index,detector_id,outcome\n";
    for (const auto& e : rec.events) os << e.index << ',' << e.detector << ',' << e.outcome << '\n';
}

inline sim::RegistrationRecord read_events_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw FormatError("event log is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "event_index,detector_id,outcome") throw FormatError("event log header mismatch");
    sim::RegistrationRecord rec;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        long long idx = 0, det = 0, out = 0;
        char c1 = 0, c2 = 0;
        if (!(ls >> idx >> c1 >> det >> c2 >> out) || c1 != ',' || c2 != ',' || idx < 0 || !(ls >> std::ws).eof())
            throw FormatError("malformed event log line " + std::to_string(lineno));
        rec.events.push_back({static_cast<std::size_t>(idx), static_cast<int>(det), static_cast<int>(out)});
    }
    return rec;
}

/// |φ_{k,n}|² table.
inline void write_populations_csv(std::ostream& os, const jc::AtomFieldState& s) {
    os << "k,n,population\n";
    for (int k = 0; k < 2; ++k)
        for (int n = 0; n <= s.n_max(); ++n) os << k << ',' << n << ',' << fmt17(std::norm(s(k, n))) << '\n';
}

}  // namespace qpair::io
