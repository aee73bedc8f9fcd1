// qpair command-line front end. run() is kept separate from main() so the
// subcommands can be driven in-process by tests.
//
// Exit codes: 0 success, 2 input error, 3 reconstruction inconsistency.

#pragma once

#include "qpair/qpair.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace qpair::cli {

using nlohmann::json;

inline constexpr int kOk = 0;
inline constexpr int kInputError = 2;
inline constexpr int kInconsistent = 3;

/// Raised for reconstruction failures that should leave with exit code 3.
struct ReconstructionFailure : std::runtime_error {
    json diagnostics;
    ReconstructionFailure(const std::string& what, json diag) : std::runtime_error(what), diagnostics(std::move(diag)) {}
};

namespace detail {

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io::FormatError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw io::FormatError(path + ": " + e.what());
    }
}

inline void write_text(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io::FormatError("cannot write " + path);
    f << text;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

/// A qubit-pair state from {"params": {...}}, {"rho": matrix} or bare params.
struct SourceState {
    DensityMatrix rho;
    std::optional<tomo::CanonicalParams> params;
};

inline SourceState load_source(const std::string& path) {
    const json j = read_json_file(path);
    if (j.contains("rho")) {
        const Matrix m = io::matrix_from_json(j.at("rho"));
        if (m.rows() != 4) throw StructureError("rho must be 4x4 for a qubit pair");
        return {DensityMatrix(m, TensorDims{}, 1e-9), std::nullopt};
    }
    const auto params = io::canonical_params_from_json(j.contains("params") ? j.at("params") : j);
    return {tomo::canonical_state(params), params};
}

inline tomo::Protocol protocol_of(const std::string& mode) {
    return mode == "full9" ? tomo::Protocol::full9 : tomo::Protocol::minimal5;
}

inline tomo::ReconstructionResult reconstruct_or_fail(tomo::JointSampler& sampler, const complexity::SeriesPlan& plan,
                                                      tomo::Protocol protocol, bool project) {
    try {
        return tomo::full_reconstruct(sampler, plan, protocol, {project});
    } catch (const InconsistencyError& e) {
        throw ReconstructionFailure(e.what(), {{"error", e.what()}, {"infeasibility", e.residual}});
    } catch (const IncompletenessError& e) {
        throw ReconstructionFailure(e.what(), {{"error", e.what()},
                                               {"condition_number", std::isfinite(e.condition_number)
                                                                        ? json(e.condition_number)
                                                                        : json(nullptr)}});
    }
}

inline std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::logic_error&) {
            throw io::FormatError("not a number: '" + item + "'");
        }
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------- evolve

struct EvolveArgs {
    std::string in, out, populations;
    double xi = 1.0, omega = 0.0, t = 0.0;
};

inline int cmd_evolve(const EvolveArgs& a, std::ostream& out, std::ostream& err) {
    const auto state = io::atom_field_state_from_json(detail::read_json_file(a.in));
    const auto ev = jc::evolve(state, {a.omega, a.xi, state.n_max()}, a.t);
    if (ev.truncation_warning)
        err << "warning: population " << ev.top_population << " on the top Fock rung; raise n_max\n";
    detail::write_text(a.out, detail::dump(io::to_json(ev.state)), out);
    if (!a.populations.empty()) {
        std::ostringstream csv;
        io::write_populations_csv(csv, ev.state);
        detail::write_text(a.populations, csv.str(), out);
    }
    return kOk;
}

// ---------------------------------------------------------------- complexity

struct ComplexityArgs {
    std::string target = "ququart";
    double s = 0.1;
    std::optional<double> p;
    std::vector<double> bloch;
};

inline json plan_json(const complexity::SeriesPlan& p) {
    json j = io::to_json(p);
    if (!std::isfinite(p.bits)) j["bits"] = nullptr;
    return j;
}

inline void plan_row(std::ostream& os, const std::string& label, const complexity::SeriesPlan& p) {
    os << std::left << std::setw(10) << label << std::right << std::setw(10) << std::fixed << std::setprecision(4)
       << p.bits << std::setw(8) << p.num_series << std::setw(8) << p.events_per_series << std::setw(8)
       << p.total_events << '\n';
    os.unsetf(std::ios::floatfield);
}

inline int cmd_complexity(const ComplexityArgs& a, std::ostream& out, std::ostream&) {
    using namespace complexity;
    const ErrorSpec err(a.s);
    out << std::left << std::setw(10) << "bound" << std::right << std::setw(10) << "bits" << std::setw(8) << "series"
        << std::setw(8) << "events" << std::setw(8) << "total" << '\n';
    json j;
    if (a.target == "ququart") {
        const auto r = ququart_series_plan(err);
        plan_row(out, "inf", r.min);
        plan_row(out, "sup", r.max);
        j = {{"inf", plan_json(r.min)}, {"sup", plan_json(r.max)}};
    } else if (a.target == "prior") {
        const auto p = prior_knowledge_plan(err);
        plan_row(out, "prior", p);
        j = plan_json(p);
    } else if (a.target == "bernoulli") {
        if (!a.p) throw DomainError("--p is required for the bernoulli target");
        const auto c = bernoulli_complexity(*a.p, err);
        SeriesPlan p{1, 0, 0, 0, c.bits};
        if (!c.degenerate()) p = series_plan(c, 1);
        plan_row(out, "bernoulli", p);
        j = plan_json(p);
    } else if (a.target == "qubit") {
        if (!a.bloch.empty() && a.bloch.size() != 3) throw DomainError("--bloch takes three components");
        const Vec3 r = a.bloch.empty() ? Vec3::Zero() : Vec3(a.bloch[0], a.bloch[1], a.bloch[2]);
        const auto p = series_plan(qubit_state_complexity(r(2), r(0), r(1), err), 3);
        plan_row(out, "qubit", p);
        j = plan_json(p);
    } else {
        throw DomainError("unknown target " + a.target);
    }
    out << j.dump() << '\n';
    return kOk;
}

// ---------------------------------------------------------------- simulate / reconstruct

struct SimulateArgs {
    std::string params, out, result, mode = "minimal5";
    std::uint64_t seed = 0;
    double s = 0.1;
    std::int64_t events = 0;  // per series; 0 means "from the error target"
};

inline complexity::SeriesPlan simulation_plan(tomo::Protocol protocol, double s, std::int64_t events) {
    const std::int64_t n = protocol == tomo::Protocol::full9 ? 9 : complexity::kQuquartSeries;
    if (events > 0) return complexity::fixed_plan(n, events);
    const auto sup = complexity::ququart_series_plan(complexity::ErrorSpec(s)).max;
    return complexity::fixed_plan(n, sup.events_per_series);
}

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream&) {
    const auto src = detail::load_source(a.params);
    const auto protocol = detail::protocol_of(a.mode);
    tomo::MonteCarloSampler sampler(src.rho, a.seed);
    const auto res = detail::reconstruct_or_fail(sampler, simulation_plan(protocol, a.s, a.events), protocol, true);
    std::ostringstream csv;
    io::write_events_csv(csv, sampler.record());
    detail::write_text(a.out, csv.str(), out);
    if (!a.result.empty()) detail::write_text(a.result, detail::dump(io::to_json(res)), out);
    return kOk;
}

struct ReconstructArgs {
    std::string events, params, out, mode = "minimal5";
    bool exact = false;
    bool strict = false;
};

inline int cmd_reconstruct(const ReconstructArgs& a, std::ostream& out, std::ostream&) {
    const bool exact = a.exact || a.mode == "exact";
    tomo::ReconstructionResult res = [&] {
        if (exact) {
            if (a.params.empty()) throw DomainError("--exact needs --params");
            const auto protocol = a.mode == "full9" ? tomo::Protocol::full9 : tomo::Protocol::minimal5;
            tomo::BornSampler sampler(detail::load_source(a.params).rho);
            return detail::reconstruct_or_fail(sampler, complexity::fixed_plan(protocol == tomo::Protocol::full9 ? 9 : 5, 1),
                                               protocol, false);
        }
        if (a.events.empty()) throw DomainError("need --events or --exact");
        std::ifstream in(a.events);
        if (!in) throw io::FormatError("cannot open " + a.events);
        auto record = io::read_events_csv(in);
        const auto protocol = detail::protocol_of(a.mode);
        const int needed = protocol == tomo::Protocol::full9 ? 9 : 5;
        std::vector<std::int64_t> per(static_cast<std::size_t>(needed), 0);
        for (const auto& e : record.events) {
            if (e.detector < 0 || e.detector >= needed)
                throw StructureError("event log has series " + std::to_string(e.detector) + ", expected 0.." +
                                     std::to_string(needed - 1) + " for " + a.mode);
            ++per[static_cast<std::size_t>(e.detector)];
        }
        for (int s = 0; s < needed; ++s)
            if (per[static_cast<std::size_t>(s)] == 0)
                throw StructureError("event log has no events for series " + std::to_string(s));
        const auto events = *std::max_element(per.begin(), per.end());
        tomo::RecordedSampler sampler(std::move(record));
        auto r = detail::reconstruct_or_fail(sampler, complexity::fixed_plan(needed, events), protocol, !a.strict);
        std::int64_t total = 0;
        for (auto c : per) total += c;
        r.diagnostics.events_used = total;
        return r;
    }();
    detail::write_text(a.out, detail::dump(io::to_json(res)), out);
    return kOk;
}

// ---------------------------------------------------------------- protocol

struct ProtocolArgs {
    std::string scenario = "transfer", out, policy = "balanced", basis = "z";
    std::uint64_t seed = 0;
    std::size_t length = 1000;
    std::string weights = "0.5,0.5";
};

inline int cmd_protocol(const ProtocolArgs& a, std::ostream& out, std::ostream&) {
    using namespace sim;
    const int axis = a.basis == "x" ? 1 : a.basis == "y" ? 2 : a.basis == "z" ? 3 : 0;
    if (axis == 0) throw DomainError("--basis must be x, y or z");
    const auto eig = hermitian_eig(pauli(axis));
    const StateEnsemble ensemble({PureState(eig.vectors.col(0)), PureState(eig.vectors.col(1))});
    const ProbabilityDistribution w(detail::parse_list(a.weights));
    const auto policy = a.policy == "iid" ? PreparationPolicy::iid : PreparationPolicy::balanced;
    if (a.policy != "iid" && a.policy != "balanced") throw DomainError("--policy must be iid or balanced");
    const auto bank = DetectorBank::pauli();

    PreparationSequence seq;
    RegistrationRecord rec;
    if (a.scenario == "transfer") {
        // Registrator measures in the preparation basis.
        seq = prepare_sequence(ensemble, w, a.length, policy, a.seed);
        rec = register_events(seq, ensemble, bank, Fixed{axis}, a.seed);
    } else if (a.scenario == "analysis" || a.scenario == "eavesdrop") {
        // Three coordinated (analysis) or uncoordinated (eavesdrop) series of
        // `length` events, one per Pauli detector.
        const auto pol = a.scenario == "analysis" ? PreparationPolicy::balanced : policy;
        seq = prepare_series(ensemble, w, a.length, 3, pol, a.seed);
        rec = register_events(seq, ensemble, bank, PerSeries{{1, 2, 3}}, a.seed);
    } else {
        throw DomainError("unknown scenario " + a.scenario);
    }
    json j = io::to_json(eavesdrop_report(seq, rec, ensemble, bank));
    j["scenario"] = a.scenario;
    j["seed"] = a.seed;
    j["length"] = a.length;
    j["balance_warning"] = seq.balance_warning;
    detail::write_text(a.out, detail::dump(j), out);
    return kOk;
}

// ---------------------------------------------------------------- entry point

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"qubit-pair measurement toolkit"};
    app.require_subcommand(1);

    EvolveArgs ev;
    auto* c_ev = app.add_subcommand("evolve", "evolve an atom-field state under the resonant coupling");
    c_ev->add_option("--in", ev.in, "state JSON")->required();
    c_ev->add_option("--xi", ev.xi, "coupling");
    c_ev->add_option("--omega", ev.omega, "carrier frequency (unused in the interaction picture)");
    c_ev->add_option("--t", ev.t, "time")->required();
    c_ev->add_option("--out", ev.out, "output state JSON (default stdout)");
    c_ev->add_option("--populations", ev.populations, "output CSV of |phi_{k,n}|^2");

    ComplexityArgs cx;
    auto* c_cx = app.add_subcommand("complexity", "event budgets");
    c_cx->add_option("--target", cx.target)->check(CLI::IsMember({"qubit", "ququart", "prior", "bernoulli"}));
    c_cx->add_option("--error-target", cx.s, "standard error per probability, (0, 1/2]");
    c_cx->add_option("--p", cx.p, "probability (bernoulli)");
    c_cx->add_option("--bloch", cx.bloch, "Bloch components <s1> <s2> <s3> (qubit)")->expected(3);

    SimulateArgs sm;
    auto* c_sm = app.add_subcommand("simulate", "sample the reconstruction protocol on a known state");
    c_sm->add_option("--params", sm.params, "state JSON")->required();
    c_sm->add_option("--mode", sm.mode)->check(CLI::IsMember({"minimal5", "full9"}));
    c_sm->add_option("--seed", sm.seed)->required();
    c_sm->add_option("--error-target", sm.s);
    c_sm->add_option("--events-per-series", sm.events);
    c_sm->add_option("--out", sm.out, "event CSV (default stdout)");
    c_sm->add_option("--result", sm.result, "also write the reconstruction JSON");

    ReconstructArgs rc;
    auto* c_rc = app.add_subcommand("reconstruct", "reconstruct a qubit-pair state");
    c_rc->add_option("--events", rc.events, "event CSV");
    c_rc->add_option("--params", rc.params, "state JSON (with --exact)");
    c_rc->add_option("--mode", rc.mode)->check(CLI::IsMember({"minimal5", "full9", "exact"}));
    c_rc->add_flag("--exact", rc.exact, "use Born probabilities of --params");
    c_rc->add_flag("--strict", rc.strict, "fail instead of clamping infeasible estimates");
    c_rc->add_option("--out", rc.out, "result JSON (default stdout)");

    ProtocolArgs pr;
    auto* c_pr = app.add_subcommand("protocol", "preparation/registration scenarios");
    c_pr->add_option("--scenario", pr.scenario)->check(CLI::IsMember({"transfer", "analysis", "eavesdrop"}));
    c_pr->add_option("--seed", pr.seed)->required();
    c_pr->add_option("--length", pr.length, "events (per series for analysis/eavesdrop)");
    c_pr->add_option("--weights", pr.weights, "comma separated preparation weights");
    c_pr->add_option("--policy", pr.policy)->check(CLI::IsMember({"iid", "balanced"}));
    c_pr->add_option("--basis", pr.basis, "preparation basis")->check(CLI::IsMember({"x", "y", "z"}));
    c_pr->add_option("--out", pr.out, "report JSON (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }

    try {
        if (*c_ev) return cmd_evolve(ev, out, err);
        if (*c_cx) return cmd_complexity(cx, out, err);
        if (*c_sm) return cmd_simulate(sm, out, err);
        if (*c_rc) return cmd_reconstruct(rc, out, err);
        if (*c_pr) return cmd_protocol(pr, out, err);
    } catch (const ReconstructionFailure& e) {
        err << "error: " << e.what() << '\n';
        out << detail::dump(e.diagnostics);
        return kInconsistent;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }
    return kInputError;
}

}  // namespace qpair::cli
