// measurement_sim.hpp: Preparator / Registrator simulation.
//
// A Preparator emits a sequence of labels n_1..n_K drawn from an ensemble of
// pure states; a Registrator picks a detector for every event and records the
// Born-rule outcome. Series i of a run always draws from CounterRng(seed, i).

#pragma once

#include "qpair/core.hpp"
#include "qpair/rng.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <variant>
#include <vector>

namespace qpair::sim {

using BigInt = boost::multiprecision::cpp_int;

// ---------------------------------------------------------------- types

class StateEnsemble {
public:
    explicit StateEnsemble(std::vector<PureState> states) : states_(std::move(states)) {
        if (states_.empty()) throw DomainError("StateEnsemble: empty");
        for (const auto& s : states_)
            if (s.dim() != states_.front().dim()) throw StructureError("StateEnsemble: states differ in dimension");
    }

    std::size_t size() const { return states_.size(); }
    Eigen::Index dim() const { return states_.front().dim(); }
    /// Labels run 1..N.
    const PureState& state(int label) const {
        if (label < 1 || static_cast<std::size_t>(label) > states_.size())
            throw DomainError("StateEnsemble: label out of range");
        return states_[static_cast<std::size_t>(label - 1)];
    }

private:
    std::vector<PureState> states_;
};

enum class PreparationPolicy { iid, balanced };

struct PreparationSequence {
    std::vector<int> labels;
    PreparationPolicy policy = PreparationPolicy::iid;
    std::uint64_t seed = 0;
    bool balance_warning = false;  // some positive weight was apportioned zero events

    std::size_t size() const { return labels.size(); }
};

struct Detector {
    int id = 0;
    std::vector<Matrix> projectors;
};

class DetectorBank {
public:
    explicit DetectorBank(std::vector<Detector> detectors) : detectors_(std::move(detectors)) {
        if (detectors_.empty()) throw DomainError("DetectorBank: empty");
        for (const auto& d : detectors_) {
            if (d.projectors.empty()) throw DomainError("DetectorBank: detector without projectors");
            check_complete(d.projectors, d.projectors.front().rows());
            if (d.projectors.front().rows() != detectors_.front().projectors.front().rows())
                throw StructureError("DetectorBank: detectors act on different dimensions");
        }
        for (std::size_t i = 0; i < detectors_.size(); ++i)
            for (std::size_t j = i + 1; j < detectors_.size(); ++j)
                if (detectors_[i].id == detectors_[j].id) throw DomainError("DetectorBank: duplicate detector id");
    }

    /// Detectors measuring the eigenbases of the given observables, ids 1..N.
    static DetectorBank from_observables(const std::vector<Matrix>& observables) {
        std::vector<Detector> ds;
        int id = 1;
        for (const auto& o : observables) ds.push_back({id++, eigenprojectors(o)});
        return DetectorBank(std::move(ds));
    }

    /// σ_1, σ_2, σ_3 as detectors 1, 2, 3.
    static DetectorBank pauli() { return from_observables({qpair::pauli(1), qpair::pauli(2), qpair::pauli(3)}); }

    const Detector& at(int id) const {
        for (const auto& d : detectors_)
            if (d.id == id) return d;
        throw DomainError("DetectorBank: unknown detector id " + std::to_string(id));
    }
    bool contains(int id) const {
        return std::any_of(detectors_.begin(), detectors_.end(), [id](const Detector& d) { return d.id == id; });
    }
    Eigen::Index dim() const { return detectors_.front().projectors.front().rows(); }
    const std::vector<Detector>& detectors() const { return detectors_; }

private:
    std::vector<Detector> detectors_;
};

struct Event {
    std::size_t index = 0;  // position in the original sequence
    int detector = 0;
    int outcome = 0;
    friend bool operator==(const Event&, const Event&) = default;
};

struct RegistrationRecord {
    std::vector<Event> events;
    std::uint64_t seed = 0;

    std::size_t size() const { return events.size(); }
};

struct RoundRobin {};
struct Fixed {
    int detector;
};
/// Contiguous series of (near) equal length, one detector per series.
struct PerSeries {
    std::vector<int> detectors;
};
using DetectorPolicy = std::variant<RoundRobin, Fixed, PerSeries>;

// ---------------------------------------------------------------- preparation

/// Largest-remainder apportionment of `total` over weights; ties go to the
/// lower label.
inline std::vector<std::size_t> apportion(const std::vector<double>& weights, std::size_t total) {
    std::vector<std::size_t> counts(weights.size());
    std::vector<std::pair<double, std::size_t>> rema;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double q = weights[i] * static_cast<double>(total);
        counts[i] = static_cast<std::size_t>(std::floor(q + 1e-9));
        assigned += counts[i];
        rema.emplace_back(q - static_cast<double>(counts[i]), i);
    }
    std::stable_sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) { return a.first > b.first + 1e-12; });
    for (std::size_t r = 0; assigned < total && r < rema.size(); ++r, ++assigned) ++counts[rema[r].second];
    for (std::size_t r = 0; assigned > total && r < rema.size(); ++r) {
        const auto i = rema[rema.size() - 1 - r].second;
        if (counts[i] > 0) {
            --counts[i];
            --assigned;
        }
    }
    return counts;
}

namespace detail {

inline std::vector<int> draw_labels(const std::vector<double>& w, std::size_t k, PreparationPolicy policy,
                                    CounterRng& rng, bool& warning) {
    std::vector<int> labels;
    labels.reserve(k);
    if (policy == PreparationPolicy::iid) {
        for (std::size_t e = 0; e < k; ++e) labels.push_back(static_cast<int>(sample_index(rng, w)) + 1);
        return labels;
    }
    const auto counts = apportion(w, k);
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (w[i] > 0.0 && counts[i] == 0) warning = true;
        labels.insert(labels.end(), counts[i], static_cast<int>(i) + 1);
    }
    shuffle(labels, rng);
    return labels;
}

}  // namespace detail

inline PreparationSequence prepare_sequence(const StateEnsemble& ensemble, const ProbabilityDistribution& weights,
                                            std::size_t k, PreparationPolicy policy, std::uint64_t seed) {
    if (weights.size() != ensemble.size()) throw StructureError("prepare_sequence: weights do not match ensemble");
    if (k < 1) throw DomainError("prepare_sequence: K must be >= 1");
    CounterRng rng(seed, 0);
    PreparationSequence seq{{}, policy, seed, false};
    seq.labels = detail::draw_labels(weights.values(), k, policy, rng, seq.balance_warning);
    return seq;
}

/// `num_series` consecutive series of length k each, series i drawn from
/// stream i. With the balanced policy every series carries the same label
/// frequencies, which is what coordinated Preparator/Registrator runs need.
inline PreparationSequence prepare_series(const StateEnsemble& ensemble, const ProbabilityDistribution& weights,
                                          std::size_t k, std::size_t num_series, PreparationPolicy policy,
                                          std::uint64_t seed) {
    if (weights.size() != ensemble.size()) throw StructureError("prepare_series: weights do not match ensemble");
    if (k < 1 || num_series < 1) throw DomainError("prepare_series: K and series count must be >= 1");
    PreparationSequence seq{{}, policy, seed, false};
    for (std::size_t s = 0; s < num_series; ++s) {
        CounterRng rng(seed, s);
        const auto part = detail::draw_labels(weights.values(), k, policy, rng, seq.balance_warning);
        seq.labels.insert(seq.labels.end(), part.begin(), part.end());
    }
    return seq;
}

// ---------------------------------------------------------------- registration

/// Boundaries of `n` near-equal contiguous series over k events.
inline std::vector<std::size_t> series_bounds(std::size_t k, std::size_t n) {
    std::vector<std::size_t> b{0};
    for (std::size_t s = 0; s < n; ++s) b.push_back(b.back() + k / n + (s < k % n ? 1 : 0));
    return b;
}

inline RegistrationRecord register_events(const PreparationSequence& seq, const StateEnsemble& ensemble,
                                          const DetectorBank& bank, const DetectorPolicy& policy,
                                          std::uint64_t seed) {
    if (ensemble.dim() != bank.dim()) throw StructureError("register: ensemble and detectors differ in dimension");
    const std::size_t k = seq.size();

    // Detector per event and the series it belongs to.
    std::vector<int> det(k);
    std::vector<std::size_t> series(k, 0);
    if (const auto* rr = std::get_if<RoundRobin>(&policy)) {
        (void)rr;
        const auto& ds = bank.detectors();
        for (std::size_t e = 0; e < k; ++e) det[e] = ds[e % ds.size()].id;
    } else if (const auto* f = std::get_if<Fixed>(&policy)) {
        (void)bank.at(f->detector);
        std::fill(det.begin(), det.end(), f->detector);
    } else {
        const auto& ps = std::get<PerSeries>(policy);
        if (ps.detectors.empty()) throw DomainError("register: per-series policy without detectors");
        for (int id : ps.detectors) (void)bank.at(id);
        const auto b = series_bounds(k, ps.detectors.size());
        for (std::size_t s = 0; s < ps.detectors.size(); ++s)
            for (std::size_t e = b[s]; e < b[s + 1]; ++e) {
                det[e] = ps.detectors[s];
                series[e] = s;
            }
    }

    RegistrationRecord rec{{}, seed};
    rec.events.reserve(k);
    std::map<std::size_t, CounterRng> streams;
    for (std::size_t e = 0; e < k; ++e) {
        auto it = streams.try_emplace(series[e], seed, series[e]).first;
        const Vector& psi = ensemble.state(seq.labels[e]).amplitudes();
        const auto& projs = bank.at(det[e]).projectors;
        std::vector<double> p(projs.size());
        for (std::size_t m = 0; m < projs.size(); ++m) p[m] = std::max(0.0, psi.dot(projs[m] * psi).real());
        rec.events.push_back({e, det[e], static_cast<int>(sample_index(it->second, p))});
    }
    return rec;
}

/// Order-preserving filter R_s = {[d_k = d, m_k]}.
inline RegistrationRecord subsequence(const RegistrationRecord& record, int detector) {
    RegistrationRecord out{{}, record.seed};
    std::copy_if(record.events.begin(), record.events.end(), std::back_inserter(out.events),
                 [detector](const Event& e) { return e.detector == detector; });
    return out;
}

// ---------------------------------------------------------------- density matrices

namespace detail {

inline DensityMatrix frequency_mixture(const StateEnsemble& ensemble, const std::vector<std::size_t>& counts,
                                       std::size_t total) {
    Matrix rho = Matrix::Zero(ensemble.dim(), ensemble.dim());
    for (std::size_t i = 0; i < counts.size(); ++i)
        if (counts[i] > 0)
            rho += (static_cast<double>(counts[i]) / static_cast<double>(total)) *
                   projector(ensemble.state(static_cast<int>(i) + 1).amplitudes());
    return DensityMatrix(rho);
}

}  // namespace detail

/// ρ_S = Σ_n (K_n / K) |ψ_n><ψ_n|.
inline DensityMatrix source_density_matrix(const PreparationSequence& seq, const StateEnsemble& ensemble) {
    if (seq.labels.empty()) throw DomainError("source_density_matrix: empty sequence");
    std::vector<std::size_t> counts(ensemble.size(), 0);
    for (int l : seq.labels) {
        (void)ensemble.state(l);
        ++counts[static_cast<std::size_t>(l - 1)];
    }
    return detail::frequency_mixture(ensemble, counts, seq.labels.size());
}

/// ρ_M^{d}: mixture of the states that were routed to detector d.
inline DensityMatrix per_detector_density(const PreparationSequence& seq, const RegistrationRecord& record,
                                          const StateEnsemble& ensemble, int detector) {
    if (record.size() != seq.size()) throw DomainError("per_detector_density: record and sequence lengths differ");
    std::vector<std::size_t> counts(ensemble.size(), 0);
    std::size_t total = 0;
    for (const auto& e : record.events) {
        if (e.detector != detector) continue;
        ++counts[static_cast<std::size_t>(seq.labels[e.index] - 1)];
        ++total;
    }
    if (total == 0) throw DomainError("per_detector_density: no events for detector " + std::to_string(detector));
    return detail::frequency_mixture(ensemble, counts, total);
}

/// M_I = K! / Π K_n!, exact.
inline BigInt sequence_multiplicity(const std::vector<std::int64_t>& counts) {
    std::int64_t k = 0;
    for (auto c : counts) {
        if (c < 0) throw DomainError("sequence_multiplicity: negative count");
        k += c;
    }
    if (k < 1) throw DomainError("sequence_multiplicity: counts must sum to at least 1");
    // Product of binomials C(running, c), each exact.
    BigInt m = 1;
    std::int64_t running = 0;
    for (auto c : counts) {
        for (std::int64_t j = 1; j <= c; ++j) {
            m *= running + j;
            m /= j;
        }
        running += c;
    }
    return m;
}

// ---------------------------------------------------------------- basis estimation

struct BasisEstimate {
    bool determinable = false;
    Vec3 bloch = Vec3::Zero();  // (d′, d″, Δp) = (<σ_1>, <σ_2>, <σ_3>)
    double threshold = 0.0;     // 1 / (2 √K)
    std::optional<EigenDecomposition> eigensystem;
};

/// Signed average (K_1 − K_0) / K of a two-outcome record.
inline double signed_average(const RegistrationRecord& r) {
    if (r.events.empty()) throw DomainError("signed_average: empty record");
    double acc = 0.0;
    for (const auto& e : r.events) acc += e.outcome == 1 ? 1.0 : -1.0;
    return acc / static_cast<double>(r.events.size());
}

/// Estimates the Bloch vector from records of σ_1, σ_2, σ_3 (in that order).
/// Indeterminable when every |estimate| < 1/(2√K); equality is determinable.
inline BasisEstimate basis_estimation(const std::array<RegistrationRecord, 3>& records, std::size_t k) {
    for (const auto& r : records)
        if (r.size() != k) throw DomainError("basis_estimation: records must all have length K");
    if (k == 0) throw DomainError("basis_estimation: K must be >= 1");
    BasisEstimate out;
    out.threshold = 1.0 / (2.0 * std::sqrt(static_cast<double>(k)));
    for (int i = 0; i < 3; ++i) out.bloch(i) = signed_average(records[static_cast<std::size_t>(i)]);
    out.determinable = (out.bloch.array().abs() >= out.threshold).any();
    if (out.determinable) out.eigensystem = hermitian_eig(0.5 * (identity(2) + bloch_operator(out.bloch)));
    return out;
}

// ---------------------------------------------------------------- eavesdropping

enum class BasisVerdict { determinable, indeterminable, not_applicable };

inline const char* to_string(BasisVerdict v) {
    switch (v) {
        case BasisVerdict::determinable: return "determinable";
        case BasisVerdict::indeterminable: return "indeterminable";
        case BasisVerdict::not_applicable: return "not_applicable";
    }
    return "not_applicable";
}

struct EavesdropReport {
    std::vector<std::pair<int, std::optional<double>>> trace_distance;  // per detector; empty routing -> nullopt
    bool nondemolition_candidate = false;
    std::vector<int> nondemolition_detectors;
    BasisVerdict basis_verdict = BasisVerdict::not_applicable;
    std::optional<BasisEstimate> basis;
};

/// True when the detector's outcomes are a consistent one-to-one relabeling
/// of the prepared labels on every event routed to it.
inline bool reproduces_relabeling(const PreparationSequence& seq, const RegistrationRecord& sub) {
    if (sub.events.empty()) return false;
    std::map<int, int> fwd, back;
    for (const auto& e : sub.events) {
        const int label = seq.labels[e.index];
        const auto [f, fnew] = fwd.try_emplace(label, e.outcome);
        const auto [b, bnew] = back.try_emplace(e.outcome, label);
        if (f->second != e.outcome || b->second != label) return false;
    }
    return true;
}

namespace detail {

inline std::optional<int> find_pauli_detector(const DetectorBank& bank, int axis) {
    if (bank.dim() != 2) return std::nullopt;
    const auto target = eigenprojectors(pauli(axis));
    for (const auto& d : bank.detectors()) {
        if (d.projectors.size() != 2) continue;
        if ((d.projectors[0] - target[0]).cwiseAbs().maxCoeff() < 1e-9 &&
            (d.projectors[1] - target[1]).cwiseAbs().maxCoeff() < 1e-9)
            return d.id;
    }
    return std::nullopt;
}

}  // namespace detail

inline EavesdropReport eavesdrop_report(const PreparationSequence& seq, const RegistrationRecord& record,
                                        const StateEnsemble& ensemble, const DetectorBank& bank) {
    EavesdropReport rep;
    const auto rho_s = source_density_matrix(seq, ensemble);
    for (const auto& d : bank.detectors()) {
        const auto sub = subsequence(record, d.id);
        if (sub.events.empty()) {
            rep.trace_distance.emplace_back(d.id, std::nullopt);
            continue;
        }
        const auto rho_m = per_detector_density(seq, record, ensemble, d.id);
        rep.trace_distance.emplace_back(d.id, trace_distance(rho_m.matrix(), rho_s.matrix()));
        if (reproduces_relabeling(seq, sub)) rep.nondemolition_detectors.push_back(d.id);
    }
    rep.nondemolition_candidate = !rep.nondemolition_detectors.empty();

    std::array<std::optional<int>, 3> ids{detail::find_pauli_detector(bank, 1), detail::find_pauli_detector(bank, 2),
                                          detail::find_pauli_detector(bank, 3)};
    if (ids[0] && ids[1] && ids[2]) {
        std::array<RegistrationRecord, 3> subs{subsequence(record, *ids[0]), subsequence(record, *ids[1]),
                                               subsequence(record, *ids[2])};
        const std::size_t k = subs[0].size();
        if (k > 0 && subs[1].size() == k && subs[2].size() == k) {
            rep.basis = basis_estimation(subs, k);
            rep.basis_verdict = rep.basis->determinable ? BasisVerdict::determinable : BasisVerdict::indeterminable;
        }
    }
    return rep;
}

}  // namespace qpair::sim
