// complexity.hpp: complexity of measurement, C = log2(M) for M measurement
// events, its composition rules, and event budgets split over series.

#pragma once

#include "qpair/core.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace qpair::complexity {

struct Complexity {
    double bits = 0.0;

    /// -inf marks a measurement that needs no events (a certain outcome).
    bool degenerate() const { return std::isinf(bits) && bits < 0; }
    friend bool operator==(const Complexity&, const Complexity&) = default;
};

/// Standard error target s ∈ (0, 1/2] per measured probability.
class ErrorSpec {
public:
    explicit ErrorSpec(double s) : s_(s) {
        if (!(s > 0.0 && s <= 0.5)) throw DomainError("ErrorSpec: s must lie in (0, 1/2]");
    }
    double s() const { return s_; }
    /// −2 log2 s, the term every budget formula shares.
    double precision_bits() const { return -2.0 * std::log2(s_); }

private:
    double s_;
};

struct SeriesPlan {
    std::int64_t num_series = 1;
    std::int64_t events_per_series = 1;
    std::int64_t total_events = 1;
    std::int64_t required_events = 1;  // ceil(2^bits) before splitting over series
    double bits = 0.0;
};

// ---------------------------------------------------------------- events <-> bits

inline Complexity complexity_from_events(std::int64_t events) {
    if (events < 1) throw DomainError("complexity_from_events: event count must be >= 1");
    return {std::log2(static_cast<double>(events))};
}

/// ceil(2^bits), at least 1. Values within 1e-9 (relative) of an integer snap
/// to it so that exact budgets such as 2^log2(125) stay 125.
inline std::int64_t events_from_complexity(Complexity c) {
    if (c.degenerate()) return 0;
    if (!std::isfinite(c.bits)) throw DomainError("events_from_complexity: complexity is not finite");
    if (c.bits > 62.0) throw DomainError("events_from_complexity: event count overflows");
    const double m = std::exp2(c.bits);
    const double nearest = std::round(m);
    const double e = std::abs(m - nearest) <= 1e-9 * std::max(1.0, m) ? nearest : std::ceil(m);
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(e));
}

// ---------------------------------------------------------------- composition

/// Joint measurement (correlated parts): bits add.
inline Complexity compose_joint(Complexity a, Complexity b) { return {a.bits + b.bits}; }

/// Successive measurement of incompatible observables: log2 Σ 2^{c_i}.
inline Complexity compose_successive(std::span<const Complexity> cs) {
    if (cs.empty()) throw DomainError("compose_successive: empty list");
    double mx = -std::numeric_limits<double>::infinity();
    for (const auto& c : cs) mx = std::max(mx, c.bits);
    if (std::isinf(mx) && mx < 0) return {mx};
    double acc = 0.0;
    for (const auto& c : cs) acc += std::exp2(c.bits - mx);
    return {mx + std::log2(acc)};
}

// ---------------------------------------------------------------- budgets

/// C_p(p, s) = log2(p(1−p)) − 2 log2 s.
inline Complexity bernoulli_complexity(double p, ErrorSpec err) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("bernoulli_complexity: p must lie in [0,1]");
    if (p == 0.0 || p == 1.0) return {-std::numeric_limits<double>::infinity()};
    return {std::log2(p * (1.0 - p)) + err.precision_bits()};
}

struct ComplexityBounds {
    Complexity inf;
    Complexity sup;
    bool inverted = false;  // inf > sup: the printed bounds do not bracket
};

/// −log2 N − 2 log2 s ≤ C_N(s) ≤ −4 − 2 log2 s, exactly as stated; the pair
/// only brackets for N ≥ 16, otherwise `inverted` is raised.
inline ComplexityBounds distribution_complexity_bounds(int n, ErrorSpec err) {
    if (n < 2) throw DomainError("distribution_complexity_bounds: N must be >= 2");
    const Complexity lo{-std::log2(static_cast<double>(n)) + err.precision_bits()};
    const Complexity hi{-4.0 + err.precision_bits()};
    return {lo, hi, lo.bits > hi.bits};
}

/// C_2 = log2(3 − Δp² − d′² − d″²) − 2 log2 s for a qubit with Bloch
/// components (Δp, d′, d″).
inline Complexity qubit_state_complexity(double dp, double d1, double d2, ErrorSpec err) {
    const double r2 = dp * dp + d1 * d1 + d2 * d2;
    if (r2 > 1.0 + tol::exact) throw DomainError("qubit_state_complexity: Bloch vector longer than 1");
    return {std::log2(3.0 - std::min(r2, 1.0)) + err.precision_bits()};
}

/// Splits ceil(2^bits) events over `num_series` series, rounding up again.
inline SeriesPlan series_plan(Complexity c, std::int64_t num_series) {
    if (num_series < 1) throw DomainError("series_plan: need at least one series");
    const std::int64_t required = events_from_complexity(c);
    const std::int64_t per = std::max<std::int64_t>(1, (required + num_series - 1) / num_series);
    return {num_series, per, per * num_series, required, c.bits};
}

/// Plan with an explicit per-series event count.
inline SeriesPlan fixed_plan(std::int64_t num_series, std::int64_t events_per_series) {
    if (num_series < 1 || events_per_series < 1)
        throw DomainError("fixed_plan: series and events per series must be >= 1");
    const std::int64_t total = num_series * events_per_series;
    return {num_series, events_per_series, total, total, std::log2(static_cast<double>(total))};
}

inline constexpr std::int64_t kQuquartSeries = 5;
inline constexpr std::int64_t kPriorKnowledgeSeries = 3;

/// log2(5/4) + log2(3/4) − 2 log2 s ≤ C_4(s) ≤ log2(5/4) − 2 log2 s.
inline ComplexityBounds ququart_complexity_bounds(ErrorSpec err) {
    const double base = std::log2(5.0 / 4.0) + err.precision_bits();
    return {{base + std::log2(3.0 / 4.0)}, {base}, false};
}

struct PlanRange {
    SeriesPlan min;
    SeriesPlan max;
};

inline PlanRange ququart_series_plan(ErrorSpec err) {
    const auto b = ququart_complexity_bounds(err);
    return {series_plan(b.inf, kQuquartSeries), series_plan(b.sup, kQuquartSeries)};
}

/// With the canonical local bases known in advance: C_4(s) = log2 3 − 2 − 2 log2 s over 3 series.
inline SeriesPlan prior_knowledge_plan(ErrorSpec err) {
    return series_plan({std::log2(3.0) - 2.0 + err.precision_bits()}, kPriorKnowledgeSeries);
}

inline Complexity prior_knowledge_complexity(ErrorSpec err) { return {prior_knowledge_plan(err).bits}; }

// ---------------------------------------------------------------- counting

/// Minimal number of non-degenerate detectors for a dim-dimensional state: dim + 1.
inline int minimal_detector_count(int dim) {
    if (dim < 2) throw DomainError("minimal_detector_count: dim must be >= 2");
    return dim + 1;
}

/// 2^n + 1 detectors for n qubits.
inline std::int64_t minimal_detector_count_for_qubits(int n) {
    if (n < 1 || n > 61) throw DomainError("minimal_detector_count_for_qubits: n out of range");
    return (std::int64_t{1} << n) + 1;
}

enum class Knowledge { eigenbasis_known, local_bases_known, general };

/// Independent values to determine for a qubit pair at each level of prior knowledge.
inline int parameter_count(Knowledge k) {
    switch (k) {
        case Knowledge::eigenbasis_known: return 3;
        case Knowledge::local_bases_known: return 5;
        case Knowledge::general: return 9;
    }
    return 9;
}

/// Pairs of local observables, (N_a+1)(N_f+1), and how many of them may be skipped, N_a + N_f.
struct LocalPairCount {
    int available;
    int needed;
    int excludable;
};

inline LocalPairCount local_pair_count(int dim_atom, int dim_field) {
    if (dim_atom < 2 || dim_field < 2) throw DomainError("local_pair_count: dimensions must be >= 2");
    return {(dim_atom + 1) * (dim_field + 1), dim_atom * dim_field + 1, dim_atom + dim_field};
}

}  // namespace qpair::complexity
