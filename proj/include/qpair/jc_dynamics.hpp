// jc_dynamics.hpp: resonant Jaynes–Cummings amplitude evolution on a
// truncated Fock ladder and the effective field qubit entangled with the atom.
//
// Amplitudes are interaction-picture: no free ω phases. The pair
// (φ_{0,n+1}, φ_{1,n}) rotates at ω_n = ξ √(n+1):
//
//   φ_{0,n}(t) = φ_{0,n} cos ω_{n-1} t − i φ_{1,n-1} sin ω_{n-1} t
//   φ_{1,n}(t) = −i φ_{0,n+1} sin ω_n t + φ_{1,n} cos ω_n t
//
// with ω_{-1} = 0, so |0,0> (atom ground, vacuum) is stationary. The top rung
// |1,n_max> would pair with |0,n_max+1>, which lies outside the ladder; it is
// kept stationary so the truncated evolution stays unitary, and any
// population on n = n_max raises a truncation warning.

#pragma once

#include "qpair/core.hpp"

#include <cmath>
#include <string>

namespace qpair::jc {

inline constexpr double kLeakageGuard = 1e-8;

struct JCParams {
    double omega = 0.0;  // carrier frequency; unused in the interaction picture
    double xi = 1.0;     // coupling, > 0
    int n_max = 1;       // Fock truncation, >= 1

    void validate() const {
        if (!(xi > 0.0) || !std::isfinite(xi)) throw DomainError("JCParams: coupling xi must be positive");
        if (n_max < 1) throw DomainError("JCParams: n_max must be at least 1");
    }
};

/// Amplitude table φ_{k,n}, stored k-major: index k*(n_max+1) + n.
class AtomFieldState {
public:
    AtomFieldState(int n_max, Vector amplitudes) : n_max_(n_max), amps_(std::move(amplitudes)) {
        if (n_max_ < 1) throw DomainError("AtomFieldState: n_max must be at least 1");
        if (amps_.size() != 2 * (n_max_ + 1)) throw StructureError("AtomFieldState: expected 2*(n_max+1) amplitudes");
        const double n2 = amps_.squaredNorm();
        if (!(std::abs(n2 - 1.0) <= tol::exact))
            throw DomainError("AtomFieldState: state is not normalized (norm² = " + std::to_string(n2) + ")");
    }

    static AtomFieldState basis(int n_max, int k, int n) {
        Vector v = Vector::Zero(2 * (n_max + 1));
        v(k * (n_max + 1) + n) = 1.0;
        return {n_max, std::move(v)};
    }

    int n_max() const { return n_max_; }
    Eigen::Index ladder_size() const { return n_max_ + 1; }
    const Vector& amplitudes() const { return amps_; }
    cplx operator()(int k, int n) const { return amps_(k * (n_max_ + 1) + n); }

    /// φ_{k,·} as a vector over the Fock ladder.
    Vector block(int k) const { return amps_.segment(k * (n_max_ + 1), n_max_ + 1); }

    double top_population() const { return std::norm((*this)(0, n_max_)) + std::norm((*this)(1, n_max_)); }

private:
    int n_max_;
    Vector amps_;
};

/// ω_n = ξ √(n+1); n = -1 is the stationary vacuum-ground sentinel.
inline double rabi_frequency(int n, const JCParams& params) {
    if (n < -1) throw DomainError("rabi_frequency: n must be >= -1");
    if (n == -1) return 0.0;
    return params.xi * std::sqrt(static_cast<double>(n) + 1.0);
}

struct Evolution {
    AtomFieldState state;
    bool truncation_warning = false;
    double top_population = 0.0;  // max over initial and final state
};

inline Evolution evolve(const AtomFieldState& initial, const JCParams& params, double t) {
    params.validate();
    if (params.n_max != initial.n_max()) throw StructureError("evolve: n_max of state and parameters differ");
    if (!std::isfinite(t)) throw DomainError("evolve: time must be finite");

    const int nm = initial.n_max();
    const auto at = [&](int k, int n) -> cplx {
        if (n < 0 || n > nm) return 0.0;
        return initial(k, n);
    };

    Vector out(2 * (nm + 1));
    for (int n = 0; n <= nm; ++n) {
        const double w_lo = rabi_frequency(n - 1, params) * t;
        out(n) = at(0, n) * std::cos(w_lo) - kI * at(1, n - 1) * std::sin(w_lo);
        if (n < nm) {
            const double w = rabi_frequency(n, params) * t;
            out(nm + 1 + n) = -kI * at(0, n + 1) * std::sin(w) + at(1, n) * std::cos(w);
        } else {
            out(nm + 1 + n) = at(1, n);
        }
    }
    AtomFieldState s(nm, std::move(out));
    const double top = std::max(initial.top_population(), s.top_population());
    return {std::move(s), top >= kLeakageGuard, top};
}

// ---------------------------------------------------------------- effective qubit

struct EffectiveQubit {
    double theta = 0.0;  // cos θ = ‖φ_{0,·}‖, sin θ = ‖φ_{1,·}‖
    PureState psi0;
    PureState psi1;
    bool product = false;  // one atom block vanished; its psi is the vacuum by convention
};

inline EffectiveQubit extract_effective_qubit(const AtomFieldState& state) {
    const Vector b0 = state.block(0);
    const Vector b1 = state.block(1);
    const double c = b0.norm();
    const double s = b1.norm();
    const auto vacuum = PureState::basis(state.ladder_size(), 0);
    const bool empty0 = c < 1e-10;
    const bool empty1 = s < 1e-10;
    return {std::atan2(s, c), empty0 ? vacuum : PureState::normalized(b0),
            empty1 ? vacuum : PureState::normalized(b1), empty0 || empty1};
}

/// Unit vector orthogonal to psi0 inside span{psi0, psi1}. When psi1 is
/// parallel to psi0 the Fock state with the smallest overlap is used instead.
inline PureState orthogonal_partner(const PureState& psi0, const PureState& psi1) {
    if (psi0.dim() != psi1.dim()) throw StructureError("orthogonal_partner: dimension mismatch");
    const Vector& a = psi0.amplitudes();
    Vector v = psi1.amplitudes() - a * a.dot(psi1.amplitudes());
    if (v.norm() < 1e-8) {
        Eigen::Index idx = 0;
        a.cwiseAbs().minCoeff(&idx);
        v = Vector::Unit(a.size(), idx) - a * a(idx);
    }
    return PureState::normalized(v);
}

/// P_f = |ψ_0><ψ_0| + |ψ_⊥><ψ_⊥| on the Fock ladder.
inline Matrix field_qubit_projector(const PureState& psi0, const PureState& psi_perp) {
    if (psi0.dim() != psi_perp.dim()) throw StructureError("field_qubit_projector: dimension mismatch");
    if (std::abs(psi0.amplitudes().dot(psi_perp.amplitudes())) > tol::spectral)
        throw DomainError("field_qubit_projector: states are not orthogonal");
    return projector(psi0.amplitudes()) + projector(psi_perp.amplitudes());
}

/// Mode observables s_1, s_2, s_3 embedded in the Fock ladder, with ψ_0 in
/// the role of |0> and ψ_⊥ in the role of |1>.
inline std::array<Matrix, 3> field_paulis(const PureState& psi0, const PureState& psi_perp) {
    (void)field_qubit_projector(psi0, psi_perp);
    const Vector& z = psi0.amplitudes();
    const Vector& o = psi_perp.amplitudes();
    const Matrix up = o * z.adjoint();  // |ψ_⊥><ψ_0|
    return {up + up.adjoint(), -kI * up + kI * up.adjoint(), projector(o) - projector(z)};
}

/// Atom ⊗ field-qubit amplitudes c_{a,f} = <f|φ_{a,·}> with f ∈ {ψ_0, ψ_⊥}.
/// Throws when the field part leaks outside the two-dimensional span.
inline PureState qubit_pair_state(const AtomFieldState& state, const PureState& psi0, const PureState& psi_perp) {
    if (psi0.dim() != state.ladder_size()) throw StructureError("qubit_pair_state: ladder size mismatch");
    Vector c(4);
    for (int a = 0; a < 2; ++a) {
        const Vector blk = state.block(a);
        c(2 * a) = psi0.amplitudes().dot(blk);
        c(2 * a + 1) = psi_perp.amplitudes().dot(blk);
    }
    if (std::abs(c.squaredNorm() - 1.0) > tol::spectral)
        throw DomainError("qubit_pair_state: field state is not confined to span{psi0, psi_perp}");
    return PureState::normalized(c);
}

/// Convenience: the effective two-qubit state of an atom–field state.
inline PureState qubit_pair_state(const AtomFieldState& state) {
    const auto q = extract_effective_qubit(state);
    return qubit_pair_state(state, q.psi0, orthogonal_partner(q.psi0, q.psi1));
}

}  // namespace qpair::jc
