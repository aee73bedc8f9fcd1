// tomography.hpp: state reconstruction for a qubit and a qubit pair.
//
//   * qubit_reconstruct: three signed Pauli averages -> 2x2 density matrix.
//   * canonical_state / forward_joint_distributions / solve_canonical: the
//     six-parameter canonical family (p_1..p_4, θ_c, θ_e) whose eigenvectors
//     are Schmidt-form Cat/EPR states in fixed local bases, and the closed
//     form inversion of its three correlated joint distributions.
//   * full_reconstruct: the adaptive five-pair protocol (three lab pairs,
//     Bloch alignment, two cross pairs, azimuthal diagonalization, canonical
//     solve) and a nine-pair linear inversion used as a reference.
//   * linear_inversion / j_observables / mub_observables: generic least-squares
//     tomography from complete detector sets.

#pragma once

#include "qpair/complexity.hpp"
#include "qpair/core.hpp"
#include "qpair/measurement_sim.hpp"
#include "qpair/rng.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qpair::tomo {

// ---------------------------------------------------------------- canonical family

/// Eigenvalues p_1..p_4 of |Cat:0>, |Cat:1>, |EPR:0>, |EPR:1> and the two
/// Schmidt angles. Solutions use p_1 ≥ p_2, p_3 ≥ p_4 and θ ∈ [0, π).
struct CanonicalParams {
    std::array<double, 4> p{1.0, 0.0, 0.0, 0.0};
    double theta_c = 0.0;
    double theta_e = 0.0;

    void validate() const {
        double sum = 0.0;
        for (double v : p) {
            if (!(v >= -tol::exact)) throw DomainError("CanonicalParams: negative eigenvalue");
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol::exact) throw DomainError("CanonicalParams: eigenvalues do not sum to 1");
        if (!std::isfinite(theta_c) || !std::isfinite(theta_e)) throw DomainError("CanonicalParams: non-finite angle");
    }
};

/// |Cat:0>, |Cat:1>, |EPR:0>, |EPR:1> in the atom ⊗ field basis.
inline std::array<Vector, 4> canonical_basis(double theta_c, double theta_e) {
    const double cc = std::cos(theta_c), sc = std::sin(theta_c);
    const double ce = std::cos(theta_e), se = std::sin(theta_e);
    std::array<Vector, 4> b;
    for (auto& v : b) v = Vector::Zero(4);
    b[0](0) = cc;  b[0](3) = sc;
    b[1](0) = -sc; b[1](3) = cc;
    b[2](1) = ce;  b[2](2) = se;
    b[3](1) = -se; b[3](2) = ce;
    return b;
}

inline DensityMatrix canonical_state(const CanonicalParams& params) {
    params.validate();
    const auto basis = canonical_basis(params.theta_c, params.theta_e);
    Matrix rho = Matrix::Zero(4, 4);
    for (std::size_t m = 0; m < 4; ++m) rho += std::max(0.0, params.p[m]) * projector(basis[m]);
    return DensityMatrix(rho, TensorDims{});
}

/// 2x2 table p_{b_a, b_f} for one local observable pair.
struct JointDistribution {
    int pair_id = 0;  // 33, 11, 22 for the canonical pairs; series index otherwise
    std::array<std::array<double, 2>, 2> table{};

    double operator()(int ba, int bf) const { return table[static_cast<std::size_t>(ba)][static_cast<std::size_t>(bf)]; }
    double sum() const { return table[0][0] + table[0][1] + table[1][0] + table[1][1]; }
    /// <A>, <F>, <A F> with outcome b mapped to eigenvalue 2b − 1.
    double mean_atom() const { return table[1][0] + table[1][1] - table[0][0] - table[0][1]; }
    double mean_field() const { return table[0][1] + table[1][1] - table[0][0] - table[1][0]; }
    double correlation() const { return table[0][0] + table[1][1] - table[0][1] - table[1][0]; }

    static JointDistribution from_flat(int id, const std::array<double, 4>& v) {
        return {id, {{{v[0], v[1]}, {v[2], v[3]}}}};
    }
};

struct ForwardTables {
    JointDistribution d33;
    JointDistribution d11;
    JointDistribution d22;
};

/// Joint probabilities of σ_3&s_3, σ_1&s_1, σ_2&s_2 on the canonical state.
inline ForwardTables forward_joint_distributions(const CanonicalParams& params) {
    params.validate();
    const auto& p = params.p;
    const double cat_sum = (p[0] + p[1]) / 2, cat_dif = (p[0] - p[1]) / 2;
    const double epr_sum = (p[2] + p[3]) / 2, epr_dif = (p[2] - p[3]) / 2;
    const double c2c = std::cos(2 * params.theta_c), c2e = std::cos(2 * params.theta_e);
    const double sc = (p[0] - p[1]) / 4 * std::sin(2 * params.theta_c);
    const double se = (p[2] - p[3]) / 4 * std::sin(2 * params.theta_e);

    ForwardTables f;
    f.d33.pair_id = 33;
    f.d33.table = {{{cat_sum + cat_dif * c2c, epr_sum + epr_dif * c2e},
                    {epr_sum - epr_dif * c2e, cat_sum - cat_dif * c2c}}};
    const double same11 = 0.25 + sc + se, diff11 = 0.25 - sc - se;
    f.d11.pair_id = 11;
    f.d11.table = {{{same11, diff11}, {diff11, same11}}};
    const double same22 = 0.25 - sc + se, diff22 = 0.25 + sc - se;
    f.d22.pair_id = 22;
    f.d22.table = {{{same22, diff22}, {diff22, same22}}};
    return f;
}

struct CanonicalSolution {
    CanonicalParams params;
    bool cat_undetermined = false;  // p_1 = p_2: θ_c carries no information, set to 0
    bool epr_undetermined = false;  // p_3 = p_4: θ_e set to 0
    bool projected = false;         // infeasible magnitudes clamped (only with project_infeasible)
    double infeasibility = 0.0;     // max(‖component‖ − sum) before clamping
};

struct SolveOptions {
    bool project_infeasible = false;
};

namespace detail {

// θ ∈ [0, π) from (cos 2θ, sin 2θ) components.
inline double half_angle(double s, double c) {
    double th = 0.5 * std::atan2(s, c);
    if (th < 0) th += kPi;
    if (kPi - th < 1e-12) th = 0.0;
    return th;
}

}  // namespace detail

inline CanonicalSolution solve_canonical(const JointDistribution& d33, const JointDistribution& d11,
                                         const JointDistribution& d22, SolveOptions opts = {}) {
    for (const auto* d : {&d33, &d11, &d22})
        if (std::abs(d->sum() - 1.0) > 1e-9) throw DomainError("solve_canonical: table is not normalized");

    const double cat_sum = d33(0, 0) + d33(1, 1);
    const double cat_cos = d33(0, 0) - d33(1, 1);
    const double epr_sum = d33(0, 1) + d33(1, 0);
    const double epr_cos = d33(0, 1) - d33(1, 0);
    const double a = 4 * d11(0, 0) - 1;
    const double b = 4 * d22(0, 0) - 1;
    const double cat_sin = (a - b) / 2;
    const double epr_sin = (a + b) / 2;

    double cat_gap = std::hypot(cat_cos, cat_sin);
    double epr_gap = std::hypot(epr_cos, epr_sin);
    CanonicalSolution out;
    out.infeasibility = std::max({cat_gap - cat_sum, epr_gap - epr_sum, -cat_sum, -epr_sum, 0.0});
    if (out.infeasibility > 1e-9) {
        if (!opts.project_infeasible)
            throw InconsistencyError("solve_canonical: tables are inconsistent with a canonical state",
                                     out.infeasibility);
        out.projected = true;
    }
    const double cs = std::max(cat_sum, 0.0), es = std::max(epr_sum, 0.0);
    cat_gap = std::min(cat_gap, cs);
    epr_gap = std::min(epr_gap, es);

    auto& p = out.params;
    p.p = {(cs + cat_gap) / 2, (cs - cat_gap) / 2, (es + epr_gap) / 2, (es - epr_gap) / 2};
    const double norm = p.p[0] + p.p[1] + p.p[2] + p.p[3];
    for (double& v : p.p) v /= norm;

    out.cat_undetermined = cat_gap < tol::degenerate_gap;
    out.epr_undetermined = epr_gap < tol::degenerate_gap;
    p.theta_c = out.cat_undetermined ? 0.0 : detail::half_angle(cat_sin, cat_cos);
    p.theta_e = out.epr_undetermined ? 0.0 : detail::half_angle(epr_sin, epr_cos);
    return out;
}

// ---------------------------------------------------------------- single qubit

struct QubitReconstruction {
    DensityMatrix rho;
    bool projected = false;  // Bloch vector was longer than 1 and was scaled back
};

/// ρ = ½ I + (Δp/2) σ_3 + (d′/2) σ_1 + (d″/2) σ_2. With an error target s,
/// Bloch lengths² beyond 1 + 3s are rejected as unphysical data.
inline QubitReconstruction qubit_reconstruct(double dp, double d1, double d2, std::optional<double> s = std::nullopt) {
    Vec3 r(d1, d2, dp);
    const double n2 = r.squaredNorm();
    if (s && n2 > 1.0 + 3.0 * *s) throw DomainError("qubit_reconstruct: averages far outside the Bloch ball");
    const bool projected = n2 > 1.0;
    if (projected) r /= std::sqrt(n2);
    return {qubit_from_bloch(r), projected};
}

// ---------------------------------------------------------------- frame geometry

inline Eigen::Matrix2d rotation2(double alpha) {
    Eigen::Matrix2d r;
    r << std::cos(alpha), -std::sin(alpha), std::sin(alpha), std::cos(alpha);
    return r;
}

struct Alignment {
    Rot3 rotation = Rot3::Identity();  // columns: new axes; third column along the mean
    bool degenerate = false;
};

/// Minimal-angle rotation taking ε_3 to the direction of `mean`. For a mean
/// antiparallel to ε_3 the rotation is by π about ε_1.
inline Alignment bloch_align(const Vec3& mean) {
    const double n = mean.norm();
    if (n < 1e-9) return {Rot3::Identity(), true};
    const Vec3 m = mean / n;
    const Vec3 z = Vec3::UnitZ();
    Vec3 axis = z.cross(m);
    const double s = axis.norm();
    const double c = m.dot(z);
    if (s < 1e-15) {
        if (c > 0) return {Rot3::Identity(), false};
        return {Eigen::AngleAxisd(kPi, Vec3::UnitX()).toRotationMatrix(), false};
    }
    axis /= s;
    return {Eigen::AngleAxisd(std::atan2(s, c), axis).toRotationMatrix(), false};
}

/// V_{a,b} = <σ̃_a s̃_b> − <σ̃_a><s̃_b>, a, b ∈ {1, 2}.
inline Eigen::Matrix2d covariance_matrix(const Eigen::Matrix2d& correlations, const Eigen::Vector2d& atom_means,
                                         const Eigen::Vector2d& field_means) {
    return correlations - atom_means * field_means.transpose();
}

struct Azimuth {
    double alpha_a = 0.0;
    double alpha_f = 0.0;
    Eigen::Vector2d diagonal = Eigen::Vector2d::Zero();  // signed, of R(α_a) V R(α_f)^T
    bool undetermined = false;
};

/// Angles with R(α_a) V R(α_f)^T diagonal, from the SVD of V. Of the
/// equivalent solutions (common quarter turns, half turns of one side) the
/// smallest is returned: α_f ∈ (−π/4, π/4], α_a ∈ (−π/2, π/2], so an
/// already diagonal V gives (0, 0).
inline Azimuth azimuthal_diagonalize(const Eigen::Matrix2d& v) {
    if (v.norm() < 1e-9) return {0.0, 0.0, Eigen::Vector2d::Zero(), true};
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(v, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix2d w = svd.matrixU(), z = svd.matrixV();
    if (w.determinant() < 0) w.col(1) *= -1;
    if (z.determinant() < 0) z.col(1) *= -1;
    double aa = -std::atan2(w(1, 0), w(0, 0));
    double af = -std::atan2(z(1, 0), z(0, 0));
    const double quarter = std::round(af / (kPi / 2)) * (kPi / 2);
    af -= quarter;
    aa -= quarter;
    if (af <= -kPi / 4 + 1e-12) {
        af += kPi / 2;
        aa += kPi / 2;
    }
    aa -= std::round(aa / kPi) * kPi;
    if (aa <= -kPi / 2 + 1e-12) aa += kPi;
    if (std::abs(af) < 1e-15) af = 0.0;
    if (std::abs(aa) < 1e-15) aa = 0.0;
    const Eigen::Matrix2d d = rotation2(aa) * v * rotation2(af).transpose();
    return {aa, af, Eigen::Vector2d(d(0, 0), d(1, 1)), false};
}

/// Frame after turning the first two axes of `aligned` by α about the third.
inline Rot3 azimuthal_frame(const Rot3& aligned, double alpha) {
    Rot3 turn = Rot3::Identity();
    turn.topLeftCorner<2, 2>() = rotation2(alpha).transpose();
    return aligned * turn;
}

// ---------------------------------------------------------------- samplers

/// A pair of local observables n_a·σ and n_f·s.
struct LocalPair {
    Vec3 atom_axis = Vec3::UnitZ();
    Vec3 field_axis = Vec3::UnitZ();
};

using JointTable = std::array<double, 4>;  // index 2*b_a + b_f

/// Projectors (I − n·σ)/2, (I + n·σ)/2 for outcomes 0 and 1.
inline std::array<Matrix, 2> axis_projectors(const Vec3& axis) {
    const Matrix o = bloch_operator(axis.normalized());
    return {0.5 * (identity(2) - o), 0.5 * (identity(2) + o)};
}

inline std::vector<Matrix> pair_projectors(const LocalPair& pair) {
    const auto pa = axis_projectors(pair.atom_axis);
    const auto pf = axis_projectors(pair.field_axis);
    return {tensor_product(pa[0], pf[0]), tensor_product(pa[0], pf[1]), tensor_product(pa[1], pf[0]),
            tensor_product(pa[1], pf[1])};
}

inline JointTable born_table(const DensityMatrix& rho, const LocalPair& pair) {
    const auto projs = pair_projectors(pair);
    const auto p = born_probabilities(rho, projs);
    return {p[0], p[1], p[2], p[3]};
}

/// Source of joint outcome statistics for a requested local pair.
class JointSampler {
public:
    virtual ~JointSampler() = default;
    /// Relative frequencies of the four joint outcomes of series `series`.
    virtual JointTable measure(std::size_t series, const LocalPair& pair, std::int64_t events) = 0;
    virtual bool exact() const { return false; }
};

/// Exact Born-rule probabilities, no sampling.
class BornSampler final : public JointSampler {
public:
    explicit BornSampler(DensityMatrix rho) : rho_(std::move(rho)) {
        if (rho_.dim() != 4) throw StructureError("BornSampler: state must be a qubit pair");
    }
    JointTable measure(std::size_t, const LocalPair& pair, std::int64_t) override { return born_table(rho_, pair); }
    bool exact() const override { return true; }

private:
    DensityMatrix rho_;
};

/// Monte-Carlo sampling: series i draws from CounterRng(seed, i) and every
/// event is logged with detector id i and outcome 2*b_a + b_f.
class MonteCarloSampler final : public JointSampler {
public:
    MonteCarloSampler(DensityMatrix rho, std::uint64_t seed) : rho_(std::move(rho)) {
        if (rho_.dim() != 4) throw StructureError("MonteCarloSampler: state must be a qubit pair");
        log_.seed = seed;
    }

    JointTable measure(std::size_t series, const LocalPair& pair, std::int64_t events) override {
        if (events < 1) throw DomainError("MonteCarloSampler: need at least one event per series");
        const auto p = born_table(rho_, pair);
        CounterRng rng(log_.seed, series);
        JointTable counts{};
        for (std::int64_t e = 0; e < events; ++e) {
            const auto m = sample_index(rng, p);
            counts[m] += 1.0;
            log_.events.push_back({log_.events.size(), static_cast<int>(series), static_cast<int>(m)});
        }
        for (double& c : counts) c /= static_cast<double>(events);
        return counts;
    }

    const sim::RegistrationRecord& record() const { return log_; }

private:
    DensityMatrix rho_;
    sim::RegistrationRecord log_;
};

/// Replays a recorded event log: series i reads the events of detector i.
class RecordedSampler final : public JointSampler {
public:
    explicit RecordedSampler(sim::RegistrationRecord record) : record_(std::move(record)) {}

    JointTable measure(std::size_t series, const LocalPair&, std::int64_t) override {
        JointTable counts{};
        double n = 0.0;
        for (const auto& e : record_.events) {
            if (e.detector != static_cast<int>(series)) continue;
            if (e.outcome < 0 || e.outcome > 3) throw DomainError("RecordedSampler: joint outcome must be 0..3");
            counts[static_cast<std::size_t>(e.outcome)] += 1.0;
            n += 1.0;
        }
        if (n == 0.0) throw DomainError("RecordedSampler: no events for series " + std::to_string(series));
        for (double& c : counts) c /= n;
        return counts;
    }

private:
    sim::RegistrationRecord record_;
};

// ---------------------------------------------------------------- linear inversion

struct LinearInversion {
    Matrix raw;               // unconstrained least-squares estimate (trace 1, Hermitian)
    DensityMatrix rho;        // after eigenvalue clipping
    double condition_number;  // of the design matrix
};

namespace detail {

// Traceless Hermitian basis: Pauli products (dim 4) or Pauli matrices (dim 2).
inline std::vector<Matrix> traceless_basis(Eigen::Index dim) {
    std::vector<Matrix> b;
    if (dim == 2) {
        for (int i = 1; i <= 3; ++i) b.push_back(pauli(i));
    } else if (dim == 4) {
        for (int i = 0; i <= 3; ++i)
            for (int j = 0; j <= 3; ++j)
                if (i + j > 0) b.push_back(tensor_product(pauli(i), pauli(j)));
    } else {
        throw StructureError("linear_inversion: dimension must be 2 or 4");
    }
    return b;
}

}  // namespace detail

/// Least-squares inversion of p_{d,m} = Tr(P_{d,m} ρ) over the traceless
/// parameters of ρ = (I + Σ c_j B_j) / dim, followed by eigenvalue clipping.
inline LinearInversion linear_inversion(const std::vector<std::vector<Matrix>>& detectors,
                                        const std::vector<std::vector<double>>& probabilities) {
    if (detectors.empty() || detectors.size() != probabilities.size())
        throw StructureError("linear_inversion: need one distribution per detector");
    const Eigen::Index dim = detectors.front().front().rows();
    const auto basis = detail::traceless_basis(dim);
    const auto nparam = static_cast<Eigen::Index>(basis.size());

    Eigen::Index rows = 0;
    for (std::size_t d = 0; d < detectors.size(); ++d) {
        check_complete(detectors[d], dim);
        if (detectors[d].size() != probabilities[d].size())
            throw StructureError("linear_inversion: distribution length differs from detector outcomes");
        rows += static_cast<Eigen::Index>(detectors[d].size());
    }
    Eigen::MatrixXd a(rows, nparam);
    Eigen::VectorXd rhs(rows);
    Eigen::Index r = 0;
    const double ddim = static_cast<double>(dim);
    for (std::size_t d = 0; d < detectors.size(); ++d)
        for (std::size_t m = 0; m < detectors[d].size(); ++m, ++r) {
            const Matrix& proj = detectors[d][m];
            for (Eigen::Index j = 0; j < nparam; ++j)
                a(r, j) = (proj * basis[static_cast<std::size_t>(j)]).trace().real() / ddim;
            rhs(r) = probabilities[d][m] - proj.trace().real() / ddim;
        }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smax = sv(0), smin = sv(sv.size() - 1);
    const double cond = smin > 0 ? smax / smin : INFINITY;
    if (rows < nparam || smin < 1e-10 * smax)
        throw IncompletenessError("linear_inversion: detector design is not informationally complete", cond);
    const Eigen::VectorXd c = svd.solve(rhs);

    Matrix raw = identity(dim);
    for (Eigen::Index j = 0; j < nparam; ++j) raw += c(j) * basis[static_cast<std::size_t>(j)];
    raw /= ddim;
    return {raw, DensityMatrix(clip_to_density(raw), dim == 4 ? std::optional<TensorDims>(TensorDims{}) : std::nullopt,
                               1e-9),
            cond};
}

/// Ĵ_0 and Ĵ_k = e^{−iπ(k−1)/2} Ĵ_+ + e^{iπ(k−1)/2} Ĵ_−, k = 1..4, with the
/// spin-3/2 ladder Ĵ_+ = √3|2><1| + 2|3><2| + √3|4><3| and Ĵ_− = Ĵ_+^†.
inline std::array<Matrix, 5> j_operators() {
    Matrix jp = Matrix::Zero(4, 4);
    jp(1, 0) = std::sqrt(3.0);
    jp(2, 1) = 2.0;
    jp(3, 2) = std::sqrt(3.0);
    const Matrix jm = jp.adjoint();
    std::array<Matrix, 5> out;
    out[0] = Matrix::Zero(4, 4);
    out[0].diagonal() << -1.5, -0.5, 0.5, 1.5;
    for (int k = 1; k <= 4; ++k) {
        const cplx ph = std::exp(-kI * (kPi / 2 * (k - 1)));
        out[static_cast<std::size_t>(k)] = ph * jp + std::conj(ph) * jm;
    }
    return out;
}

/// Eigenprojector sets of the five J operators.
inline std::vector<std::vector<Matrix>> j_observables() {
    std::vector<std::vector<Matrix>> out;
    for (const auto& j : j_operators()) out.push_back(eigenprojectors(j));
    return out;
}

/// Five mutually unbiased bases of the qubit pair, each the eigenbasis of a
/// non-degenerate combination P + 2Q of two commuting Pauli products from one
/// of the five maximal commuting classes.
inline std::vector<std::vector<Matrix>> mub_observables() {
    const auto pp = [](int i, int j) { return tensor_product(pauli(i), pauli(j)); };
    const std::array<std::array<std::pair<int, int>, 2>, 5> classes{{
        {{{3, 0}, {0, 3}}},
        {{{1, 0}, {0, 1}}},
        {{{2, 0}, {0, 2}}},
        {{{1, 2}, {2, 3}}},
        {{{2, 1}, {3, 2}}},
    }};
    std::vector<std::vector<Matrix>> out;
    for (const auto& c : classes) {
        const Matrix o = pp(c[0].first, c[0].second) + 2.0 * pp(c[1].first, c[1].second);
        out.push_back(eigenprojectors(o));
    }
    return out;
}

inline LinearInversion ququart_linear_inversion(const std::vector<std::vector<Matrix>>& detectors,
                                                const std::vector<ProbabilityDistribution>& probabilities) {
    std::vector<std::vector<double>> p;
    for (const auto& d : probabilities) p.push_back(d.values());
    return linear_inversion(detectors, p);
}

inline LinearInversion ququart_linear_inversion(const std::vector<ProbabilityDistribution>& probabilities) {
    return ququart_linear_inversion(j_observables(), probabilities);
}

// ---------------------------------------------------------------- full pipeline

enum class Protocol { minimal5, full9 };

inline const char* to_string(Protocol p) { return p == Protocol::minimal5 ? "minimal5" : "full9"; }

struct ReconstructionDiagnostics {
    bool atom_alignment_degenerate = false;
    bool field_alignment_degenerate = false;
    bool azimuth_undetermined = false;
    bool cat_undetermined = false;
    bool epr_undetermined = false;
    bool projected = false;              // infeasible estimates were clamped
    double infeasibility = 0.0;
    double frame_condition = 1.0;        // of the 3x3 system for the unmeasured aligned correlations
    double inversion_condition = 0.0;    // full9 design matrix
    double residual = 0.0;               // max |measured − predicted| over all measured tables
    std::int64_t events_used = 0;
    std::size_t series = 0;
    std::vector<LocalPair> pairs;        // in measurement order
};

struct ReconstructionResult {
    std::optional<CanonicalParams> params;  // absent for full9
    DensityMatrix rho;
    Rot3 atom_frame = Rot3::Identity();     // columns: canonical atom axes in the lab frame
    Rot3 field_frame = Rot3::Identity();
    ReconstructionDiagnostics diagnostics;
};

struct ReconstructOptions {
    /// Clamp estimates that fall outside the canonical family instead of
    /// throwing InconsistencyError; meant for sampled data.
    bool project_infeasible = false;
};

namespace detail {

inline JointDistribution canonical_table(int id, int axis, const Vec3& a, const Vec3& b, double t) {
    JointDistribution d{id, {}};
    for (int ba = 0; ba < 2; ++ba)
        for (int bf = 0; bf < 2; ++bf) {
            const double sa = 2.0 * ba - 1.0, sf = 2.0 * bf - 1.0;
            d.table[static_cast<std::size_t>(ba)][static_cast<std::size_t>(bf)] =
                0.25 * (1.0 + sa * a(axis) + sf * b(axis) + sa * sf * t);
        }
    return d;
}

inline double table_residual(const JointTable& measured, const DensityMatrix& rho, const LocalPair& pair) {
    const auto predicted = born_table(rho, pair);
    double r = 0.0;
    for (std::size_t i = 0; i < 4; ++i) r = std::max(r, std::abs(measured[i] - predicted[i]));
    return r;
}

}  // namespace detail

inline ReconstructionResult full_reconstruct(JointSampler& sampler, const complexity::SeriesPlan& budget,
                                             Protocol protocol, ReconstructOptions opts = {}) {
    if (budget.events_per_series < 1) throw DomainError("full_reconstruct: budget gives less than one event per series");
    const std::int64_t events = budget.events_per_series;
    ReconstructionDiagnostics diag;
    std::vector<JointTable> tables;

    const auto measure = [&](const LocalPair& pair) {
        tables.push_back(sampler.measure(diag.series, pair, events));
        diag.pairs.push_back(pair);
        ++diag.series;
        if (!sampler.exact()) diag.events_used += events;
        return JointDistribution::from_flat(static_cast<int>(diag.series - 1), tables.back());
    };
    const std::array<Vec3, 3> axes{Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};

    if (protocol == Protocol::full9) {
        std::vector<std::vector<Matrix>> dets;
        std::vector<std::vector<double>> probs;
        for (int x = 0; x < 3; ++x)
            for (int y = 0; y < 3; ++y) {
                const LocalPair pair{axes[static_cast<std::size_t>(x)], axes[static_cast<std::size_t>(y)]};
                measure(pair);
                dets.push_back(pair_projectors(pair));
                probs.emplace_back(tables.back().begin(), tables.back().end());
            }
        auto inv = linear_inversion(dets, probs);
        diag.inversion_condition = inv.condition_number;
        for (std::size_t s = 0; s < tables.size(); ++s)
            diag.residual = std::max(diag.residual, detail::table_residual(tables[s], inv.rho, diag.pairs[s]));
        return {std::nullopt, std::move(inv.rho), Rot3::Identity(), Rot3::Identity(), std::move(diag)};
    }

    // (1) σ_x & s_x in the lab frame.
    Vec3 atom_mean, field_mean, lab_corr;
    for (int x = 0; x < 3; ++x) {
        const auto d = measure({axes[static_cast<std::size_t>(x)], axes[static_cast<std::size_t>(x)]});
        atom_mean(x) = d.mean_atom();
        field_mean(x) = d.mean_field();
        lab_corr(x) = d.correlation();
    }

    // (2)-(3) reduced states; ε_3 is turned onto the axis of the local mean,
    // taking the sign of the mean that is nearer the lab ε_3.
    const auto axis_of = [](const Vec3& m) { return m(2) < 0 ? Vec3(-m) : m; };
    const auto al_a = bloch_align(axis_of(atom_mean));
    const auto al_f = bloch_align(axis_of(field_mean));
    diag.atom_alignment_degenerate = al_a.degenerate;
    diag.field_alignment_degenerate = al_f.degenerate;
    const Rot3& ra = al_a.rotation;
    const Rot3& rf = al_f.rotation;

    // (4) cross pairs σ̃_1 s̃_2 and σ̃_2 s̃_1.
    const auto d12 = measure({ra.col(0), rf.col(1)});
    const auto d21 = measure({ra.col(1), rf.col(0)});
    const double v12 = d12.correlation() - d12.mean_atom() * d12.mean_field();
    const double v21 = d21.correlation() - d21.mean_atom() * d21.mean_field();

    // Under the canonical model the aligned correlation tensor is
    // [[V, 0], [0, t33]]; the lab diagonal <σ_x s_x> then fixes V_11, V_22, t33.
    Eigen::Matrix3d m;
    Eigen::Vector3d rhs;
    for (int x = 0; x < 3; ++x) {
        for (int k = 0; k < 3; ++k) m(x, k) = ra(x, k) * rf(x, k);
        rhs(x) = lab_corr(x) - ra(x, 0) * v12 * rf(x, 1) - ra(x, 1) * v21 * rf(x, 0);
    }
    Eigen::JacobiSVD<Eigen::Matrix3d> msvd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& msv = msvd.singularValues();
    diag.frame_condition = msv(2) > 0 ? msv(0) / msv(2) : INFINITY;
    const Eigen::Vector3d u = msvd.solve(rhs);

    Eigen::Matrix2d v;
    v << u(0), v12, v21, u(1);

    // (5) azimuthal turn that diagonalizes V.
    const auto az = azimuthal_diagonalize(v);
    diag.azimuth_undetermined = az.undetermined;
    const Rot3 fa = azimuthal_frame(ra, az.alpha_a);
    const Rot3 ff = azimuthal_frame(rf, az.alpha_f);

    // (6) distributions re-expressed in the canonical frames, then solved.
    const Vec3 a_can = fa.transpose() * atom_mean;
    const Vec3 b_can = ff.transpose() * field_mean;
    const auto t33 = detail::canonical_table(33, 2, a_can, b_can, u(2));
    const auto t11 = detail::canonical_table(11, 0, a_can, b_can, az.diagonal(0));
    const auto t22 = detail::canonical_table(22, 1, a_can, b_can, az.diagonal(1));
    const auto sol = solve_canonical(t33, t11, t22, {opts.project_infeasible});
    diag.cat_undetermined = sol.cat_undetermined;
    diag.epr_undetermined = sol.epr_undetermined;
    diag.projected = sol.projected;
    diag.infeasibility = sol.infeasibility;

    const auto form = pauli_form(canonical_state(sol.params).matrix()).in_lab_frame(fa, ff);
    DensityMatrix rho(clip_to_density(form.matrix()), TensorDims{}, 1e-9);
    for (std::size_t s = 0; s < tables.size(); ++s)
        diag.residual = std::max(diag.residual, detail::table_residual(tables[s], rho, diag.pairs[s]));
    return {sol.params, std::move(rho), fa, ff, std::move(diag)};
}

}  // namespace qpair::tomo
