// core.hpp: dense complex linear algebra and state primitives for a qubit
// and a qubit pair (atom ⊗ field).
//
// Conventions used throughout the library:
//   * Composite kets are ordered atom ⊗ field, so |a,f> has index 2*a + f.
//   * σ_3 = -|0><0| + |1><1|, σ_1 = |1><0| + |0><1|, σ_2 = -i|1><0| + i|0><1|.
//     The triple (σ_1, σ_2, σ_3) satisfies σ_1 σ_2 = i σ_3 cyclically.
//   * Outcome index b of a two-outcome detector refers to eigenvalue -1 for
//     b = 0 and +1 for b = 1 (ascending eigenvalue order).

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qpair {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;
using Rot3 = Eigen::Matrix3d;

inline constexpr cplx kI{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

namespace tol {
inline constexpr double exact = 1e-12;       // structural checks on exact arithmetic paths
inline constexpr double spectral = 1e-10;    // after eigendecompositions
inline constexpr double degenerate_gap = 1e-8;
}  // namespace tol

// ---------------------------------------------------------------- errors

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct StructureError : std::logic_error {
    using std::logic_error::logic_error;
};

struct DegeneracyError : std::domain_error {
    using std::domain_error::domain_error;
};

struct InconsistencyError : std::runtime_error {
    InconsistencyError(const std::string& what, double residual)
        : std::runtime_error(what), residual(residual) {}
    double residual;
};

struct IncompletenessError : std::runtime_error {
    IncompletenessError(const std::string& what, double condition_number)
        : std::runtime_error(what), condition_number(condition_number) {}
    double condition_number;
};

// ---------------------------------------------------------------- small helpers

inline Matrix identity(Eigen::Index dim) { return Matrix::Identity(dim, dim); }

inline double hermiticity_defect(const Matrix& m) {
    if (m.rows() != m.cols()) return INFINITY;
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline Matrix projector(const Vector& v) { return v * v.adjoint(); }

inline bool is_power_of_two_dim(Eigen::Index d) { return d == 2 || d == 4; }

// ---------------------------------------------------------------- domain types

enum class Subsystem { atom, field };

/// Marks a 4x4 operator as acting on atom ⊗ field, both two-dimensional.
struct TensorDims {
    int atom = 2;
    int field = 2;
    friend bool operator==(const TensorDims&, const TensorDims&) = default;
};

class PureState {
public:
    explicit PureState(Vector amplitudes) : amps_(std::move(amplitudes)) {
        if (amps_.size() == 0) throw DomainError("PureState: empty amplitude vector");
        const double n2 = amps_.squaredNorm();
        if (!(std::abs(n2 - 1.0) <= tol::exact))
            throw DomainError("PureState: squared norm " + std::to_string(n2) + " differs from 1");
    }

    static PureState normalized(const Vector& v) {
        const double n = v.norm();
        if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("PureState: cannot normalize a zero vector");
        return PureState(v / n);
    }

    static PureState basis(Eigen::Index dim, Eigen::Index index) {
        Vector v = Vector::Zero(dim);
        v(index) = 1.0;
        return PureState(std::move(v));
    }

    Eigen::Index dim() const { return amps_.size(); }
    const Vector& amplitudes() const { return amps_; }
    cplx operator[](Eigen::Index i) const { return amps_(i); }

private:
    Vector amps_;
};

/// Hermitian, unit-trace, positive semidefinite operator of dimension 2 or 4.
/// The stored matrix is exactly Hermitian (symmetrized after validation).
class DensityMatrix {
public:
    explicit DensityMatrix(const Matrix& m, std::optional<TensorDims> dims = std::nullopt,
                           double tolerance = tol::exact) {
        if (m.rows() != m.cols() || !is_power_of_two_dim(m.rows()))
            throw StructureError("DensityMatrix: dimension must be 2 or 4");
        if (dims && m.rows() != 4) throw StructureError("DensityMatrix: tensor structure requires dimension 4");
        if (hermiticity_defect(m) > tolerance) throw DomainError("DensityMatrix: matrix is not Hermitian");
        const cplx tr = m.trace();
        if (std::abs(tr - 1.0) > tolerance) throw DomainError("DensityMatrix: trace differs from 1");
        m_ = 0.5 * (m + m.adjoint());
        Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -tol::spectral)
            throw DomainError("DensityMatrix: negative eigenvalue " + std::to_string(es.eigenvalues().minCoeff()));
        dims_ = dims;
    }

    static DensityMatrix pure(const PureState& psi, std::optional<TensorDims> dims = std::nullopt) {
        return DensityMatrix(projector(psi.amplitudes()), dims);
    }

    static DensityMatrix maximally_mixed(Eigen::Index dim, std::optional<TensorDims> dims = std::nullopt) {
        return DensityMatrix(identity(dim) / static_cast<double>(dim), dims);
    }

    const Matrix& matrix() const { return m_; }
    Eigen::Index dim() const { return m_.rows(); }
    const std::optional<TensorDims>& tensor_dims() const { return dims_; }
    cplx operator()(Eigen::Index r, Eigen::Index c) const { return m_(r, c); }

private:
    Matrix m_;
    std::optional<TensorDims> dims_;
};

class ProbabilityDistribution {
public:
    explicit ProbabilityDistribution(std::vector<double> values, double tolerance = tol::exact)
        : values_(std::move(values)) {
        if (values_.empty()) throw DomainError("ProbabilityDistribution: empty");
        double sum = 0.0;
        for (double& v : values_) {
            if (!(v >= -tolerance && v <= 1.0 + tolerance))
                throw DomainError("ProbabilityDistribution: value " + std::to_string(v) + " outside [0,1]");
            v = std::clamp(v, 0.0, 1.0);
            sum += v;
        }
        if (std::abs(sum - 1.0) > tolerance) throw DomainError("ProbabilityDistribution: values do not sum to 1");
    }

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> values_;
};

// ---------------------------------------------------------------- operators

/// Î, σ_1, σ_2, σ_3 for index 0..3.
inline Matrix pauli(int index) {
    Matrix m = Matrix::Zero(2, 2);
    switch (index) {
        case 0:
            m(0, 0) = 1.0;
            m(1, 1) = 1.0;
            break;
        case 1:
            m(0, 1) = 1.0;
            m(1, 0) = 1.0;
            break;
        case 2:
            m(0, 1) = kI;
            m(1, 0) = -kI;
            break;
        case 3:
            m(0, 0) = -1.0;
            m(1, 1) = 1.0;
            break;
        default:
            throw DomainError("pauli: index must be 0, 1, 2 or 3");
    }
    return m;
}

/// n·σ for a real 3-vector.
inline Matrix bloch_operator(const Vec3& n) {
    return n(0) * pauli(1) + n(1) * pauli(2) + n(2) * pauli(3);
}

/// Kronecker product, first factor = atom.
inline Matrix tensor_product(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Vector tensor_product(const Vector& a, const Vector& b) {
    Vector out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

inline DensityMatrix partial_trace(const DensityMatrix& rho, Subsystem keep) {
    if (!rho.tensor_dims()) throw StructureError("partial_trace: density matrix has no tensor structure");
    const Matrix& m = rho.matrix();
    Matrix out = Matrix::Zero(2, 2);
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int k = 0; k < 2; ++k) {
                if (keep == Subsystem::atom)
                    out(x, y) += m(2 * x + k, 2 * y + k);
                else
                    out(x, y) += m(2 * k + x, 2 * k + y);
            }
    return DensityMatrix(out);
}

// ---------------------------------------------------------------- eigensystems

struct EigenDecomposition {
    RealVector values;  // ascending
    Matrix vectors;     // orthonormal columns
    bool degenerate = false;
};

namespace detail {

// Largest-magnitude component made real positive; the first index within
// 1e-12 of the maximum wins ties.
inline void fix_phase(Eigen::Ref<Vector> v) {
    const double mx = v.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) >= mx - 1e-12) {
            v *= std::conj(v(i)) / std::abs(v(i));
            v(i) = std::abs(v(i));
            return;
        }
    }
}

// Replace the columns spanning a degenerate cluster with the Gram-Schmidt
// completion of the standard basis vectors projected onto the cluster, taken
// in index order.
inline void canonicalize_cluster(Matrix& vecs, Eigen::Index first, Eigen::Index count) {
    const Eigen::Index n = vecs.rows();
    const Matrix q = vecs.middleCols(first, count) * vecs.middleCols(first, count).adjoint();
    Matrix chosen(n, count);
    Eigen::Index found = 0;
    for (Eigen::Index j = 0; j < n && found < count; ++j) {
        Vector v = q.col(j);
        for (Eigen::Index c = 0; c < found; ++c) v -= chosen.col(c) * chosen.col(c).dot(v);
        const double nv = v.norm();
        if (nv > 1e-3) chosen.col(found++) = v / nv;
    }
    if (found == count) vecs.middleCols(first, count) = chosen;
}

}  // namespace detail

inline EigenDecomposition hermitian_eig(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0) throw DomainError("hermitian_eig: matrix must be square");
    if (hermiticity_defect(m) > tol::spectral) throw DomainError("hermitian_eig: matrix is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()));
    EigenDecomposition out{es.eigenvalues(), es.eigenvectors(), false};
    const Eigen::Index n = out.values.size();
    Eigen::Index start = 0;
    for (Eigen::Index i = 1; i <= n; ++i) {
        if (i == n || out.values(i) - out.values(i - 1) >= tol::degenerate_gap) {
            if (i - start > 1) {
                out.degenerate = true;
                detail::canonicalize_cluster(out.vectors, start, i - start);
            }
            start = i;
        }
    }
    for (Eigen::Index c = 0; c < n; ++c) detail::fix_phase(out.vectors.col(c));
    return out;
}

/// Rank-one eigenprojectors of a non-degenerate observable in ascending
/// eigenvalue order; this order defines the outcome index.
inline std::vector<Matrix> eigenprojectors(const Matrix& observable) {
    const auto ed = hermitian_eig(observable);
    if (ed.degenerate) throw DegeneracyError("eigenprojectors: observable is degenerate, not a detector");
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(ed.values.size()));
    for (Eigen::Index c = 0; c < ed.values.size(); ++c) out.push_back(projector(ed.vectors.col(c)));
    return out;
}

/// Projectors of a joint atom/field measurement; outcome index 2*b_a + b_f.
inline std::vector<Matrix> joint_projectors(const Matrix& atom_observable, const Matrix& field_observable) {
    const auto pa = eigenprojectors(atom_observable);
    const auto pf = eigenprojectors(field_observable);
    std::vector<Matrix> out;
    for (const auto& a : pa)
        for (const auto& f : pf) out.push_back(tensor_product(a, f));
    return out;
}

// ---------------------------------------------------------------- Schmidt

struct SchmidtDecomposition {
    std::array<double, 2> coefficients;  // descending, non-negative
    std::array<Vector, 2> atom_basis;
    std::array<Vector, 2> field_basis;

    Vector reconstruct() const {
        return coefficients[0] * tensor_product(atom_basis[0], field_basis[0]) +
               coefficients[1] * tensor_product(atom_basis[1], field_basis[1]);
    }
};

/// psi = c0 |a0>⊗|f0> + c1 |a1>⊗|f1>. All phases sit in the local vectors.
inline SchmidtDecomposition schmidt_decompose(const PureState& psi) {
    if (psi.dim() != 4) throw StructureError("schmidt_decompose: state must live on atom ⊗ field (dim 4)");
    Eigen::Matrix2cd amp;
    amp << psi[0], psi[1], psi[2], psi[3];
    Eigen::JacobiSVD<Eigen::Matrix2cd> svd(amp, Eigen::ComputeFullU | Eigen::ComputeFullV);
    SchmidtDecomposition out;
    for (int i = 0; i < 2; ++i) {
        out.coefficients[static_cast<std::size_t>(i)] = svd.singularValues()(i);
        out.atom_basis[static_cast<std::size_t>(i)] = svd.matrixU().col(i);
        out.field_basis[static_cast<std::size_t>(i)] = svd.matrixV().col(i).conjugate();
    }
    return out;
}

// ---------------------------------------------------------------- measurement

inline void check_complete(std::span<const Matrix> projectors, Eigen::Index dim) {
    if (projectors.empty()) throw DomainError("projector set is empty");
    Matrix sum = Matrix::Zero(dim, dim);
    for (const auto& p : projectors) {
        if (p.rows() != dim || p.cols() != dim) throw StructureError("projector dimension mismatch");
        sum += p;
    }
    if ((sum - identity(dim)).cwiseAbs().maxCoeff() > tol::spectral)
        throw DomainError("projector set does not resolve the identity");
}

/// p_k = Tr(P_k ρ).
inline ProbabilityDistribution born_probabilities(const DensityMatrix& rho, std::span<const Matrix> projectors) {
    check_complete(projectors, rho.dim());
    std::vector<double> p;
    p.reserve(projectors.size());
    for (const auto& proj : projectors) p.push_back((proj * rho.matrix()).trace().real());
    return ProbabilityDistribution(std::move(p));
}

/// Moments <O^n> = Σ O_k^n p_k for n = 1..N-1.
inline RealVector moments_equivalence_check(std::span<const double> eigenvalues, const ProbabilityDistribution& dist) {
    const std::size_t n = eigenvalues.size();
    if (dist.size() != n) throw StructureError("moments: distribution length differs from eigenvalue count");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(eigenvalues[i] - eigenvalues[j]) < tol::exact)
                throw DegeneracyError("moments: repeated eigenvalue, Vandermonde system is singular");
    RealVector moments = RealVector::Zero(static_cast<Eigen::Index>(n) - 1);
    for (Eigen::Index k = 0; k < moments.size(); ++k)
        for (std::size_t i = 0; i < n; ++i) moments(k) += std::pow(eigenvalues[i], k + 1) * dist[i];
    return moments;
}

/// Inverse of moments_equivalence_check: solves the Vandermonde system with
/// the normalization row Σ p_k = 1.
inline ProbabilityDistribution distribution_from_moments(std::span<const double> eigenvalues, const RealVector& moments) {
    const auto n = static_cast<Eigen::Index>(eigenvalues.size());
    if (moments.size() != n - 1) throw StructureError("moments: expected N-1 moments");
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            if (std::abs(eigenvalues[static_cast<std::size_t>(i)] - eigenvalues[static_cast<std::size_t>(j)]) < tol::exact)
                throw DegeneracyError("moments: repeated eigenvalue, Vandermonde system is singular");
    Eigen::MatrixXd v(n, n);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index row = 0; row < n; ++row) {
        for (Eigen::Index k = 0; k < n; ++k) v(row, k) = std::pow(eigenvalues[static_cast<std::size_t>(k)], row);
        rhs(row) = row == 0 ? 1.0 : moments(row - 1);
    }
    const Eigen::VectorXd p = v.fullPivLu().solve(rhs);
    return ProbabilityDistribution(std::vector<double>(p.data(), p.data() + p.size()), 1e-9);
}

// ---------------------------------------------------------------- Bloch / Pauli forms

inline DensityMatrix qubit_from_bloch(const Vec3& r) {
    return DensityMatrix(0.5 * (identity(2) + bloch_operator(r)));
}

inline Vec3 bloch_vector(const Matrix& rho) {
    return {(pauli(1) * rho).trace().real(), (pauli(2) * rho).trace().real(), (pauli(3) * rho).trace().real()};
}

/// ρ = ¼ (I⊗I + a·σ⊗I + I⊗b·s + Σ T_ij σ_i⊗s_j).
struct PauliForm {
    Vec3 atom = Vec3::Zero();
    Vec3 field = Vec3::Zero();
    Rot3 correlations = Rot3::Zero();

    Matrix matrix() const {
        Matrix m = identity(4);
        for (int i = 0; i < 3; ++i) {
            m += atom(i) * tensor_product(pauli(i + 1), pauli(0));
            m += field(i) * tensor_product(pauli(0), pauli(i + 1));
            for (int j = 0; j < 3; ++j) m += correlations(i, j) * tensor_product(pauli(i + 1), pauli(j + 1));
        }
        return 0.25 * m;
    }

    /// Same state seen in local frames whose axes are the columns of ra, rf.
    PauliForm in_lab_frame(const Rot3& ra, const Rot3& rf) const {
        return {ra * atom, rf * field, ra * correlations * rf.transpose()};
    }
};

inline PauliForm pauli_form(const Matrix& rho) {
    PauliForm f;
    for (int i = 0; i < 3; ++i) {
        f.atom(i) = (tensor_product(pauli(i + 1), pauli(0)) * rho).trace().real();
        f.field(i) = (tensor_product(pauli(0), pauli(i + 1)) * rho).trace().real();
        for (int j = 0; j < 3; ++j)
            f.correlations(i, j) = (tensor_product(pauli(i + 1), pauli(j + 1)) * rho).trace().real();
    }
    return f;
}

/// ½‖a − b‖₁ for Hermitian a, b.
inline double trace_distance(const Matrix& a, const Matrix& b) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * ((a - b) + (a - b).adjoint()), Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

/// Nearest-in-spectrum density matrix: clip negative eigenvalues, renormalize.
inline Matrix clip_to_density(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()));
    RealVector ev = es.eigenvalues().cwiseMax(0.0);
    const double s = ev.sum();
    if (!(s > 0.0)) return identity(m.rows()) / static_cast<double>(m.rows());
    ev /= s;
    return es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace qpair
