#include "oracles.hpp"
#include "qpair/core.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace qpair;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

Vector ket(std::initializer_list<cplx> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (auto x : xs) v(i++) = x;
    return v;
}

}  // namespace

TEST(Pauli, IdentityAndInvolution) {
    EXPECT_LT(max_abs(pauli(0) - identity(2)), 1e-15);
    for (int i = 1; i <= 3; ++i) EXPECT_LT(max_abs(pauli(i) * pauli(i) - identity(2)), 1e-15);
}

TEST(Pauli, SigmaThreeGroundHasEigenvalueMinusOne) {
    const Vector g = ket({1.0, 0.0});
    EXPECT_LT((pauli(3) * g + g).norm(), 1e-15);
}

TEST(Pauli, CyclicProductsAreRightHanded) {
    EXPECT_LT(max_abs(pauli(1) * pauli(2) - kI * pauli(3)), 1e-15);
    EXPECT_LT(max_abs(pauli(2) * pauli(3) - kI * pauli(1)), 1e-15);
    EXPECT_LT(max_abs(pauli(3) * pauli(1) - kI * pauli(2)), 1e-15);
}

TEST(Pauli, InvalidIndexThrows) {
    EXPECT_THROW(pauli(4), DomainError);
    EXPECT_THROW(pauli(-1), DomainError);
}

TEST(TensorProduct, IdentityAndSpectrum) {
    EXPECT_LT(max_abs(tensor_product(pauli(0), pauli(0)) - identity(4)), 1e-15);
    const auto ed = hermitian_eig(tensor_product(pauli(3), pauli(0)));
    EXPECT_NEAR(ed.values(0), -1, 1e-12);
    EXPECT_NEAR(ed.values(1), -1, 1e-12);
    EXPECT_NEAR(ed.values(2), 1, 1e-12);
    EXPECT_NEAR(ed.values(3), 1, 1e-12);
}

TEST(TensorProduct, ZZOnGroundGround) {
    // σ_3 ⊗ s_3 |0,0> = (−1)(−1)|0,0>, computed by hand: diag(1, −1, −1, 1).
    const Matrix zz = tensor_product(pauli(3), pauli(3));
    Matrix expected = Matrix::Zero(4, 4);
    expected.diagonal() << 1, -1, -1, 1;
    EXPECT_LT(max_abs(zz - expected), 1e-15);
    EXPECT_LT((zz * ket({1, 0, 0, 0}) - ket({1, 0, 0, 0})).norm(), 1e-15);
}

TEST(PartialTrace, ProductAndBell) {
    const auto prod = DensityMatrix::pure(PureState::basis(4, 0), TensorDims{});
    EXPECT_LT(max_abs(partial_trace(prod, Subsystem::atom).matrix() - projector(ket({1, 0}))), 1e-15);
    const double r = 1 / std::sqrt(2.0);
    const auto bell = DensityMatrix::pure(PureState(ket({r, 0, 0, r})), TensorDims{});
    EXPECT_LT(max_abs(partial_trace(bell, Subsystem::atom).matrix() - identity(2) / 2.0), 1e-15);
    EXPECT_LT(max_abs(partial_trace(bell, Subsystem::field).matrix() - identity(2) / 2.0), 1e-15);
}

TEST(PartialTrace, RequiresTensorStructure) {
    const auto rho = DensityMatrix::maximally_mixed(4);
    EXPECT_THROW(partial_trace(rho, Subsystem::atom), StructureError);
}

TEST(PartialTrace, MatchesEmbeddingOracleOnRandomStates) {
    std::mt19937_64 g(11);
    for (int trial = 0; trial < 10000; ++trial) {
        const DensityMatrix rho(oracle::random_density(g, 4), TensorDims{});
        for (bool keep_atom : {true, false}) {
            const auto red = partial_trace(rho, keep_atom ? Subsystem::atom : Subsystem::field);
            ASSERT_LT(max_abs(red.matrix() - oracle::partial_trace(rho.matrix(), keep_atom)), 1e-14);
            ASSERT_NEAR(red.matrix().trace().real(), 1.0, 1e-12);
        }
    }
}

TEST(HermitianEig, SigmaThree) {
    const auto ed = hermitian_eig(pauli(3));
    EXPECT_NEAR(ed.values(0), -1, 1e-15);
    EXPECT_NEAR(ed.values(1), 1, 1e-15);
    EXPECT_LT((ed.vectors.col(0) - ket({1, 0})).norm(), 1e-12);
    EXPECT_LT((ed.vectors.col(1) - ket({0, 1})).norm(), 1e-12);
    EXPECT_FALSE(ed.degenerate);
}

TEST(HermitianEig, DegenerateIdentityUsesIndexOrder) {
    const auto ed = hermitian_eig(identity(2) / 2.0);
    EXPECT_TRUE(ed.degenerate);
    EXPECT_NEAR(ed.values(0), 0.5, 1e-15);
    EXPECT_NEAR(ed.values(1), 0.5, 1e-15);
    EXPECT_LT(max_abs(ed.vectors - identity(2)), 1e-12);
}

TEST(HermitianEig, SigmaOneClosedForm) {
    const auto ed = hermitian_eig(pauli(1));
    const double r = 1 / std::sqrt(2.0);
    EXPECT_LT((ed.vectors.col(0) - ket({r, -r})).norm(), 1e-12);
    EXPECT_LT((ed.vectors.col(1) - ket({r, r})).norm(), 1e-12);
}

TEST(HermitianEig, PhaseConventionAndOrthonormality) {
    std::mt19937_64 g(3);
    for (int trial = 0; trial < 500; ++trial) {
        const Matrix h = oracle::random_density(g, 4);
        const auto ed = hermitian_eig(h);
        EXPECT_LT(max_abs(ed.vectors.adjoint() * ed.vectors - identity(4)), 1e-10);
        EXPECT_LT(max_abs(ed.vectors * ed.values.cast<cplx>().asDiagonal() * ed.vectors.adjoint() - h), 1e-10);
        for (Eigen::Index c = 0; c < 4; ++c) {
            Eigen::Index at = 0;
            ed.vectors.col(c).cwiseAbs().maxCoeff(&at);
            EXPECT_NEAR(ed.vectors(at, c).imag(), 0.0, 1e-12);
            EXPECT_GT(ed.vectors(at, c).real(), 0.0);
        }
        for (Eigen::Index c = 1; c < 4; ++c) EXPECT_LE(ed.values(c - 1), ed.values(c));
    }
}

TEST(HermitianEig, RejectsNonHermitian) {
    Matrix m = pauli(1);
    m(0, 1) = 2.0;
    EXPECT_THROW(hermitian_eig(m), DomainError);
}

TEST(Schmidt, ProductAndConstructed) {
    const auto prod = schmidt_decompose(PureState(ket({0, 1, 0, 0})));
    EXPECT_NEAR(prod.coefficients[0], 1.0, 1e-15);
    EXPECT_NEAR(prod.coefficients[1], 0.0, 1e-15);

    const double th = kPi / 6;
    const auto sd = schmidt_decompose(PureState(ket({std::cos(th), 0, 0, std::sin(th)})));
    EXPECT_NEAR(sd.coefficients[0], std::cos(th), 1e-14);
    EXPECT_NEAR(sd.coefficients[1], std::sin(th), 1e-14);
}

TEST(Schmidt, RandomStatesMatchSingularValuesAndReconstruct) {
    std::mt19937_64 g(5);
    for (int trial = 0; trial < 2000; ++trial) {
        const Vector psi = oracle::random_vector(g, 4);
        const auto sd = schmidt_decompose(PureState(psi));
        Eigen::Matrix2cd amp;
        amp << psi(0), psi(1), psi(2), psi(3);
        const auto sv = oracle::singular_values_2x2(amp);
        ASSERT_NEAR(sd.coefficients[0], sv[0], 1e-10);
        ASSERT_NEAR(sd.coefficients[1], sv[1], 1e-10);
        ASSERT_GE(sd.coefficients[0], sd.coefficients[1]);
        ASSERT_NEAR(sd.coefficients[0] * sd.coefficients[0] + sd.coefficients[1] * sd.coefficients[1], 1.0, 1e-12);
        ASSERT_LT((sd.reconstruct() - psi).cwiseAbs().maxCoeff(), 1e-10);
        for (int i = 0; i < 2; ++i) {
            ASSERT_NEAR(sd.atom_basis[static_cast<std::size_t>(i)].norm(), 1.0, 1e-12);
            ASSERT_NEAR(sd.field_basis[static_cast<std::size_t>(i)].norm(), 1.0, 1e-12);
        }
        ASSERT_LT(std::abs(sd.atom_basis[0].dot(sd.atom_basis[1])), 1e-10);
        ASSERT_LT(std::abs(sd.field_basis[0].dot(sd.field_basis[1])), 1e-10);
    }
}

TEST(Schmidt, RequiresQubitPair) { EXPECT_THROW(schmidt_decompose(PureState::basis(2, 0)), StructureError); }

TEST(Born, BasicCases) {
    const auto z = eigenprojectors(pauli(3));
    const auto p_mixed = born_probabilities(DensityMatrix::maximally_mixed(2), z);
    EXPECT_NEAR(p_mixed[0], 0.5, 1e-15);
    EXPECT_NEAR(p_mixed[1], 0.5, 1e-15);
    const auto p_ground = born_probabilities(DensityMatrix::pure(PureState::basis(2, 0)), z);
    EXPECT_NEAR(p_ground[0], 1.0, 1e-15);
    EXPECT_NEAR(p_ground[1], 0.0, 1e-15);
}

TEST(Born, BellCatZero) {
    const double r = 1 / std::sqrt(2.0);
    const auto bell = DensityMatrix::pure(PureState(ket({r, 0, 0, r})), TensorDims{});
    const auto p = born_probabilities(bell, joint_projectors(pauli(3), pauli(3)));
    const auto o = oracle::joint_pauli_probabilities(bell.matrix(), 3);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(p[i], o[i], 1e-15);
    EXPECT_NEAR(p[0], 0.5, 1e-15);
    EXPECT_NEAR(p[1], 0.0, 1e-15);
    EXPECT_NEAR(p[2], 0.0, 1e-15);
    EXPECT_NEAR(p[3], 0.5, 1e-15);
}

TEST(Born, MatchesConjugationOracle) {
    std::mt19937_64 g(9);
    for (int trial = 0; trial < 1000; ++trial) {
        const DensityMatrix rho(oracle::random_density(g, 4), TensorDims{});
        for (int axis = 1; axis <= 3; ++axis) {
            const auto p = born_probabilities(rho, joint_projectors(pauli(axis), pauli(axis)));
            const auto o = oracle::joint_pauli_probabilities(rho.matrix(), axis);
            for (std::size_t i = 0; i < 4; ++i) ASSERT_NEAR(p[i], o[i], 1e-12);
        }
    }
}

TEST(Born, IncompleteProjectorsThrow) {
    const auto z = eigenprojectors(pauli(3));
    const std::vector<Matrix> partial{z[0]};
    EXPECT_THROW(born_probabilities(DensityMatrix::maximally_mixed(2), partial), DomainError);
}

TEST(Moments, SimpleCases) {
    const std::vector<double> pm{-1, 1};
    EXPECT_NEAR(moments_equivalence_check(pm, ProbabilityDistribution({0.5, 0.5}))(0), 0.0, 1e-15);
    const std::vector<double> e4{1, 2, 3, 4};
    const auto m = moments_equivalence_check(e4, ProbabilityDistribution({1, 0, 0, 0}));
    ASSERT_EQ(m.size(), 3);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(m(i), 1.0, 1e-15);
}

TEST(Moments, RoundTripThroughVandermonde) {
    std::mt19937_64 g(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::vector<double> eig{-1.5, -0.5, 0.5, 1.5};
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> p(4);
        double s = 0;
        for (double& v : p) s += (v = u(g));
        for (double& v : p) v /= s;
        const ProbabilityDistribution d(p);
        const auto back = distribution_from_moments(eig, moments_equivalence_check(eig, d));
        for (std::size_t i = 0; i < 4; ++i) ASSERT_NEAR(back[i], p[i], 1e-9);
    }
}

TEST(Moments, DegenerateEigenvaluesThrow) {
    const std::vector<double> eig{1, 1, 2};
    EXPECT_THROW(moments_equivalence_check(eig, ProbabilityDistribution({0.2, 0.3, 0.5})), DegeneracyError);
}

TEST(DensityMatrixType, RejectsInvalidMatrices) {
    EXPECT_THROW(DensityMatrix(identity(2)), DomainError);               // trace 2
    EXPECT_THROW(DensityMatrix(identity(3) / 3.0), StructureError);      // dim 3
    Matrix neg = Matrix::Zero(2, 2);
    neg.diagonal() << 1.5, -0.5;
    EXPECT_THROW(DensityMatrix{neg}, DomainError);
    Matrix nh = identity(2) / 2.0;
    nh(0, 1) = 0.1;
    EXPECT_THROW(DensityMatrix{nh}, DomainError);
}

TEST(PauliFormTest, RoundTripsRandomStates) {
    std::mt19937_64 g(4);
    for (int trial = 0; trial < 200; ++trial) {
        const Matrix rho = oracle::random_density(g, 4);
        EXPECT_LT(max_abs(pauli_form(rho).matrix() - rho), 1e-13);
    }
}

TEST(TraceDistance, OrthogonalPureStatesAreOneApart) {
    EXPECT_NEAR(trace_distance(projector(ket({1, 0})), projector(ket({0, 1}))), 1.0, 1e-15);
    EXPECT_NEAR(trace_distance(identity(2) / 2.0, identity(2) / 2.0), 0.0, 1e-15);
}
