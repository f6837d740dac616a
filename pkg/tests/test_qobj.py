"""Tests for labeled quantum objects."""

import numpy as np
import pytest

from app.errors import DimensionError, RankDeficientError
from app.quantum.qobj import (
    DensityOperator,
    HermitianOperator,
    Povm,
    SystemLabel,
    is_psd,
    lift_matrix,
    maximally_entangled,
    maximally_mixed,
    partial_trace,
    permute,
    pure_state,
    restrict_support,
    tensor,
    von_neumann_entropy,
    weyl,
)
from app.quantum.random import default_rng, random_density

A = SystemLabel("A", 2)
B = SystemLabel("B", 2)
C = SystemLabel("C", 3)


class TestOperators:
    """Test operator construction and validation."""

    def test_rejects_non_hermitian(self):
        """Should reject a matrix that is not Hermitian."""
        with pytest.raises(ValueError, match="not Hermitian"):
            HermitianOperator((A,), np.array([[0, 1], [0, 0]]))

    def test_rejects_wrong_shape(self):
        """Should reject a matrix that does not fit the factors."""
        with pytest.raises(DimensionError):
            HermitianOperator((A, B), np.eye(2))

    def test_density_trace(self):
        """Should reject a density operator with trace != 1."""
        with pytest.raises(ValueError, match="trace"):
            DensityOperator((A,), np.eye(2))

    def test_density_negative(self):
        """Should reject a density operator with a negative eigenvalue."""
        with pytest.raises(ValueError, match="negative eigenvalue"):
            DensityOperator((A,), np.diag([1.1, -0.1]))

    def test_duplicate_labels(self):
        """Should reject repeated factor names."""
        with pytest.raises(DimensionError, match="Duplicate"):
            HermitianOperator((A, A), np.eye(4))

    def test_expectation(self):
        """Should return tr[XY]."""
        z = HermitianOperator((A,), np.diag([1.0, -1.0]))
        rho = DensityOperator((A,), np.diag([0.75, 0.25]))
        assert z.expectation(rho) == pytest.approx(0.5)

    def test_povm_sum(self):
        """Should reject effects not summing to the identity."""
        e = HermitianOperator((A,), np.diag([1.0, 0.0]))
        with pytest.raises(ValueError, match="sum to identity"):
            Povm((e, e))


class TestTensor:
    """Test Kronecker products."""

    def test_maximally_mixed(self):
        """I/2 ⊗ I/2 should be I/4."""
        result = tensor([maximally_mixed(A), maximally_mixed(B)])
        assert isinstance(result, DensityOperator)
        assert np.allclose(result.matrix, np.eye(4) / 4)
        assert result.names == ("A", "B")

    def test_basis_projectors(self):
        """|0><0| ⊗ |1><1| should project onto |01>."""
        zero = DensityOperator((A,), np.diag([1.0, 0.0]))
        one = DensityOperator((B,), np.diag([0.0, 1.0]))
        result = tensor([zero, one])
        expected = np.zeros((4, 4))
        expected[1, 1] = 1.0
        assert np.allclose(result.matrix, expected)

    def test_against_loop(self):
        """Entries should match an explicit double loop."""
        rng = default_rng(3)
        x = random_density((A,), rng)
        y = random_density((C,), rng)
        result = tensor([x, y]).matrix
        for i in range(2):
            for j in range(2):
                for k in range(3):
                    for m in range(3):
                        assert result[3 * i + k, 3 * j + m] == pytest.approx(x.matrix[i, j] * y.matrix[k, m])

    def test_duplicate_rejected(self):
        """Should reject operators sharing a label."""
        with pytest.raises(DimensionError):
            tensor([maximally_mixed(A), maximally_mixed(A)])


class TestPartialTrace:
    """Test partial traces."""

    def test_maximally_entangled(self):
        """The margin of |Ω0> should be I/2."""
        omega = pure_state((A, B), maximally_entangled(2))
        assert np.allclose(partial_trace(omega, [A]).matrix, np.eye(2) / 2)

    def test_product(self):
        """tr_B[ρ ⊗ σ] should return ρ."""
        rng = default_rng(1)
        rho = random_density((A,), rng)
        sigma = random_density((C,), rng)
        assert np.allclose(partial_trace(tensor([rho, sigma]), ["A"]).matrix, rho.matrix)

    def test_index_sum_oracle(self):
        """Three-qubit partial trace should match explicit index summation."""
        b1, b2 = SystemLabel("B1", 2), SystemLabel("B2", 2)
        rho = random_density((A, b1, b2), default_rng(7))
        t = rho.matrix.reshape([2] * 6)
        expected = np.zeros((4, 4), dtype=complex)
        for i in range(2):
            for j in range(2):
                for k in range(2):
                    for m in range(2):
                        expected[2 * i + j, 2 * k + m] = sum(t[i, j, c, k, m, c] for c in range(2))
        result = partial_trace(rho, [A, b1])
        assert np.allclose(result.matrix, expected)
        assert result.names == ("A", "B1")

    def test_composition(self):
        """Tracing out B2 then B1 should equal tracing both at once."""
        b1, b2 = SystemLabel("B1", 2), SystemLabel("B2", 3)
        rho = random_density((A, b1, b2), default_rng(11))
        stepwise = partial_trace(partial_trace(rho, [A, b1]), [A])
        assert np.allclose(stepwise.matrix, partial_trace(rho, [A]).matrix)

    def test_adjoint_of_tensoring_identity(self):
        """tr[tr_C(X) Y] should equal tr[X (Y ⊗ I_C)]."""
        rng = default_rng(12)
        x = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        y = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        big = HermitianOperator((A, C), x + x.conj().T)
        small = HermitianOperator((A,), y + y.conj().T)
        lifted = tensor([small, HermitianOperator((C,), np.eye(3))])
        assert partial_trace(big, [A]).expectation(small) == pytest.approx(big.expectation(lifted), abs=1e-10)

    def test_unknown_label(self):
        """Should reject a label that is not a factor."""
        with pytest.raises(DimensionError, match="Unknown system"):
            partial_trace(maximally_mixed(A), ["Z"])


class TestPermute:
    """Test factor reordering."""

    def test_swap_product(self):
        """Swapping factors of a product should swap the Kronecker order."""
        rng = default_rng(5)
        rho = random_density((A,), rng)
        sigma = random_density((C,), rng)
        swapped = permute(tensor([rho, sigma]), ["C", "A"])
        assert swapped.names == ("C", "A")
        assert np.allclose(swapped.matrix, np.kron(sigma.matrix, rho.matrix))

    def test_lift(self):
        """lift_matrix on the last factor should be I ⊗ X."""
        x = np.array([[0, 1], [1, 0]])
        assert np.allclose(lift_matrix(x, [3, 2], [1]), np.kron(np.eye(3), x))
        assert np.allclose(lift_matrix(x, [2, 3], [0]), np.kron(x, np.eye(3)))


class TestEntropy:
    """Test von Neumann entropy."""

    def test_pure(self):
        """A pure state should have zero entropy."""
        assert von_neumann_entropy(pure_state((A,), [1, 1j])) == pytest.approx(0.0, abs=1e-12)

    def test_maximally_mixed(self):
        """I/2 should carry one bit."""
        assert von_neumann_entropy(maximally_mixed(A)) == pytest.approx(1.0)

    def test_spectrum(self):
        """Spectrum (3/4, 1/12, 1/12, 1/12) should give 1.2075 bits."""
        rho = DensityOperator((A, B), np.diag([0.75, 1 / 12, 1 / 12, 1 / 12]))
        assert von_neumann_entropy(rho) == pytest.approx(1.2075, abs=1e-4)

    def test_additive_on_products(self):
        """S(ρ ⊗ σ) should be S(ρ) + S(σ)."""
        rng = default_rng(13)
        rho = random_density((A,), rng)
        sigma = random_density((C,), rng)
        joint = von_neumann_entropy(tensor([rho, sigma]))
        assert joint == pytest.approx(von_neumann_entropy(rho) + von_neumann_entropy(sigma), abs=1e-10)


class TestWeyl:
    """Test Weyl operators."""

    def test_identity(self):
        """W(0,0) should be the identity."""
        assert np.allclose(weyl(0, 0, 5), np.eye(5))

    def test_sigma_x(self):
        """W(1,0) for d=2 should be σ_x."""
        assert np.allclose(weyl(1, 0, 2), np.array([[0, 1], [1, 0]]))

    def test_unitary(self):
        """Every W(q,p) should be unitary."""
        for d in (2, 3, 4):
            for q in range(d):
                for p in range(d):
                    w = weyl(q, p, d)
                    assert np.allclose(w @ w.conj().T, np.eye(d))

    def test_small_dimension(self):
        """Should reject d < 2."""
        with pytest.raises(DimensionError):
            weyl(0, 0, 1)


class TestIsPsd:
    """Test positivity checks."""

    def test_identity(self):
        """The identity should be PSD."""
        assert is_psd(np.eye(3))

    def test_negative_entry(self):
        """diag(1, -0.1) should not be PSD."""
        assert not is_psd(np.diag([1.0, -0.1]), tol=1e-9)

    def test_gram(self):
        """A Gram matrix should be PSD."""
        rng = default_rng(2)
        v = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        assert is_psd(v.conj().T @ v)


class TestRestrictSupport:
    """Test compression onto a marginal's support."""

    def test_compresses_rank_deficient_factor(self):
        """Should drop the unused level of A and keep the state intact."""
        a3 = SystemLabel("A", 3)
        v = np.zeros(6, dtype=complex)
        v[0] = v[3] = 1 / np.sqrt(2)  # |0>|0> + |1>|1>, level 2 of A unused
        rho = pure_state((a3, B), v)
        restricted = restrict_support(rho, "A")
        assert restricted.system.dim == 2
        assert restricted.state.dims == (2, 2)
        iso = np.kron(restricted.isometry, np.eye(2))
        assert np.allclose(iso @ restricted.state.matrix @ iso.conj().T, rho.matrix)

    def test_empty_support(self):
        """A zero marginal cannot be restricted."""
        with pytest.raises(RankDeficientError):
            restrict_support(maximally_mixed(A), "A", rank_tol=1.0)
