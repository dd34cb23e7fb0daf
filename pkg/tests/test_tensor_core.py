"""Tests for the pointwise tensor algebra."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pinchcheck.errors import DimensionError, SymmetryError
from pinchcheck.tensor_core import (
    Alg4,
    Sym2,
    Symmetry,
    frame_components,
    kulkarni_nomizu,
    norm2,
    orthonormal_frame,
    random_tracefree,
    random_weyl,
    riemann_contraction_split,
    symmetry_residuals,
    tracefree_project,
    weyl_from_riemann,
)

dims = st.integers(min_value=4, max_value=6)
seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


class TestSym2:
    """Test symmetric 2-tensors."""

    def test_rejects_bad_shapes(self):
        """Non-square input and dimensions outside 4..8 are refused."""
        with pytest.raises(DimensionError):
            Sym2(np.zeros((4, 5)))
        with pytest.raises(DimensionError):
            Sym2(np.eye(3))
        with pytest.raises(DimensionError):
            Sym2(np.eye(9))

    def test_symmetrizes_and_freezes(self):
        """Input is symmetrized and the stored array is read-only."""
        a = np.zeros((4, 4))
        a[0, 1] = 2.0
        s = Sym2(a)
        assert s.values[0, 1] == s.values[1, 0] == 1.0
        with pytest.raises(ValueError):
            s.values[0, 0] = 5.0

    def test_tracefree_projection(self):
        """The projection removes exactly the g-trace."""
        g = Sym2(np.diag([1.0, 2.0, 3.0, 4.0]))
        a = Sym2(np.diag([1.0, 1.0, 1.0, 1.0]) + 0.1)
        projected = tracefree_project(a, g)
        assert abs(float(projected.trace(g))) < 1e-12

    def test_dimension_mismatch(self):
        """Adding tensors of different dimensions raises."""
        with pytest.raises(DimensionError):
            Sym2(np.eye(4)) + Sym2(np.eye(5))


class TestAlg4:
    """Test 4-index tensors and their symmetry flags."""

    def test_kulkarni_nomizu_of_identity(self):
        """(g o g)_1212 = 2 for the Euclidean metric."""
        g = Sym2.identity(4)
        kn = kulkarni_nomizu(g, g)
        assert kn.values[0, 1, 0, 1] == pytest.approx(2.0)
        assert kn.values[0, 1, 1, 0] == pytest.approx(-2.0)
        assert kn.values[0, 0, 1, 1] == pytest.approx(0.0)

    def test_constant_curvature_has_no_weyl_part(self):
        """Riem = K/2 (g o g) has Ric = (n-1)K g and vanishing Weyl tensor."""
        n, k = 5, 0.7
        g = Sym2.identity(n)
        riem = Alg4.project(0.5 * k * kulkarni_nomizu(g, g).values, Symmetry.riemann())
        w = weyl_from_riemann(riem, g * ((n - 1) * k), n * (n - 1) * k)
        assert np.max(np.abs(w.values)) < 1e-12

    def test_inconsistent_ricci_is_refused(self):
        """Ricci data that disagrees with the Riemann traces raises SymmetryError."""
        g = Sym2.identity(4)
        riem = Alg4.project(0.5 * kulkarni_nomizu(g, g).values, Symmetry.riemann())
        with pytest.raises(SymmetryError):
            weyl_from_riemann(riem, g * 5.0, 20.0)

    def test_require_checks_undeclared_flags(self):
        """An arbitrary array fails the Weyl symmetry requirement."""
        raw = Alg4(np.random.default_rng(0).standard_normal((4, 4, 4, 4)))
        with pytest.raises(SymmetryError):
            raw.require(Symmetry.weyl(), "raw")

    def test_projection_records_residual(self):
        """Projecting a non-symmetric array reports how far it was from the class."""
        raw = np.random.default_rng(1).standard_normal((4, 4, 4, 4))
        projected = Alg4.project(raw, Symmetry.riemann())
        assert projected.residual > 0.0
        assert Alg4.project(projected.values, Symmetry.riemann()).residual < 1e-12

    @settings(max_examples=20, deadline=None)
    @given(n=dims, seed=seeds)
    def test_random_weyl_satisfies_all_symmetries(self, n, seed):
        """Sampled Weyl tensors are algebraic curvature tensors and totally tracefree."""
        w = random_weyl(np.random.default_rng(seed), n, 3)
        residuals = symmetry_residuals(w.values)
        assert max(residuals.values()) < 1e-10

    @settings(max_examples=20, deadline=None)
    @given(n=dims, seed=seeds)
    def test_random_tracefree_has_zero_trace(self, n, seed):
        """Sampled traceless Ricci tensors are symmetric and tracefree."""
        a = random_tracefree(np.random.default_rng(seed), n, 5)
        assert np.max(np.abs(a.trace())) < 1e-12
        assert np.allclose(a.values, np.swapaxes(a.values, -1, -2))


class TestCurvatureDecomposition:
    """Test the decomposition of R_ijkl phi_jl phi_ik."""

    @settings(max_examples=15, deadline=None)
    @given(n=dims, seed=seeds)
    def test_contraction_split(self, n, seed):
        """Both sides of the decomposition agree for random Riemann-type tensors."""
        rng = np.random.default_rng(seed)
        riem = Alg4.project(rng.standard_normal((4,) + (n,) * 4), Symmetry.riemann())
        phi = Sym2(rng.standard_normal((4, n, n)))
        lhs, rhs = riemann_contraction_split(riem, phi)
        scale = np.maximum(1.0, np.abs(lhs))
        assert np.all(np.abs(lhs - rhs) <= 1e-10 * scale)

    def test_weyl_norm_is_invariant_under_projection(self):
        """Re-projecting a Weyl tensor leaves its norm unchanged."""
        w = random_weyl(np.random.default_rng(2), 4, 2)
        again = Alg4.project(w.values, Symmetry.weyl())
        assert np.allclose(norm2(w), norm2(again))


class TestOrthonormalFrame:
    """Test frame components."""

    def test_metric_becomes_identity(self):
        """The metric has identity components in its own orthonormal frame."""
        rng = np.random.default_rng(4)
        a = rng.standard_normal((6, 4, 4))
        g = Sym2(np.einsum("...ij,...kj->...ik", a, a) + 4.0 * np.eye(4))
        hat = frame_components(g.values, orthonormal_frame(g))
        assert np.allclose(hat, np.broadcast_to(np.eye(4), hat.shape), atol=1e-12)
