"""Tests for quadrature, the integral identities and the pinching hypotheses."""
import math

import numpy as np
import pytest

from pinchcheck.errors import PreconditionError
from pinchcheck.integral_verifier import (
    CurvatureContext,
    IdentityResidual,
    TrialFunction,
    YamabeEstimate,
    YamabeSource,
    constants_table,
    corollary21_conditions,
    curvature_decomposition_residual,
    einstein_constant_check,
    einstein_weyl_integral,
    gauss_bonnet_4d,
    integration_by_parts_residual,
    kato,
    lemma21_residual,
    lemma21_ricci_inequality,
    lemma22_residual,
    quadrature,
    sobolev_check,
    thm12_hypothesis,
    thm13_hypothesis,
    volume,
    yamabe_quotient,
)
from pinchcheck.oracle import empirical_orders
from pinchcheck.perturbed_torus import PerturbedTorus

S4_VOLUME = 8.0 * math.pi ** 2 / 3.0
S4_YAMABE = 12.0 * math.sqrt(S4_VOLUME)
PRODUCT_YAMABE = 16.0 * math.pi
PRODUCT_WEYL_INTEGRAL = 256.0 * math.pi ** 2 / 3.0


class TestQuadrature:
    """Test the midpoint rule and its excision budget."""

    def test_flat_torus_volume(self, flat):
        """The flat torus has volume (2 pi)^4."""
        _, ctx = flat
        assert volume(ctx.metric) == pytest.approx((2 * math.pi) ** 4, rel=1e-12)

    def test_sphere_volume(self, sphere):
        """The unit 4-sphere has volume 8 pi^2 / 3."""
        _, ctx = sphere
        assert volume(ctx.metric) == pytest.approx(S4_VOLUME, rel=1e-2)

    def test_constant_integrand_has_no_bias(self, sphere):
        """Filling excised cells does not bias a constant integrand."""
        _, ctx = sphere
        result = ctx.quadrature(np.full(ctx.metric.chart.shape, 2.0), 2)
        assert 0.3 < result.excision_fraction < 0.7
        assert result.bias < 1e-12 * abs(result.value)

    def test_excision_limit(self, sphere):
        """Integration refuses when too much volume is excised."""
        _, ctx = sphere
        with pytest.raises(PreconditionError, match="Excised volume fraction"):
            quadrature(ctx.metric, np.ones(ctx.metric.chart.shape), 2, 4, max_excision=0.1)


class TestIdentityResidual:
    """Test residual bookkeeping."""

    def test_relative_and_absolute(self):
        """Residuals pass on either the relative or the absolute criterion."""
        r = IdentityResidual.from_sides(1.0, 1.01, (0.1,))
        assert r.abs_residual == pytest.approx(0.01)
        assert r.rel_residual == pytest.approx(0.01 / 1.01)
        assert r.passed(1e-2)
        assert not r.passed(1e-3)
        assert r.passed(1e-3, atol=0.02)

    def test_zero_sides(self):
        """Two vanishing sides give a zero residual."""
        assert IdentityResidual.from_sides(0.0, 0.0, (0.1,)).rel_residual == 0.0


class TestYamabe:
    """Test trial functions, quotients and the Sobolev check."""

    def test_trial_function_validation(self, flat):
        """A trial function must be finite and not identically zero."""
        _, ctx = flat
        with pytest.raises(PreconditionError):
            TrialFunction(np.zeros(ctx.metric.chart.shape))
        bad = np.ones(ctx.metric.chart.shape)
        bad[0, 0, 0, 0] = np.nan
        with pytest.raises(PreconditionError):
            TrialFunction(bad)

    def test_estimate_tags(self):
        """Trial values are upper bounds and carry a note."""
        trial = YamabeEstimate(50.0, YamabeSource.TRIAL)
        assert not trial.rigorous
        assert trial.as_dict()["note"]
        exact = YamabeEstimate(50.0, YamabeSource.EXACT)
        assert exact.rigorous
        assert exact.as_dict() == {"value": 50.0, "source": "exact-known", "note": None}
        with pytest.raises(PreconditionError):
            YamabeEstimate(0.0, YamabeSource.USER).require_positive()

    def test_constant_quotient_on_sphere(self, sphere):
        """The constant trial function attains the Yamabe invariant of the round sphere."""
        geometry, ctx = sphere
        assert geometry.exact_yamabe() == pytest.approx(S4_YAMABE)
        q = yamabe_quotient(ctx, TrialFunction.constant(ctx.metric))
        assert q == pytest.approx(S4_YAMABE, rel=3e-2)

    def test_sobolev_sides_on_sphere(self, sphere):
        """Both sides of the Sobolev inequality coincide for u = 1 on the round sphere."""
        _, ctx = sphere
        y = YamabeEstimate(S4_YAMABE, YamabeSource.EXACT)
        report = sobolev_check(ctx, TrialFunction.constant(ctx.metric), y)
        assert report.lhs == pytest.approx(report.rhs, rel=5e-2)

    def test_sobolev_needs_positive_yamabe(self, flat):
        """The flat torus has Y = 0 and the check refuses."""
        _, ctx = flat
        with pytest.raises(PreconditionError):
            sobolev_check(ctx, TrialFunction.constant(ctx.metric), YamabeEstimate(0.0, YamabeSource.EXACT))


class TestIntegralIdentities:
    """Test the integrated Ricci-identity expressions."""

    @pytest.mark.parametrize("theta", [-1.0, 0.5, 2.0])
    def test_theta_identity_on_perturbed_torus(self, wavy_torus, theta):
        """Both sides of the theta-tensor identity agree for phi = Ric."""
        _, ctx = wavy_torus
        residual = lemma21_residual(ctx, ctx.bundle.ricci, theta, phi_depth=2)
        assert residual.rel_residual < 5e-2
        assert residual.lhs != 0.0

    def test_theta_identity_at_zero(self, wavy_torus):
        """With theta = 0 the right side vanishes and C_0 is a permutation of nabla phi."""
        _, ctx = wavy_torus
        residual = lemma21_residual(ctx, ctx.bundle.ricci, 0.0, phi_depth=2)
        assert residual.rhs == 0.0
        assert residual.passed(1e-2, atol=1e-9)

    def test_curvature_decomposition_on_grids(self, wavy_torus, sphere):
        """R_ijkl R_jl R_ik splits into Weyl, traceless Ricci and scalar parts at every retained point."""
        for _, ctx in (wavy_torus, sphere):
            assert curvature_decomposition_residual(ctx) < 1e-9 * max(1.0, ctx.scalar_scale) ** 3

    @pytest.mark.slow
    @pytest.mark.parametrize("theta", [-1.0, 0.5, 2.0])
    def test_theta_identity_converges(self, theta):
        """The residual is below 1e-2 at 16^4 and falls at least at second order."""
        torus = PerturbedTorus(seed=3)
        residuals, spacings = [], []
        for resolution in (8, 12, 16):
            m = torus.build(resolution)
            ctx = CurvatureContext.from_metric(m)
            residuals.append(lemma21_residual(ctx, ctx.bundle.ricci, theta, phi_depth=2).rel_residual)
            spacings.append(max(m.chart.spacing))
        assert residuals[-1] < 1e-2
        assert min(empirical_orders(residuals, spacings)) >= 2.0

    def test_integration_by_parts(self, wavy_torus):
        """The integrated Ricci identity holds up to discretization error."""
        _, ctx = wavy_torus
        residual = integration_by_parts_residual(ctx, ctx.bundle.ricci, phi_depth=2)
        assert residual.rel_residual < 5e-2

    def test_ricci_gradient_inequality(self, wavy_torus):
        """The traceless Ricci gradient inequality holds for each theta."""
        _, ctx = wavy_torus
        reports = lemma21_ricci_inequality(ctx, (-1.0, 0.5, 2.0))
        assert [theta for theta, _ in reports] == [-1.0, 0.5, 2.0]
        assert all(report.satisfied for _, report in reports)

    def test_bach_flat_identity_refuses_perturbed_torus(self, wavy_torus):
        """The Bach-flat identity reports the measured Bach tensor when refusing."""
        _, ctx = wavy_torus
        with pytest.raises(PreconditionError, match="not Bach-flat") as excinfo:
            lemma22_residual(ctx)
        assert excinfo.value.measured > excinfo.value.threshold

    def test_bach_flat_identity_on_flat_torus(self, flat):
        """Both sides vanish on the flat torus."""
        _, ctx = flat
        residual = lemma22_residual(ctx)
        assert residual.abs_residual == 0.0
        assert residual.passed(1e-2)


class TestPinchingHypotheses:
    """Test the integral pinching hypotheses on the example manifolds."""

    def test_round_sphere_satisfies_harmonic_pinching(self, sphere):
        """S^4 satisfies the harmonic-curvature integral pinching with a wide margin."""
        _, ctx = sphere
        report = thm13_hypothesis(ctx, YamabeEstimate(S4_YAMABE, YamabeSource.EXACT))
        assert report.satisfied
        assert report.rhs == pytest.approx(25.0 / 486.0 * S4_YAMABE ** 2)

    def test_round_sphere_satisfies_bach_flat_pinching(self, sphere):
        """S^4 satisfies the L^2 pinching."""
        _, ctx = sphere
        report = thm12_hypothesis(ctx, YamabeEstimate(S4_YAMABE, YamabeSource.EXACT), scalar_tolerance=5e-2)
        assert report.satisfied

    def test_product_violates_harmonic_pinching(self, product):
        """S^2 x S^2 violates the harmonic-curvature pinching: int |W|^2 ~ 842 > 130."""
        _, ctx = product
        report = thm13_hypothesis(ctx, YamabeEstimate(PRODUCT_YAMABE, YamabeSource.EXACT))
        assert not report.satisfied
        assert report.lhs == pytest.approx(PRODUCT_WEYL_INTEGRAL, rel=5e-2)
        assert report.rhs == pytest.approx(130.0, rel=1e-2)

    def test_product_violates_bach_flat_pinching(self, product):
        """S^2 x S^2 violates the L^2 pinching: 29.0 > 7.25."""
        _, ctx = product
        report = thm12_hypothesis(ctx, YamabeEstimate(PRODUCT_YAMABE, YamabeSource.EXACT))
        assert not report.satisfied
        assert report.lhs == pytest.approx(math.sqrt(PRODUCT_WEYL_INTEGRAL), rel=5e-2)
        assert report.rhs == pytest.approx(7.255, rel=1e-3)

    def test_harmonic_pinching_needs_harmonic_curvature(self, wavy_torus):
        """A measured Codazzi residual above tolerance is a precondition failure."""
        _, ctx = wavy_torus
        with pytest.raises(PreconditionError, match="not harmonic"):
            thm13_hypothesis(ctx, YamabeEstimate(1.0, YamabeSource.USER))

    def test_pinching_needs_positive_scalar(self, flat):
        """The flat torus has R = 0."""
        _, ctx = flat
        with pytest.raises(PreconditionError):
            thm12_hypothesis(ctx, YamabeEstimate(1.0, YamabeSource.USER))


class TestFourDimensional:
    """Test Chern-Gauss-Bonnet and the four-dimensional corollary."""

    def test_gauss_bonnet_sphere(self, sphere):
        """chi(S^4) = 2."""
        _, ctx = sphere
        gb = gauss_bonnet_4d(ctx)
        assert gb.euler_characteristic == 2
        assert gb.chi_estimate == pytest.approx(2.0, abs=0.2)

    def test_gauss_bonnet_product(self, product):
        """chi(S^2 x S^2) = 4 with int |W|^2 = 256 pi^2 / 3."""
        _, ctx = product
        gb = gauss_bonnet_4d(ctx)
        assert gb.euler_characteristic == 4
        assert gb.weyl_integral == pytest.approx(PRODUCT_WEYL_INTEGRAL, rel=5e-2)
        assert gb.rearrangement.rel_residual < 5e-2

    def test_corollary_on_sphere(self, sphere):
        """The round sphere satisfies every corollary condition."""
        _, ctx = sphere
        conditions = corollary21_conditions(ctx, YamabeEstimate(S4_YAMABE, YamabeSource.EXACT))
        for key in ("bach_flat", "harmonic", "bach_flat_yamabe", "harmonic_yamabe"):
            assert conditions.records[key].satisfied, key
        assert conditions.forms_agree

    def test_corollary_on_product(self, product):
        """S^2 x S^2 violates the Bach-flat condition: 842 > 52.6."""
        _, ctx = product
        conditions = corollary21_conditions(ctx)
        record = conditions.records["bach_flat"]
        assert not record.satisfied
        assert record.rhs == pytest.approx(16.0 * 16.0 * math.pi ** 2 / 48.0, rel=3e-2)
        assert "bach_flat_yamabe" not in conditions.records
        assert conditions.forms_agree


class TestConstants:
    """Test the constants table."""

    def test_dimension_four(self):
        """n = 4 selects c1; the harmonic set selects c2."""
        table = constants_table(4)
        assert table.c1 == pytest.approx(0.1443, abs=1e-4)
        assert table.c2 == pytest.approx(0.2268, abs=1e-4)
        assert table.c3 == pytest.approx(0.4082, abs=1e-4)
        assert table.c_thm13 == pytest.approx(0.4330, abs=1e-4)
        assert table.argmin == "c1"
        assert table.argmin_harmonic == "c2"
        assert table.selection_matches

    @pytest.mark.parametrize("n,expected", [(5, "c1"), (6, "c2")])
    def test_selection(self, n, expected):
        """The smallest constant is the one the integral argument uses."""
        table = constants_table(n)
        assert table.argmin == expected
        assert table.selection_matches

    def test_dimension_six_value(self):
        """c2(6) = 0.05797."""
        assert constants_table(6).c2 == pytest.approx(0.05797, abs=1e-5)

    def test_einstein_constant(self):
        """4 C(4) / (3 sqrt 12) < 1/4."""
        assert einstein_constant_check()


class TestEinsteinIntegrals:
    """Test the checks that need an Einstein metric."""

    def test_einstein_weyl_integral_refuses_non_einstein(self, wavy_torus):
        """The perturbed torus is not Einstein."""
        _, ctx = wavy_torus
        with pytest.raises(PreconditionError, match="not Einstein"):
            einstein_weyl_integral(ctx)

    def test_kato_on_sphere(self, sphere):
        """Both refined Kato checks apply on the round sphere."""
        _, ctx = sphere
        checks = {c.name: c for c in kato(ctx)}
        assert checks["weyl"].applicable
        assert checks["traceless_ricci"].applicable
