"""Tests for stencils, charts and the curvature bundle."""
import math

import numpy as np
import pytest

from pinchcheck import stencils
from pinchcheck.chart_geometry import (
    Chart,
    MetricField,
    codazzi_residual,
    contracted_bianchi_residual,
    covariant_derivative_sym2,
    curvature_bundle,
    pointwise_norm,
    theta_tensor,
)
from pinchcheck.errors import DimensionError, MetricError
from pinchcheck.tensor_core import Sym2


def periodic_chart(res=8, n=4):
    return Chart(((0.0, 2 * math.pi),) * n, (res,) * n, (True,) * n)


class TestStencils:
    """Test the central difference stencils."""

    def test_fourth_order_derivative(self):
        """The derivative of sin converges at fourth order on a periodic grid."""
        errors, spacings = [], []
        for res in (16, 32):
            h = 2 * math.pi / res
            x = (np.arange(res) + 0.5) * h
            errors.append(np.max(np.abs(stencils.derivative(np.sin(x), 0, h, 4) - np.cos(x))))
            spacings.append(h)
        assert errors[1] < 1e-4
        assert stencils.empirical_order(errors[0], errors[1], *spacings) == pytest.approx(4.0, abs=0.2)

    def test_second_order_derivative(self):
        """The second-order stencil has an O(h^2) error."""
        res = 32
        h = 2 * math.pi / res
        x = (np.arange(res) + 0.5) * h
        err = np.max(np.abs(stencils.derivative(np.sin(x), 0, h, 2) - np.cos(x)))
        assert err < h * h

    def test_rejects_unknown_order(self):
        """Only orders 2 and 4 are available."""
        with pytest.raises(MetricError):
            stencils.check_order(3)

    def test_empirical_order_undefined(self):
        """A zero error gives NaN instead of an order."""
        assert math.isnan(stencils.empirical_order(0.0, 1e-3, 0.2, 0.1))


class TestChart:
    """Test chart validation, excision and filling."""

    def test_periodic_resolution_floor(self):
        """Periodic axes need at least 8 cells."""
        with pytest.raises(MetricError):
            periodic_chart(res=6)

    def test_non_periodic_axes_need_margin(self):
        """A non-periodic axis without an excision margin is refused."""
        with pytest.raises(MetricError):
            Chart(((0.0, 1.0),) * 4, (16,) * 4, (False, True, True, True), (1, 0, 0, 0))

    def test_resolution_must_leave_retained_cells(self):
        """The margin must leave room for retained cells."""
        with pytest.raises(MetricError):
            Chart(((0.0, 1.0),) * 4, (8, 8, 8, 8), (False, True, True, True), (3, 0, 0, 0))

    def test_entry_counts_must_match(self):
        """Per-axis tuples must all have one entry per axis."""
        with pytest.raises(DimensionError):
            Chart(((0.0, 1.0),) * 4, (8, 8, 8), (True,) * 4)

    def test_margin_grows_with_depth(self):
        """Each derivative beyond the second adds one stencil radius."""
        chart = Chart(((0.0, math.pi),) + ((0.0, 1.0),) * 3, (20, 8, 8, 8), (False, True, True, True),
                      (3, 0, 0, 0))
        assert chart.margin(0, depth=2, order=4) == 3
        assert chart.margin(0, depth=3, order=4) == 5
        assert chart.margin(0, depth=4, order=2) == 5
        assert chart.margin(1, depth=4) == 0
        mask = chart.retained_mask(depth=3)
        assert mask.sum() == (20 - 10) * 8 ** 3

    def test_fill_excised_uses_nearest_retained_cell(self):
        """Excised cells copy the value of the nearest retained cell."""
        chart = Chart(((0.0, math.pi),) + ((0.0, 1.0),) * 3, (12, 8, 8, 8), (False, True, True, True),
                      (3, 0, 0, 0))
        values = np.broadcast_to(np.arange(12.0)[:, None, None, None], chart.shape)
        filled = chart.fill_excised(values, depth=2)
        assert filled[0, 0, 0, 0] == 3.0
        assert filled[11, 0, 0, 0] == 8.0
        assert filled[5, 0, 0, 0] == 5.0

    def test_fill_excised_without_retained_cells(self):
        """Filling fails when the margin swallows the axis."""
        chart = Chart(((0.0, math.pi),) + ((0.0, 1.0),) * 3, (12, 8, 8, 8), (False, True, True, True),
                      (3, 0, 0, 0))
        with pytest.raises(MetricError):
            chart.fill_excised(np.zeros(chart.shape), depth=4)


class TestMetricField:
    """Test metric validation."""

    def test_rejects_indefinite_metric(self):
        """A metric with a negative eigenvalue is refused with its location."""
        chart = periodic_chart()
        g = np.broadcast_to(np.eye(4), chart.shape + (4, 4)).copy()
        g[1, 2, 3, 4, 0, 0] = -1.0
        with pytest.raises(MetricError, match="not positive definite"):
            MetricField(chart, Sym2(g))

    def test_rejects_wrong_shape(self):
        """Samples must match the chart."""
        with pytest.raises(DimensionError):
            MetricField(periodic_chart(), Sym2(np.broadcast_to(np.eye(4), (8, 8, 8, 4, 4))))


class TestCurvatureBundle:
    """Test the curvature bundle on the example geometries."""

    def test_flat_torus_is_flat(self, flat):
        """Every curvature field vanishes on the flat torus."""
        _, ctx = flat
        b = ctx.bundle
        for field in (b.riemann, b.ricci, b.weyl, b.cotton, b.bach):
            assert np.max(np.abs(field.values)) == 0.0

    def test_round_sphere_scalar_curvature(self, sphere):
        """The unit 4-sphere has R = 12 and a nearly vanishing Weyl tensor."""
        _, ctx = sphere
        mask = ctx.retained("scalar")
        assert np.allclose(ctx.bundle.scalar[mask], 12.0, rtol=2e-2)
        assert np.max(ctx.frame.weyl_norm[mask]) < 0.05 * 12.0
        assert np.max(ctx.frame.traceless_ricci_norm[mask]) < 0.05 * 12.0

    def test_product_scalar_curvature(self, product):
        """S^2 x S^2 has R = 4 and |W|^2 = 16/3."""
        _, ctx = product
        mask = ctx.retained("weyl")
        assert np.allclose(ctx.bundle.scalar[mask], 4.0, rtol=1e-2)
        assert np.allclose(ctx.weyl_norm2[mask], 16.0 / 3.0, rtol=5e-2)

    def test_metric_is_parallel(self, wavy_torus):
        """nabla g vanishes to roundoff with the discrete Christoffel symbols."""
        _, ctx = wavy_torus
        nabla_g = covariant_derivative_sym2(ctx.metric, ctx.metric.g, 4, ctx.bundle.gamma)
        assert np.max(np.abs(nabla_g.values)) < 1e-10

    def test_symmetry_residuals_are_reported(self, wavy_torus):
        """The bundle records symmetry and cross-check residuals."""
        _, ctx = wavy_torus
        residuals = ctx.bundle.residuals
        for key in ("riemann_antisym12", "riemann_pair", "cotton_antisymmetry", "div_weyl_vs_cotton",
                    "bach_asymmetry"):
            assert key in residuals
        assert residuals["cotton_antisymmetry"] < 1e-12

    def test_contracted_bianchi_is_small(self, wavy_torus):
        """div Ric0 matches (n-2)/(2n) dR up to discretization error."""
        _, ctx = wavy_torus
        scale = np.max(np.abs(ctx.bundle.nabla_scalar))
        assert contracted_bianchi_residual(ctx.bundle, ctx.metric) < 0.1 * scale

    def test_perturbed_torus_is_not_harmonic(self, wavy_torus):
        """The perturbed torus has a clearly nonzero Codazzi residual."""
        _, ctx = wavy_torus
        assert codazzi_residual(ctx.bundle) > 1e-6 * ctx.scalar_scale

    def test_theta_tensor_codazzi_case(self, wavy_torus):
        """theta = 1 gives the antisymmetrized derivative; theta = 0 gives nabla phi."""
        _, ctx = wavy_torus
        ric = ctx.bundle.ricci
        plain = theta_tensor(ctx.metric, ric, 0.0, 4, ctx.bundle.gamma)
        codazzi = theta_tensor(ctx.metric, ric, 1.0, 4, ctx.bundle.gamma)
        assert np.array_equal(plain.c_theta.values, plain.nabla_phi.values)
        d = plain.nabla_phi.values
        assert np.allclose(codazzi.c_theta.values, d - np.swapaxes(d, -3, -2))

    def test_second_order_stencil(self, wavy_torus):
        """The second-order bundle agrees with the fourth-order one to a few percent."""
        geometry, ctx = wavy_torus
        coarse = curvature_bundle(ctx.metric, 2)
        diff = pointwise_norm(coarse.ricci.values - ctx.bundle.ricci.values, ctx.metric)
        assert np.max(diff) < 0.25 * np.max(pointwise_norm(ctx.bundle.ricci.values, ctx.metric))
