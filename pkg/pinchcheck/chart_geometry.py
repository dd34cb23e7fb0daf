"""Curvature of a metric sampled on a coordinate chart.

The chart is a cell-centred tensor-product grid. Derivatives use the central
stencils from :mod:`pinchcheck.stencils`; each derived field remembers how
many nested derivatives it took (its depth) so that pointwise statistics and
quadrature can skip the cells that an excised margin contaminates.

Curvature convention: R^r_{smn} = d_m G^r_{ns} - d_n G^r_{ms} + G^r_{ml} G^l_{ns}
- G^r_{nl} G^l_{ms}, lowered on the first index, Ric_jl = g^{ik} R_ijkl. The
round sphere of radius r then has R_ijkl = (g_ik g_jl - g_il g_jk) / r^2.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from . import stencils
from .errors import DimensionError, MetricError
from .tensor_core import (
    Alg4,
    Sym2,
    Symmetry,
    Tensor3,
    check_dim,
    frame_components,
    orthonormal_frame,
    symmetry_residuals,
    tracefree_project,
    weyl_from_riemann,
)

logger = logging.getLogger(__name__)

MIN_PERIODIC_RESOLUTION = 8
MIN_RETAINED_CELLS = 5

# number of nested first derivatives behind each bundle field
DEPTH: Dict[str, int] = {
    "metric": 0,
    "gamma": 1,
    "riemann": 2,
    "ricci": 2,
    "scalar": 2,
    "traceless_ricci": 2,
    "weyl": 2,
    "cotton": 3,
    "nabla_ricci": 3,
    "nabla_traceless_ricci": 3,
    "nabla_scalar": 3,
    "div_weyl": 3,
    "nabla_weyl": 3,
    "bach": 4,
    "laplacian_weyl_norm": 4,
}

_LETTERS = "abcdefgh"


@dataclass(frozen=True)
class Chart:
    """Rectangular coordinate chart with cell-centred sample points.

    Axes that are not periodic must carry an excision margin of at least one
    stencil radius; the cells inside the margin are excluded from pointwise
    statistics and are filled from their nearest retained neighbour in
    quadrature.
    """
    extents: Tuple[Tuple[float, float], ...]
    resolution: Tuple[int, ...]
    periodic: Tuple[bool, ...]
    excision_cells: Tuple[int, ...] = ()

    def __post_init__(self):
        n = check_dim(len(self.extents))
        excision = tuple(self.excision_cells) or (0,) * n
        object.__setattr__(self, "extents", tuple((float(a), float(b)) for a, b in self.extents))
        object.__setattr__(self, "resolution", tuple(int(r) for r in self.resolution))
        object.__setattr__(self, "periodic", tuple(bool(p) for p in self.periodic))
        object.__setattr__(self, "excision_cells", tuple(int(e) for e in excision))
        if not len(self.resolution) == len(self.periodic) == len(self.excision_cells) == n:
            raise DimensionError("Chart extents, resolution, periodic and excision_cells must have one entry per axis")
        max_radius = max(stencils.stencil_radius(o) for o in stencils.CENTRAL_COEFFICIENTS)
        for axis, ((a, b), res, per, exc) in enumerate(
                zip(self.extents, self.resolution, self.periodic, self.excision_cells)):
            if not b > a:
                raise MetricError(f"Axis {axis}: extent must satisfy a < b; got [{a}, {b})")
            if per:
                if exc:
                    raise MetricError(f"Axis {axis}: periodic axes cannot be excised")
                if res < MIN_PERIODIC_RESOLUTION:
                    raise MetricError(
                        f"Axis {axis}: resolution must be >= {MIN_PERIODIC_RESOLUTION}; got {res}")
            else:
                if exc < max_radius:
                    raise MetricError(
                        f"Axis {axis}: non-periodic axes need an excision margin >= {max_radius}; got {exc}")
                if res < 2 * exc + MIN_RETAINED_CELLS:
                    raise MetricError(
                        f"Axis {axis}: resolution must be >= {2 * exc + MIN_RETAINED_CELLS} "
                        f"for an excision margin of {exc}; got {res}")

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.resolution

    @property
    def spacing(self) -> Tuple[float, ...]:
        return tuple((b - a) / r for (a, b), r in zip(self.extents, self.resolution))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self) -> Tuple[np.ndarray, ...]:
        return tuple(a + (np.arange(r) + 0.5) * h
                     for (a, _), r, h in zip(self.extents, self.resolution, self.spacing))

    def coordinates(self) -> np.ndarray:
        """Coordinates of every sample point, shape (*grid, n)."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def refined(self, resolution: int) -> "Chart":
        """Same chart with a uniform per-axis resolution."""
        return Chart(self.extents, (resolution,) * self.dim, self.periodic, self.excision_cells)

    def margin(self, axis: int, depth: int = 2, order: int = 4) -> int:
        """Excised cells at each end of ``axis`` for a field of the given depth."""
        base = self.excision_cells[axis]
        if base == 0:
            return 0
        return base + max(depth - 2, 0) * stencils.stencil_radius(order)

    def retained_mask(self, depth: int = 2, order: int = 4) -> np.ndarray:
        mask = np.ones(self.shape, dtype=bool)
        for axis, res in enumerate(self.resolution):
            m = self.margin(axis, depth, order)
            if m == 0:
                continue
            idx = np.arange(res)
            keep = (idx >= m) & (idx < res - m)
            shape = [1] * self.dim
            shape[axis] = res
            mask &= keep.reshape(shape)
        return mask

    def fill_excised(self, values: np.ndarray, depth: int = 2, order: int = 4) -> np.ndarray:
        """Replace excised cells by their nearest retained cell along each excised axis."""
        out = values
        for axis, res in enumerate(self.resolution):
            m = self.margin(axis, depth, order)
            if m == 0:
                continue
            if res - 2 * m < 1:
                raise MetricError(
                    f"Axis {axis}: no retained cells for depth-{depth} fields "
                    f"(margin {m} of {res}); refine the grid")
            idx = np.clip(np.arange(res), m, res - m - 1)
            out = np.take(out, idx, axis=axis)
        return out


@dataclass(frozen=True)
class MetricField:
    """Symmetric positive-definite metric sampled at every grid point."""
    chart: Chart
    g: Sym2
    spd_tolerance: float = 1e-10

    def __post_init__(self):
        expected = self.chart.shape + (self.chart.dim, self.chart.dim)
        if self.g.values.shape != expected:
            raise DimensionError(f"Metric samples must have shape {expected}; got {self.g.values.shape}")
        mask = self.chart.retained_mask(depth=1)
        eig = np.linalg.eigvalsh(self.g.values[mask])
        smallest = eig.min(axis=-1)
        if not np.all(np.isfinite(eig)) or smallest.min() <= self.spd_tolerance:
            bad = int(np.argmin(np.where(np.isfinite(smallest), smallest, -np.inf)))
            location = tuple(int(i) for i in np.argwhere(mask)[bad])
            raise MetricError(
                f"Metric is not positive definite at grid point {location}: "
                f"smallest eigenvalue {smallest[bad]:.3e} <= {self.spd_tolerance:.1e}")

    @property
    def dim(self) -> int:
        return self.chart.dim

    @cached_property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.g.values)

    @cached_property
    def sqrt_det(self) -> np.ndarray:
        return np.sqrt(np.linalg.det(self.g.values))

    @cached_property
    def frame(self) -> np.ndarray:
        return orthonormal_frame(self.g)


@dataclass(frozen=True)
class CurvatureBundle:
    """All curvature fields of a metric, in covariant coordinate components."""
    chart: Chart
    stencil_order: int
    gamma: np.ndarray
    riemann: Alg4
    ricci: Sym2
    scalar: np.ndarray
    traceless_ricci: Sym2
    weyl: Alg4
    nabla_ricci: Tensor3
    nabla_traceless_ricci: Tensor3
    nabla_scalar: np.ndarray
    cotton: Tensor3
    div_weyl: Tensor3
    bach: Sym2
    residuals: Dict[str, float] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.chart.dim

    def mask(self, name: str) -> np.ndarray:
        """Retained mask appropriate for the named field."""
        return self.chart.retained_mask(DEPTH[name], self.stencil_order)


@dataclass(frozen=True)
class ThetaTensorField:
    """C_theta[i][j][k] = nabla_i phi_kj - theta * nabla_j phi_ki."""
    theta: float
    phi: Sym2
    nabla_phi: Tensor3
    c_theta: Tensor3


@dataclass(frozen=True)
class OrthonormalCurvature:
    """Bundle fields expressed in the orthonormal frame of the metric."""
    weyl: Alg4
    traceless_ricci: Sym2
    scalar: np.ndarray
    nabla_traceless_ricci: Tensor3
    nabla_scalar: np.ndarray
    cotton: Tensor3
    bach: Sym2

    @cached_property
    def weyl_norm(self) -> np.ndarray:
        return np.sqrt(np.maximum(np.einsum("...ijkl,...ijkl->...", self.weyl.values, self.weyl.values), 0.0))

    @cached_property
    def traceless_ricci_norm(self) -> np.ndarray:
        return np.sqrt(np.maximum(self.traceless_ricci.norm2(), 0.0))


def christoffel(m: MetricField, order: int = 4) -> np.ndarray:
    """Christoffel symbols G^k_ij stored as gamma[..., k, i, j].

    Raises:
        MetricError: If the symbols are not finite at a retained point
    """
    dg = stencils.gradient(m.g.values, m.chart.spacing, order)  # [a, i, j] = d_a g_ij
    first = np.swapaxes(dg, -3, -2)                               # [k, i, j] = d_i g_kj
    lowered = 0.5 * (first + np.swapaxes(first, -1, -2) - dg)
    gamma = np.einsum("...kl,...lij->...kij", m.inverse, lowered)
    mask = m.chart.retained_mask(depth=1, order=order)
    if not np.all(np.isfinite(gamma[mask])):
        raise MetricError("Christoffel symbols are not finite; the metric is singular on the retained grid")
    return gamma


def covariant_derivative(values: np.ndarray, gamma: np.ndarray, spacings: Sequence[float],
                         order: int = 4) -> np.ndarray:
    """nabla_m T_{a..} of a covariant tensor field; the derivative index comes first."""
    rank = values.ndim - len(spacings)
    out = stencils.gradient(values, spacings, order)
    letters = _LETTERS[:rank]
    for slot in range(rank):
        t_sub = letters[:slot] + "z" + letters[slot + 1:]
        out -= np.einsum(f"...zm{letters[slot]},...{t_sub}->...m{letters}", gamma, values, optimize=True)
    return out


def covariant_divergence(values: np.ndarray, gamma: np.ndarray, ginv: np.ndarray,
                         spacings: Sequence[float], order: int = 4) -> np.ndarray:
    """g^{ml} nabla_m T_{...l}: divergence on the last index, one axis at a time."""
    rank = values.ndim - len(spacings)
    letters = _LETTERS[:rank]
    last, free = letters[-1], letters[:-1]
    out = np.zeros(values.shape[:-1])
    for axis, h in enumerate(spacings):
        d = stencils.derivative(values, axis, h, order)
        out += np.einsum(f"...{last},...{letters}->...{free}", ginv[..., axis, :], d)
    raised = np.einsum("...ml,...zmi->...zil", ginv, gamma)
    for slot in range(rank):
        h_sub = "z" + letters[slot] + last
        t_sub = letters[:slot] + "z" + letters[slot + 1:]
        out -= np.einsum(f"...{h_sub},...{t_sub}->...{free}", raised, values, optimize=True)
    return out


def _riemann_up(gamma: np.ndarray, spacings: Sequence[float], order: int) -> np.ndarray:
    quad = np.einsum("...rml,...lns->...rsmn", gamma, gamma, optimize=True)
    rup = quad - np.swapaxes(quad, -1, -2)
    for axis, h in enumerate(spacings):
        dgamma = np.swapaxes(stencils.derivative(gamma, axis, h, order), -1, -2)  # [r, s, n]
        rup[..., axis, :] += dgamma
        rup[..., :, axis] -= dgamma
    return rup


def covariant_derivative_sym2(m: MetricField, phi: Sym2, order: int = 4,
                              gamma: Optional[np.ndarray] = None) -> Tensor3:
    """nabla_i phi_jk = d_i phi_jk - G^l_ij phi_lk - G^l_ik phi_jl, stored [i, j, k]."""
    if phi.values.shape != m.g.values.shape:
        raise DimensionError(f"phi must be sampled on the metric's chart; got shape {phi.values.shape}")
    gamma = christoffel(m, order) if gamma is None else gamma
    return Tensor3(covariant_derivative(phi.values, gamma, m.chart.spacing, order))


def divergence_sym2(m: MetricField, nabla_phi: Tensor3) -> np.ndarray:
    """(div phi)_k = g^{ij} nabla_i phi_jk."""
    return np.einsum("...ij,...ijk->...k", m.inverse, nabla_phi.values)


def scalar_laplacian(m: MetricField, f: np.ndarray, order: int = 4,
                     gamma: Optional[np.ndarray] = None) -> np.ndarray:
    """Laplace-Beltrami operator g^{ij}(d_i d_j f - G^k_ij d_k f) with nested first-derivative stencils."""
    gamma = christoffel(m, order) if gamma is None else gamma
    df = stencils.gradient(f, m.chart.spacing, order)
    hess = covariant_derivative(df, gamma, m.chart.spacing, order)
    return np.einsum("...ij,...ij->...", m.inverse, hess)


def theta_tensor(m: MetricField, phi: Sym2, theta: float, order: int = 4,
                 gamma: Optional[np.ndarray] = None) -> ThetaTensorField:
    """Theta-tensor of a symmetric 2-tensor field.

    Args:
        m: Metric field
        phi: Symmetric 2-tensor field on the same chart
        theta: Real parameter; theta = 1 gives the Codazzi tensor, theta = -1 the anti-Codazzi one
        order: Stencil order
        gamma: Precomputed Christoffel symbols

    Returns:
        ThetaTensorField: theta, phi, nabla phi and C_theta
    """
    nabla = covariant_derivative_sym2(m, phi, order, gamma)
    d = nabla.values
    return ThetaTensorField(float(theta), phi, nabla, Tensor3(d - theta * np.swapaxes(d, -3, -2)))


def cotton_tensor(nabla_ric: Tensor3, nabla_scalar: np.ndarray, g: Sym2) -> Tensor3:
    """C_ijk = R_kj,i - R_ki,j - (R_,i g_jk - R_,j g_ik) / (2(n-1))."""
    n = g.dim
    d = nabla_ric.values
    e = np.einsum("...i,...jk->...ijk", nabla_scalar, g.values)
    return Tensor3(d - np.swapaxes(d, -3, -2) - (e - np.swapaxes(e, -3, -2)) / (2.0 * (n - 1)))


def _masked_max(values: np.ndarray, mask: np.ndarray) -> float:
    picked = np.abs(values[mask])
    return float(picked.max()) if picked.size else float("nan")


def curvature_bundle(m: MetricField, stencil_order: int = 4) -> CurvatureBundle:
    """Compute the full curvature bundle of a metric field.

    Bach is assembled as B_ij = (C_kij,k + W_ikjl R^kl) / (n-2). The divergence
    of the Weyl tensor is computed independently and compared against
    -(n-3)/(n-2) times the Cotton tensor.

    Args:
        m: Metric field
        stencil_order: 2 or 4

    Returns:
        CurvatureBundle: All fields plus symmetry and cross-check residuals
    """
    order = stencils.check_order(stencil_order)
    chart, n = m.chart, m.dim
    h = chart.spacing
    ginv = m.inverse
    logger.info("Computing curvature bundle on grid %s (order %d)", chart.shape, order)

    gamma = christoffel(m, order)
    raw = np.einsum("...ir,...rjkl->...ijkl", m.g.values, _riemann_up(gamma, h, order))
    riem_mask = chart.retained_mask(DEPTH["riemann"], order)
    residuals = {f"riemann_{k.lower()}": v
                 for k, v in symmetry_residuals(raw[riem_mask]).items() if k != Symmetry.TRACEFREE.name}
    riemann = Alg4.project(raw, Symmetry.riemann())
    del raw

    ric = Sym2(np.einsum("...ik,...ijkl->...jl", ginv, riemann.values))
    scalar = np.asarray(ric.trace(m.g))
    ric0 = tracefree_project(ric, m.g)
    weyl = weyl_from_riemann(riemann, ric, scalar, m.g)

    nabla_ric = Tensor3(covariant_derivative(ric.values, gamma, h, order))
    nabla_ric0 = Tensor3(covariant_derivative(ric0.values, gamma, h, order))
    nabla_scalar = stencils.gradient(scalar, h, order)
    cotton = cotton_tensor(nabla_ric, nabla_scalar, m.g)

    div_weyl = Tensor3(covariant_divergence(weyl.values, gamma, ginv, h, order))
    ric_up = np.einsum("...ka,...ab,...lb->...kl", ginv, ric.values, ginv)
    weyl_ric = np.einsum("...ikjl,...kl->...ij", weyl.values, ric_up)
    div_cotton = covariant_divergence(np.moveaxis(cotton.values, -3, -1), gamma, ginv, h, order)
    bach_raw = (div_cotton + weyl_ric) / (n - 2)
    bach = Sym2(bach_raw)

    mask3 = chart.retained_mask(3, order)
    mask4 = chart.retained_mask(4, order)
    residuals.update({
        "cotton_antisymmetry": _masked_max(cotton.values + np.swapaxes(cotton.values, -3, -2), mask3),
        "div_weyl_vs_cotton": _masked_max(div_weyl.values + (n - 3) / (n - 2) * cotton.values, mask3),
        "bach_asymmetry": _masked_max(bach_raw - np.swapaxes(bach_raw, -1, -2), mask4),
    })
    logger.debug("Curvature residuals: %s", residuals)
    return CurvatureBundle(
        chart=chart,
        stencil_order=order,
        gamma=gamma,
        riemann=riemann,
        ricci=ric,
        scalar=scalar,
        traceless_ricci=ric0,
        weyl=weyl,
        nabla_ricci=nabla_ric,
        nabla_traceless_ricci=nabla_ric0,
        nabla_scalar=nabla_scalar,
        cotton=cotton,
        div_weyl=div_weyl,
        bach=bach,
        residuals=residuals,
    )


def bach_from_weyl_divergence(bundle: CurvatureBundle, m: MetricField) -> Sym2:
    """B_ij = W_ikjl,lk / (n-3) + W_ikjl R^kl / (n-2), differentiating div W numerically."""
    n, order = bundle.dim, bundle.stencil_order
    ginv = m.inverse
    second = covariant_divergence(np.swapaxes(bundle.div_weyl.values, -1, -2), bundle.gamma, ginv,
                                  m.chart.spacing, order)
    ric_up = np.einsum("...ka,...ab,...lb->...kl", ginv, bundle.ricci.values, ginv)
    weyl_ric = np.einsum("...ikjl,...kl->...ij", bundle.weyl.values, ric_up)
    return Sym2(second / (n - 3) + weyl_ric / (n - 2))


def codazzi_residual(bundle: CurvatureBundle) -> float:
    """max |R_ki,j - R_kj,i| over retained points (zero for harmonic curvature)."""
    d = bundle.nabla_ricci.values  # [j, k, i] = R_ki,j
    return _masked_max(d - np.moveaxis(d, -1, -3), bundle.mask("nabla_ricci"))


def contracted_bianchi_residual(bundle: CurvatureBundle, m: MetricField) -> float:
    """max |div Ric0 - (n-2)/(2n) dR| over retained points."""
    n = bundle.dim
    div = divergence_sym2(m, bundle.nabla_traceless_ricci)
    return _masked_max(div - (n - 2) / (2.0 * n) * bundle.nabla_scalar, bundle.mask("nabla_traceless_ricci"))


def orthonormal_curvature(bundle: CurvatureBundle, m: MetricField) -> OrthonormalCurvature:
    """Frame components of the fields entering the pointwise estimates."""
    e = m.frame
    return OrthonormalCurvature(
        weyl=Alg4(frame_components(bundle.weyl.values, e), Symmetry.weyl(), bundle.weyl.residual),
        traceless_ricci=Sym2(frame_components(bundle.traceless_ricci.values, e)),
        scalar=bundle.scalar,
        nabla_traceless_ricci=Tensor3(frame_components(bundle.nabla_traceless_ricci.values, e)),
        nabla_scalar=frame_components(bundle.nabla_scalar, e),
        cotton=Tensor3(frame_components(bundle.cotton.values, e)),
        bach=Sym2(frame_components(bundle.bach.values, e)),
    )


def weyl_gradient_norm2(bundle: CurvatureBundle, m: MetricField) -> np.ndarray:
    """|nabla W|^2 at every grid point (depth 3)."""
    nabla_w = covariant_derivative(bundle.weyl.values, bundle.gamma, m.chart.spacing, bundle.stencil_order)
    return pointwise_norm(nabla_w, m) ** 2


def pointwise_norm(values: np.ndarray, m: MetricField) -> np.ndarray:
    """Pointwise tensor norm |T| of a covariant field of any rank."""
    hat = frame_components(values, m.frame)
    rank = values.ndim - m.chart.dim
    axes = tuple(range(-rank, 0))
    return np.sqrt(np.sum(hat * hat, axis=axes)) if rank else np.abs(values)
