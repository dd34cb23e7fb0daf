"""Quadrature over chart grids and the integral identities and pinching conditions.

All integrands are assembled from orthonormal-frame components and integrated
with the midpoint rule weighted by sqrt(det g). Cells inside an excision
margin take the value of the nearest retained cell; the spread between that
estimate and the retained mean times the volume is reported as the excision
bias.
"""
import enum
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .algebraic_estimates import (
    EstimateReport,
    KatoCheck,
    cubic_constant,
    kato_checks,
    require_einstein,
)
from .chart_geometry import (
    DEPTH,
    CurvatureBundle,
    MetricField,
    OrthonormalCurvature,
    codazzi_residual,
    contracted_bianchi_residual,
    curvature_bundle,
    divergence_sym2,
    orthonormal_curvature,
    pointwise_norm,
    theta_tensor,
)
from .errors import DimensionError, PreconditionError
from .tensor_core import (
    Alg4,
    Sym2,
    Tensor3,
    check_dim,
    cubic_trace,
    frame_components,
    kulkarni_nomizu,
    riemann_contraction_split,
    tracefree_project,
    weyl_ricci_ricci,
)
from . import stencils

logger = logging.getLogger(__name__)

RESIDUAL_FLOOR = 1e-14
DEFAULT_MAX_EXCISION = 0.95
BIAS_WARNING = 0.01


@dataclass(frozen=True)
class Quadrature:
    """Integral with its excision error budget."""
    value: float
    retained_estimate: float
    excision_fraction: float

    @property
    def bias(self) -> float:
        return abs(self.value - self.retained_estimate)


def quadrature_weights(m: MetricField) -> np.ndarray:
    return m.sqrt_det * m.chart.cell_volume


def excision_fraction(m: MetricField, depth: int = 0, order: int = 4) -> float:
    """Volume fraction of the cells excluded for a field of the given depth."""
    w = quadrature_weights(m)
    mask = m.chart.retained_mask(depth, order)
    return float(1.0 - np.sum(w[mask]) / np.sum(w))


def quadrature(m: MetricField, f: np.ndarray, depth: int = 0, order: int = 4,
               max_excision: float = DEFAULT_MAX_EXCISION) -> Quadrature:
    """Integrate a scalar field and estimate the excision bias.

    Raises:
        PreconditionError: If the excised volume fraction exceeds ``max_excision``
    """
    f = np.asarray(f, dtype=float)
    if f.shape != m.chart.shape:
        raise DimensionError(f"Integrand must have the grid shape {m.chart.shape}; got {f.shape}")
    fraction = excision_fraction(m, depth, order)
    if fraction > max_excision:
        raise PreconditionError(
            f"Excised volume fraction {fraction:.3f} exceeds {max_excision:.3f} for depth-{depth} "
            f"integrands; refine the grid", measured=fraction, threshold=max_excision)
    w = quadrature_weights(m)
    mask = m.chart.retained_mask(depth, order)
    filled = m.chart.fill_excised(f, depth, order)
    # np.sum reduces pairwise in a fixed order
    value = float(np.sum(filled * w))
    retained = float(np.sum(f[mask] * w[mask]) / np.sum(w[mask]) * np.sum(w))
    result = Quadrature(value, retained, fraction)
    if fraction > 0.0 and result.bias > BIAS_WARNING * max(abs(value), RESIDUAL_FLOOR):
        logger.warning("Excision bias %.2e is above 1%% of the integral %.6e", result.bias, value)
    logger.debug("Integrated depth-%d field: %.12e (excised fraction %.3f)", depth, value, fraction)
    return result


def integrate(m: MetricField, f: np.ndarray, depth: int = 0, order: int = 4,
              max_excision: float = DEFAULT_MAX_EXCISION) -> float:
    """Midpoint-rule integral of f dv_g."""
    return quadrature(m, f, depth, order, max_excision).value


def volume(m: MetricField, max_excision: float = DEFAULT_MAX_EXCISION) -> float:
    return integrate(m, np.ones(m.chart.shape), 0, 4, max_excision)


@dataclass(frozen=True)
class IdentityResidual:
    """Both sides of an integral identity and their discrepancy."""
    lhs: float
    rhs: float
    abs_residual: float
    rel_residual: float
    grid_spacing: Tuple[float, ...]

    @classmethod
    def from_sides(cls, lhs: float, rhs: float, spacing: Sequence[float]) -> "IdentityResidual":
        diff = abs(lhs - rhs)
        return cls(float(lhs), float(rhs), float(diff),
                   float(diff / max(abs(lhs), abs(rhs), RESIDUAL_FLOOR)), tuple(spacing))

    def passed(self, rtol: float, atol: float = 0.0) -> bool:
        return self.abs_residual <= atol or self.rel_residual <= rtol

    def as_dict(self) -> Dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "abs_residual": self.abs_residual,
                "rel_residual": self.rel_residual, "grid_spacing": list(self.grid_spacing)}


@dataclass(frozen=True)
class TrialFunction:
    """Trial function u for Yamabe quotients, sampled on the chart."""
    u: np.ndarray
    description: str = ""

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if not np.all(np.isfinite(u)):
            raise PreconditionError("Trial function must be finite at every grid point")
        if not np.any(u != 0.0):
            raise PreconditionError("Trial function must not vanish identically")
        object.__setattr__(self, "u", u)

    @classmethod
    def constant(cls, m: MetricField, value: float = 1.0) -> "TrialFunction":
        return cls(np.full(m.chart.shape, float(value)), f"constant {value:g}")


class YamabeSource(str, enum.Enum):
    USER = "user-supplied"
    TRIAL = "trial-function"
    EXACT = "exact-known"


@dataclass(frozen=True)
class YamabeEstimate:
    """A value used in place of the Yamabe invariant, tagged with where it came from."""
    quotient: float
    source: YamabeSource

    @property
    def rigorous(self) -> bool:
        return self.source is not YamabeSource.TRIAL

    def require_positive(self) -> None:
        if not self.quotient > 0.0:
            raise PreconditionError(f"Yamabe value must be positive; got {self.quotient}",
                                    measured=self.quotient, threshold=0.0)

    def as_dict(self) -> Dict:
        note = None if self.rigorous else (
            "upper bound: hypothesis checks using it are non-rigorous when Y appears on the large side")
        return {"value": self.quotient, "source": self.source.value, "note": note}


@dataclass
class CurvatureContext:
    """A metric with its curvature bundle, frame components and structural flags.

    ``einstein`` and ``parallel_ricci`` are structural declarations (for
    instance from a zoo geometry); when None the corresponding property is
    measured on the grid.
    """
    metric: MetricField
    bundle: CurvatureBundle
    einstein: Optional[bool] = None
    parallel_ricci: Optional[bool] = None
    max_excision: float = DEFAULT_MAX_EXCISION

    @classmethod
    def from_metric(cls, m: MetricField, stencil_order: int = 4, **kwargs) -> "CurvatureContext":
        return cls(m, curvature_bundle(m, stencil_order), **kwargs)

    @property
    def dim(self) -> int:
        return self.metric.dim

    @property
    def order(self) -> int:
        return self.bundle.stencil_order

    @cached_property
    def frame(self) -> OrthonormalCurvature:
        return orthonormal_curvature(self.bundle, self.metric)

    def integrate(self, f: np.ndarray, depth: int) -> float:
        return integrate(self.metric, f, depth, self.order, self.max_excision)

    def quadrature(self, f: np.ndarray, depth: int) -> Quadrature:
        return quadrature(self.metric, f, depth, self.order, self.max_excision)

    def retained(self, name: str) -> np.ndarray:
        return self.bundle.mask(name)

    @cached_property
    def scalar_scale(self) -> float:
        mask = self.retained("scalar")
        return max(float(np.max(np.abs(self.bundle.scalar[mask]))) if mask.any() else 0.0, 1e-12)

    # integrands
    @cached_property
    def weyl_norm2(self) -> np.ndarray:
        return self.frame.weyl_norm ** 2

    @cached_property
    def traceless_ricci_norm2(self) -> np.ndarray:
        return self.frame.traceless_ricci_norm ** 2

    @cached_property
    def nabla_traceless_ricci_norm2(self) -> np.ndarray:
        return self.frame.nabla_traceless_ricci.norm2()

    @cached_property
    def nabla_scalar_norm2(self) -> np.ndarray:
        return np.sum(self.frame.nabla_scalar ** 2, axis=-1)

    def weyl_plus_ricci_norm(self, coefficient: float) -> np.ndarray:
        """|W + c R0 o g| pointwise."""
        n = self.dim
        kn = kulkarni_nomizu(self.frame.traceless_ricci, Sym2.identity(n, self.metric.chart.shape))
        combo = self.frame.weyl.values + coefficient * kn.values
        return np.sqrt(np.maximum(np.einsum("...ijkl,...ijkl->...", combo, combo), 0.0))

    # preconditions
    def require_positive_scalar(self) -> float:
        mask = self.retained("scalar")
        low = float(np.min(self.bundle.scalar[mask]))
        if low <= 0.0:
            raise PreconditionError(f"Scalar curvature must be positive; min R = {low:.6e}",
                                    measured=low, threshold=0.0)
        return low

    def require_constant_scalar(self, tolerance: float) -> float:
        mask = self.retained("scalar")
        r = self.bundle.scalar[mask]
        spread = float(np.max(r) - np.min(r))
        if spread > tolerance * self.scalar_scale:
            raise PreconditionError(
                f"Scalar curvature is not constant: spread {spread:.3e} exceeds {tolerance:.1e} x {self.scalar_scale:.3e}",
                measured=spread, threshold=tolerance * self.scalar_scale)
        return spread

    def bach_residual(self) -> float:
        mask = self.retained("bach")
        if not mask.any():
            return float("nan")
        return float(np.max(np.sqrt(np.maximum(self.frame.bach.norm2()[mask], 0.0))))

    def require_bach_flat(self, tolerance: float) -> float:
        """Accept structural Einstein metrics, else require max |B| <= tolerance * R_max^2."""
        measured = self.bach_residual()
        if self.einstein:
            return measured
        threshold = tolerance * self.scalar_scale ** 2
        if math.isnan(measured):
            raise PreconditionError("No grid points survive the excision margin for the Bach tensor; refine the grid")
        if measured > threshold:
            raise PreconditionError(f"Metric is not Bach-flat: max |B| = {measured:.3e} exceeds {threshold:.3e}",
                                    measured=measured, threshold=threshold)
        return measured

    def require_harmonic(self, tolerance: float) -> float:
        """Accept structural parallel Ricci, else require the Codazzi residual below tolerance * R_max."""
        measured = codazzi_residual(self.bundle)
        if self.parallel_ricci:
            return measured
        threshold = tolerance * self.scalar_scale
        if math.isnan(measured) or measured > threshold:
            raise PreconditionError(
                f"Curvature is not harmonic: Codazzi residual {measured:.3e} exceeds {threshold:.3e}",
                measured=measured, threshold=threshold)
        return measured

    def require_einstein(self, tolerance: float) -> float:
        if self.einstein:
            return 0.0
        return require_einstein(self.bundle, self.metric, tolerance)


def _phi_terms(ctx: CurvatureContext, phi: Sym2, nabla_phi_values: np.ndarray) -> Dict[str, np.ndarray]:
    """Pointwise terms of the integrated Ricci-identity expression for phi."""
    n, e = ctx.dim, ctx.metric.frame
    phi0 = tracefree_project(Sym2(frame_components(phi.values, e)))
    div = divergence_sym2(ctx.metric, Tensor3(nabla_phi_values))
    ric0 = ctx.frame.traceless_ricci
    mixed = np.einsum("...ij,...jk,...ki->...", ric0.values, phi0.values, phi0.values, optimize=True)
    return {
        "div": pointwise_norm(div, ctx.metric) ** 2,
        "weyl": weyl_ricci_ricci(ctx.frame.weyl, phi0),
        "ricci": -n / (n - 2.0) * mixed,
        "scalar": -ctx.bundle.scalar / (n - 1.0) * phi0.norm2(),
    }


def lemma21_residual(ctx: CurvatureContext, phi: Sym2, theta: float, phi_depth: int = 0) -> IdentityResidual:
    """Integral identity for the theta-tensor of phi.

    lhs = int (theta^2 + 1)|nabla phi|^2 - |C_theta|^2
    rhs = 2 theta int |div phi|^2 + W(phi0, phi0) - n/(n-2) R0 phi0 phi0 - R/(n-1) |phi0|^2

    Args:
        ctx: Curvature context
        phi: Symmetric 2-tensor field on the chart
        theta: Real parameter
        phi_depth: Derivative depth already present in phi (2 for curvature fields)
    """
    m = ctx.metric
    tf = theta_tensor(m, phi, theta, ctx.order, ctx.bundle.gamma)
    depth = max(DEPTH["weyl"], phi_depth + 1)
    grad2 = pointwise_norm(tf.nabla_phi.values, m) ** 2
    c2 = pointwise_norm(tf.c_theta.values, m) ** 2
    terms = _phi_terms(ctx, phi, tf.nabla_phi.values)
    lhs = ctx.integrate((theta * theta + 1.0) * grad2 - c2, depth)
    rhs = 2.0 * theta * ctx.integrate(sum(terms.values()), depth)
    residual = IdentityResidual.from_sides(lhs, rhs, m.chart.spacing)
    logger.info("Theta-tensor identity (theta=%g): lhs %.6e rhs %.6e rel %.2e", theta, lhs, rhs,
                residual.rel_residual)
    return residual


def integration_by_parts_residual(ctx: CurvatureContext, phi: Sym2, phi_depth: int = 0) -> IdentityResidual:
    """int phi_kj,i phi_ki,j against int |div phi|^2 + W(phi0, phi0) - n/(n-2) R0 phi0 phi0 - R/(n-1)|phi0|^2."""
    m = ctx.metric
    nabla = theta_tensor(m, phi, 0.0, ctx.order, ctx.bundle.gamma).nabla_phi.values
    hat = frame_components(nabla, m.frame)
    depth = max(DEPTH["weyl"], phi_depth + 1)
    lhs = ctx.integrate(np.einsum("...ikj,...jki->...", hat, hat), depth)
    rhs = ctx.integrate(sum(_phi_terms(ctx, phi, nabla).values()), depth)
    return IdentityResidual.from_sides(lhs, rhs, m.chart.spacing)


def lemma21_ricci_inequality(ctx: CurvatureContext, thetas: Sequence[float] = (-1.0, 0.5, 2.0),
                             tolerance: float = 1e-2) -> List[Tuple[float, EstimateReport]]:
    """int |nabla R0|^2 >= 2 theta/(theta^2+1) int [W(R0,R0) - n/(n-2) tr R0^3 - R/(n-1)|R0|^2 + (n-2)^2/(4n^2)|nabla R|^2].

    The allowed negative slack is the measured discretization error of the
    underlying theta-tensor identity for phi = R0 and of the contracted
    Bianchi substitution, plus ``tolerance`` times |rhs|.
    """
    n = ctx.dim
    depth = DEPTH["nabla_traceless_ricci"]
    ric0 = ctx.bundle.traceless_ricci
    grad2 = ctx.integrate(ctx.nabla_traceless_ricci_norm2, depth)
    terms = _phi_terms(ctx, ric0, ctx.bundle.nabla_traceless_ricci.values)
    div2 = ctx.integrate(terms.pop("div"), depth)
    algebraic = ctx.integrate(sum(terms.values()), depth)
    bianchi = (n - 2.0) ** 2 / (4.0 * n * n) * ctx.integrate(ctx.nabla_scalar_norm2, depth)
    reports = []
    for theta in thetas:
        factor = 2.0 * theta / (theta * theta + 1.0)
        lhs = factor * (algebraic + bianchi)
        identity = lemma21_residual(ctx, ric0, theta, phi_depth=DEPTH["traceless_ricci"])
        allowed = (identity.abs_residual / (theta * theta + 1.0) + abs(factor) * abs(div2 - bianchi)
                   + tolerance * abs(grad2))
        reports.append((float(theta), EstimateReport.from_arrays(lhs, grad2, tolerance=allowed)))
    return reports


def lemma22_residual(ctx: CurvatureContext, bach_tolerance: float = 5e-2) -> IdentityResidual:
    """int |nabla R0|^2 = int [2W(R0,R0) - n/(n-2) tr R0^3 - R/(n-1)|R0|^2 + (n-2)^2/(4n(n-1))|nabla R|^2] on Bach-flat metrics.

    Raises:
        PreconditionError: If the metric is not Bach-flat, with the measured max |B|
    """
    ctx.require_bach_flat(bach_tolerance)
    n = ctx.dim
    depth = DEPTH["nabla_traceless_ricci"]
    f = ctx.frame
    lhs = ctx.integrate(ctx.nabla_traceless_ricci_norm2, depth)
    integrand = (2.0 * weyl_ricci_ricci(f.weyl, f.traceless_ricci)
                 - n / (n - 2.0) * cubic_trace(f.traceless_ricci)
                 - ctx.bundle.scalar / (n - 1.0) * ctx.traceless_ricci_norm2
                 + (n - 2.0) ** 2 / (4.0 * n * (n - 1.0)) * ctx.nabla_scalar_norm2)
    rhs = ctx.integrate(integrand, depth)
    return IdentityResidual.from_sides(lhs, rhs, ctx.metric.chart.spacing)


def _yamabe_parts(ctx: CurvatureContext, u: TrialFunction) -> Tuple[float, float, float]:
    """(int |grad u|^2, int R u^2, int |u|^(2n/(n-2)))."""
    n, m = ctx.dim, ctx.metric
    du = stencils.gradient(u.u, m.chart.spacing, ctx.order)
    grad2 = np.einsum("...i,...ij,...j->...", du, m.inverse, du)
    gradient = ctx.integrate(grad2, 1)
    potential = ctx.integrate(ctx.bundle.scalar * u.u ** 2, DEPTH["scalar"])
    norm = ctx.integrate(np.abs(u.u) ** (2.0 * n / (n - 2.0)), 0)
    return gradient, potential, norm


def yamabe_quotient(ctx: CurvatureContext, u: TrialFunction) -> float:
    """4(n-1)/(n-2) [int |grad u|^2 + (n-2)/(4(n-1)) int R u^2] / (int |u|^(2n/(n-2)))^((n-2)/n).

    Raises:
        PreconditionError: If the denominator vanishes
    """
    n = ctx.dim
    gradient, potential, norm = _yamabe_parts(ctx, u)
    if norm <= 0.0:
        raise PreconditionError("Yamabe quotient denominator vanishes", measured=norm, threshold=0.0)
    a = (n - 2.0) / (4.0 * (n - 1.0))
    return (gradient + a * potential) / a / norm ** ((n - 2.0) / n)


def sobolev_check(ctx: CurvatureContext, u: TrialFunction, y: YamabeEstimate,
                  tolerance: float = 1e-2) -> EstimateReport:
    """(n-2)/(4(n-1)) Y (int |u|^(2n/(n-2)))^((n-2)/n) <= int |grad u|^2 + (n-2)/(4(n-1)) int R u^2.

    Raises:
        PreconditionError: If Y or R is not positive
    """
    y.require_positive()
    ctx.require_positive_scalar()
    if not y.rigorous:
        logger.warning("Sobolev check uses a trial-function Yamabe value (an upper bound)")
    n = ctx.dim
    gradient, potential, norm = _yamabe_parts(ctx, u)
    a = (n - 2.0) / (4.0 * (n - 1.0))
    rhs = gradient + a * potential
    return EstimateReport.from_arrays(a * y.quotient * norm ** ((n - 2.0) / n), rhs,
                                      tolerance=tolerance, relative=True)


def _weyl_ln2(ctx: CurvatureContext) -> float:
    """(int |W|^(n/2))^(2/n)."""
    n = ctx.dim
    return ctx.integrate(ctx.frame.weyl_norm ** (n / 2.0), DEPTH["weyl"]) ** (2.0 / n)


def lemma24_combination(ctx: CurvatureContext, y: YamabeEstimate, einstein_tolerance: float = 1e-2,
                        tolerance: float = 1e-2) -> EstimateReport:
    """Sign of the Yamabe-weighted combination of int |grad|W||^2 and int R|W|^2 on Einstein metrics.

    [(n+1)/(n-1) Y - 8(n-1)/(n-2) C(n) ||W||] int |grad|W||^2
    + [2/n Y - 2 C(n) ||W||] int R|W|^2 <= 0, with ||W|| the L^(n/2) norm.
    """
    ctx.require_einstein(einstein_tolerance)
    ctx.require_positive_scalar()
    y.require_positive()
    n, m = ctx.dim, ctx.metric
    c = cubic_constant(n)
    wnorm = _weyl_ln2(ctx)
    grad_abs = stencils.gradient(ctx.frame.weyl_norm, m.chart.spacing, ctx.order)
    kato = ctx.integrate(pointwise_norm(grad_abs, m) ** 2, DEPTH["weyl"] + 1)
    potential = ctx.integrate(ctx.bundle.scalar * ctx.weyl_norm2, DEPTH["weyl"])
    first = ((n + 1.0) / (n - 1.0) * y.quotient - 8.0 * (n - 1.0) / (n - 2.0) * c * wnorm) * kato
    second = (2.0 / n * y.quotient - 2.0 * c * wnorm) * potential
    return EstimateReport.from_arrays(first + second, 0.0,
                                      tolerance=tolerance * (abs(first) + abs(second)))


def _require_range(n: int, allowed: Sequence[int], what: str) -> None:
    if n not in allowed:
        raise DimensionError(f"{what} needs n in {list(allowed)}; got n = {n}")


def thm12_hypothesis(ctx: CurvatureContext, y: YamabeEstimate, margin: float = 0.0,
                     bach_tolerance: float = 5e-2, scalar_tolerance: float = 1e-2) -> EstimateReport:
    """(int |W + sqrt(n)/(sqrt(8)(n-2)) R0 o g|^(n/2))^(2/n) < c Y.

    c = 1/4 sqrt((n-2)/(2(n-1))) for n in {4, 5} and (1/25) sqrt(21/10) for n = 6.

    Raises:
        DimensionError: If n is not 4, 5 or 6
        PreconditionError: If R is not positive and constant, the metric is not Bach-flat or Y <= 0
    """
    n = ctx.dim
    _require_range(n, (4, 5, 6), "The L^(n/2) pinching")
    ctx.require_positive_scalar()
    ctx.require_constant_scalar(scalar_tolerance)
    ctx.require_bach_flat(bach_tolerance)
    y.require_positive()
    coefficient = math.sqrt(n) / (math.sqrt(8.0) * (n - 2))
    lhs = ctx.integrate(ctx.weyl_plus_ricci_norm(coefficient) ** (n / 2.0), DEPTH["weyl"]) ** (2.0 / n)
    constant = (0.25 * math.sqrt((n - 2) / (2.0 * (n - 1))) if n <= 5
                else math.sqrt(21.0 / 10.0) / 25.0)
    return EstimateReport.from_arrays(lhs, constant * y.quotient, strict=True, margin=margin)


def thm13_hypothesis(ctx: CurvatureContext, y: YamabeEstimate, margin: float = 0.0,
                     harmonic_tolerance: float = 1e-6) -> EstimateReport:
    """int |W + R0 o g / sqrt(2)|^2 < 25/486 Y^2 on a 4-manifold with harmonic curvature.

    Raises:
        DimensionError: If n != 4
        PreconditionError: If the curvature is not harmonic (with the measured Codazzi residual),
            R is not positive or Y <= 0
    """
    _require_range(ctx.dim, (4,), "The harmonic-curvature pinching")
    ctx.require_harmonic(harmonic_tolerance)
    ctx.require_positive_scalar()
    y.require_positive()
    lhs = ctx.integrate(ctx.weyl_plus_ricci_norm(1.0 / math.sqrt(2.0)) ** 2, DEPTH["weyl"])
    return EstimateReport.from_arrays(lhs, 25.0 / 486.0 * y.quotient ** 2, strict=True, margin=margin)


EXPECTED_SELECTIONS = {4: "c1", 5: "c1", 6: "c2"}
EXPECTED_HARMONIC_SELECTIONS = {4: "c2"}


@dataclass(frozen=True)
class ConstantsTable:
    """Candidate constants of the integral pinching arguments and which one is smallest."""
    n: int
    cubic_constant: float
    c1: float
    c2: float
    c3: float
    c_thm13: float

    @property
    def argmin(self) -> str:
        return min(("c1", "c2", "c3"), key=lambda k: getattr(self, k))

    @property
    def argmin_harmonic(self) -> str:
        return min(("c_thm13", "c2", "c3"), key=lambda k: getattr(self, k))

    @property
    def selection_matches(self) -> bool:
        expected = EXPECTED_SELECTIONS.get(self.n)
        harmonic = EXPECTED_HARMONIC_SELECTIONS.get(self.n)
        return ((expected is None or expected == self.argmin)
                and (harmonic is None or harmonic == self.argmin_harmonic))

    def as_dict(self) -> Dict:
        return {
            "n": self.n, "cubic_constant": self.cubic_constant,
            "c1": self.c1, "c2": self.c2, "c3": self.c3, "c_thm13": self.c_thm13,
            "argmin": self.argmin, "argmin_harmonic": self.argmin_harmonic,
            "expected_argmin": EXPECTED_SELECTIONS.get(self.n),
            "expected_argmin_harmonic": EXPECTED_HARMONIC_SELECTIONS.get(self.n),
            "selection_matches": self.selection_matches,
        }


def constants_table(n: int) -> ConstantsTable:
    n = check_dim(n)
    c = cubic_constant(n)
    root = math.sqrt((n - 2) / (2.0 * (n - 1)))
    return ConstantsTable(
        n=n,
        cubic_constant=c,
        c1=0.25 * root,
        c2=(n + 1) * (n - 2) / (8.0 * (n - 1) ** 2 * c),
        c3=1.0 / (n * c),
        c_thm13=(n + 2) / (2.0 * n) * root,
    )


@dataclass(frozen=True)
class GaussBonnet:
    """Euler characteristic from the Chern-Gauss-Bonnet integrand and its rearrangement check."""
    chi_estimate: float
    euler_characteristic: int
    rearrangement: IdentityResidual
    weyl_integral: float
    traceless_ricci_integral: float
    scalar_square_integral: float

    def as_dict(self) -> Dict:
        return {"chi_estimate": self.chi_estimate, "euler_characteristic": self.euler_characteristic,
                "rearrangement": self.rearrangement.as_dict(), "weyl_integral": self.weyl_integral,
                "traceless_ricci_integral": self.traceless_ricci_integral,
                "scalar_square_integral": self.scalar_square_integral}


def gauss_bonnet_4d(ctx: CurvatureContext) -> GaussBonnet:
    """chi = 1/(32 pi^2) int (|W|^2 - 2|R0|^2 + R^2/6), plus
    int |R0|^2 = int (|W|^2/2 + R^2/12) - 16 pi^2 chi with chi rounded to an integer."""
    _require_range(ctx.dim, (4,), "Chern-Gauss-Bonnet")
    depth = DEPTH["weyl"]
    w2 = ctx.integrate(ctx.weyl_norm2, depth)
    r02 = ctx.integrate(ctx.traceless_ricci_norm2, depth)
    rr = ctx.integrate(ctx.bundle.scalar ** 2, depth)
    chi = (w2 - 2.0 * r02 + rr / 6.0) / (32.0 * math.pi ** 2)
    chi_int = int(round(chi))
    rearranged = IdentityResidual.from_sides(r02, 0.5 * w2 + rr / 12.0 - 16.0 * math.pi ** 2 * chi_int,
                                             ctx.metric.chart.spacing)
    logger.info("Gauss-Bonnet estimate chi = %.6f", chi)
    return GaussBonnet(chi, chi_int, rearranged, w2, r02, rr)


@dataclass
class CorollaryConditions:
    """Integral pinching conditions of the 4-dimensional corollary and their rewritings."""
    records: Dict[str, EstimateReport] = field(default_factory=dict)
    chi_estimate: float = float("nan")
    forms_agree: bool = True

    def as_dict(self) -> Dict:
        return {"records": {k: v.as_dict() for k, v in sorted(self.records.items())},
                "chi_estimate": self.chi_estimate, "forms_agree": self.forms_agree}


def corollary21_conditions(ctx: CurvatureContext, y: Optional[YamabeEstimate] = None,
                           margin: float = 0.0) -> CorollaryConditions:
    """Evaluate the integral conditions of the 4-dimensional corollary.

    Records:
        bach_flat: int (|W|^2 + 5/4 |R0|^2) <= 1/48 int R^2
        harmonic: int (|W|^2 + 374/81 |R0|^2) <= 25/486 int R^2
        bach_flat_euler / harmonic_euler: the Euler-characteristic forms with integer chi
        bach_flat_yamabe / harmonic_yamabe: int (|W|^2 + |R0|^2) < Y^2/48 and
            int (|W|^2 + 4|R0|^2) < 25/486 Y^2 (only when Y is given)
        yamabe_upper_bound: Y^2 >= int (R^2 - 12|R0|^2), informational (only when Y is given)

    ``forms_agree`` compares the direct forms with the Euler forms evaluated at
    the Gauss-Bonnet integral itself, which must coincide algebraically.
    """
    gb = gauss_bonnet_4d(ctx)
    w2, r02, rr = gb.weyl_integral, gb.traceless_ricci_integral, gb.scalar_square_integral
    pi2 = math.pi ** 2
    out = CorollaryConditions(chi_estimate=gb.chi_estimate)
    out.records["bach_flat"] = EstimateReport.from_arrays(w2 + 1.25 * r02, rr / 48.0)
    out.records["harmonic"] = EstimateReport.from_arrays(w2 + 374.0 / 81.0 * r02, 25.0 / 486.0 * rr)
    chi = gb.euler_characteristic
    out.records["bach_flat_euler"] = EstimateReport.from_arrays(13.0 / 8.0 * w2 + rr / 12.0, 20.0 * pi2 * chi)
    out.records["harmonic_euler"] = EstimateReport.from_arrays(268.0 / 81.0 * w2 + rr / 3.0,
                                                               5984.0 / 81.0 * pi2 * chi)
    # same forms at the Gauss-Bonnet integral: algebraically identical to the direct forms
    chi_gb = gb.chi_estimate
    euler_gb = (13.0 / 8.0 * w2 + rr / 12.0 <= 20.0 * pi2 * chi_gb,
                268.0 / 81.0 * w2 + rr / 3.0 <= 5984.0 / 81.0 * pi2 * chi_gb)
    direct = (out.records["bach_flat"].satisfied, out.records["harmonic"].satisfied)
    scale = max(abs(w2), abs(r02), abs(rr), RESIDUAL_FLOOR)
    near_boundary = (abs(out.records["bach_flat"].slack) < 1e-9 * scale,
                     abs(out.records["harmonic"].slack) < 1e-9 * scale)
    out.forms_agree = all(a == b or edge for a, b, edge in zip(direct, euler_gb, near_boundary))
    if y is not None:
        yy = y.quotient ** 2
        out.records["bach_flat_yamabe"] = EstimateReport.from_arrays(w2 + r02, yy / 48.0, strict=True, margin=margin)
        out.records["harmonic_yamabe"] = EstimateReport.from_arrays(w2 + 4.0 * r02, 25.0 / 486.0 * yy,
                                                                    strict=True, margin=margin)
        out.records["yamabe_upper_bound"] = EstimateReport.from_arrays(rr - 12.0 * r02, yy)
    return out


def einstein_weyl_integral(ctx: CurvatureContext, einstein_tolerance: float = 1e-2) -> EstimateReport:
    """int (R/n - C(n)|W|) |W|^2 <= 0 on Einstein metrics (informational)."""
    ctx.require_einstein(einstein_tolerance)
    n = ctx.dim
    integrand = (ctx.bundle.scalar / n - cubic_constant(n) * ctx.frame.weyl_norm) * ctx.weyl_norm2
    return EstimateReport.from_arrays(ctx.integrate(integrand, DEPTH["weyl"]), 0.0)


def einstein_constant_check() -> bool:
    """4 C(4) / (3 sqrt(12)) < 1/4."""
    return 4.0 * cubic_constant(4) / (3.0 * math.sqrt(12.0)) < 0.25


def bianchi_residual(ctx: CurvatureContext) -> float:
    return contracted_bianchi_residual(ctx.bundle, ctx.metric)


def curvature_decomposition_residual(ctx: CurvatureContext) -> float:
    """max |R_ijkl R_jl R_ik - (Weyl, traceless Ricci, scalar split)| over retained points, phi = Ric."""
    e = ctx.metric.frame
    riem = ctx.bundle.riemann
    hat = Alg4(frame_components(riem.values, e), riem.flags, riem.residual)
    lhs, rhs = riemann_contraction_split(hat, Sym2(frame_components(ctx.bundle.ricci.values, e)))
    mask = ctx.retained("riemann")
    return float(np.max(np.abs(lhs - rhs)[mask])) if mask.any() else float("nan")


def kato(ctx: CurvatureContext, einstein_tolerance: float = 1e-2, harmonic_tolerance: float = 1e-6,
         tolerance: float = 1e-2) -> List[KatoCheck]:
    return kato_checks(ctx.bundle, ctx.metric, einstein_tolerance, True if ctx.parallel_ricci else None,
                       harmonic_tolerance, tolerance)
