"""Pointwise inequality engine for curvature-type tensors.

Every function here works on orthonormal-frame components (the metric is the
identity); the entry points that take a metric ``g`` move coordinate
components into the orthonormal frame of ``g`` first. Everything is vectorized
over any leading batch axes, so the same code serves random samples and grid
points. Results are :class:`EstimateReport` records that keep the sample with
the smallest slack.
"""
import logging
import math
from dataclasses import dataclass, field
from decimal import Decimal, getcontext
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from . import stencils
from .chart_geometry import (
    CurvatureBundle,
    MetricField,
    codazzi_residual,
    orthonormal_curvature,
    pointwise_norm,
    scalar_laplacian,
    weyl_gradient_norm2,
)
from .errors import DimensionError, PreconditionError, SymmetryError, ThetaSingularityError
from .tensor_core import (
    Alg4,
    Sym2,
    Symmetry,
    check_dim,
    cubic_trace,
    cubic_weyl_form,
    frame_components,
    kulkarni_nomizu,
    norm2,
    orthonormal_frame,
    random_tracefree,
    random_weyl,
    weyl_ricci_ricci,
)

logger = logging.getLogger(__name__)

THETA_MIN = -1.0
THETA_MIN_VALUE = 0.75
KATO_EXCLUSION = 1e-8
SAMPLE_CHUNK = 2000


def _cubic_constant_exact(n: int) -> Decimal:
    getcontext().prec = 40
    if n == 4:
        return Decimal(6).sqrt() / 4
    if n == 5:
        return 4 * Decimal(10).sqrt() / 15
    if n == 6:
        return Decimal(70).sqrt() / (2 * Decimal(3).sqrt())
    return Decimal(5) / 2


# C(n) for the cubic Weyl bound, evaluated in 40-digit decimal and rounded once
CUBIC_CONSTANTS: Dict[int, float] = {n: float(_cubic_constant_exact(n)) for n in range(4, 9)}


def cubic_constant(n: int) -> float:
    return CUBIC_CONSTANTS[check_dim(n)]


@dataclass(frozen=True)
class EstimateSample:
    """Pointwise curvature data for the algebraic estimates (orthonormal frame)."""
    weyl: Alg4
    traceless_ricci: Sym2
    scalar: float = 0.0
    rho: float = 0.0
    theta: float = -1.0

    def __post_init__(self):
        if self.weyl.dim != self.traceless_ricci.dim:
            raise DimensionError(f"Dimension mismatch: {self.weyl.dim} vs {self.traceless_ricci.dim}")
        self.weyl.require(Symmetry.weyl(), "W")
        _require_tracefree(self.traceless_ricci)

    @property
    def dim(self) -> int:
        return self.weyl.dim


def _require_tracefree(a: Sym2, tol: float = 1e-10) -> None:
    scale = max(1.0, float(np.max(np.abs(a.values)))) if a.values.size else 1.0
    trace = float(np.max(np.abs(a.trace()))) if a.values.size else 0.0
    if trace > tol * scale:
        raise SymmetryError(f"Traceless Ricci input must be tracefree; trace {trace:.3e}")


@dataclass(frozen=True)
class EstimateReport:
    """lhs <= rhs (or lhs < rhs - margin when strict) over a batch of samples or grid points.

    ``lhs``/``rhs``/``slack`` are taken at the witness, the entry of minimum
    slack. ``max_ratio`` is the largest observed lhs/rhs over entries with rhs > 0.
    """
    lhs: float
    rhs: float
    slack: float
    satisfied: bool
    strict: bool = False
    count: int = 1
    violations: int = 0
    max_ratio: float = float("nan")
    witness: Optional[Dict] = None

    @classmethod
    def from_arrays(cls, lhs, rhs, strict: bool = False, tolerance: float = 0.0,
                    relative: bool = False, margin: float = 0.0,
                    locations: Optional[np.ndarray] = None) -> "EstimateReport":
        """Reduce pointwise sides to a report.

        Args:
            lhs: Left-hand sides, any shape
            rhs: Right-hand sides, broadcastable to lhs
            strict: Require lhs < rhs - margin instead of slack >= -tolerance
            tolerance: Allowed negative slack for non-strict checks
            relative: Scale ``tolerance`` by |rhs| entrywise
            margin: Safety margin for strict checks
            locations: Optional (count, k) array naming each entry (e.g. grid indices)

        Returns:
            EstimateReport: Summary with the minimum-slack witness
        """
        lhs, rhs = np.broadcast_arrays(np.asarray(lhs, dtype=float), np.asarray(rhs, dtype=float))
        lhs, rhs = lhs.ravel(), rhs.ravel()
        if lhs.size == 0:
            return cls(0.0, 0.0, 0.0, True, strict, 0, 0)
        slack = rhs - lhs
        if strict:
            ok = slack > margin
            score = slack
        else:
            allowed = tolerance * np.abs(rhs) if relative else np.full_like(rhs, tolerance)
            ok = slack >= -allowed
            score = slack / np.maximum(np.abs(rhs), np.finfo(float).tiny) if relative else slack
        idx = int(np.argmin(score))
        positive = rhs > 0
        ratio = float(np.max(lhs[positive] / rhs[positive])) if np.any(positive) else float("nan")
        witness = {"index": idx}
        if locations is not None:
            witness["location"] = [int(v) for v in np.asarray(locations)[idx]]
        return cls(
            lhs=float(lhs[idx]),
            rhs=float(rhs[idx]),
            slack=float(slack[idx]),
            satisfied=bool(np.all(ok)),
            strict=strict,
            count=int(lhs.size),
            violations=int(np.count_nonzero(~ok)),
            max_ratio=ratio,
            witness=witness,
        )

    def as_dict(self) -> Dict:
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "satisfied": self.satisfied,
            "strict": self.strict,
            "count": self.count,
            "violations": self.violations,
            "max_ratio": self.max_ratio,
            "witness": self.witness,
        }


@dataclass(frozen=True)
class TUVDecomposition:
    """R0 o R0 = T + U + V with T totally tracefree."""
    traceless_ricci: Sym2
    t: Alg4
    u: Alg4
    v: Alg4

    def norm_identity(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """The three members |T|^2 + n/2 |V|^2, |R0 o R0|^2 + (n-2)/2 |V|^2 - |U|^2, 8(n-2)/(n-1) |R0|^4."""
        n = self.t.dim
        r2 = self.traceless_ricci.norm2()
        kn = kulkarni_nomizu(self.traceless_ricci, self.traceless_ricci)
        first = norm2(self.t) + 0.5 * n * norm2(self.v)
        middle = norm2(kn) + 0.5 * (n - 2) * norm2(self.v) - norm2(self.u)
        closed = 8.0 * (n - 2) / (n - 1) * r2 ** 2
        return first, middle, closed


def _frame_for(g: Sym2, batch_shape: Tuple[int, ...]) -> np.ndarray:
    e = orthonormal_frame(g)
    return np.broadcast_to(e, batch_shape + e.shape[-2:])


def _sym2_in_frame(a: Sym2, g: Sym2) -> Sym2:
    return Sym2(frame_components(a.values, _frame_for(g, a.batch_shape)))


def _alg4_in_frame(w: Alg4, g: Sym2) -> Alg4:
    return Alg4(frame_components(w.values, _frame_for(g, w.batch_shape)), w.flags, w.residual)


def tuv_decompose(ric0: Sym2, g: Optional[Sym2] = None) -> TUVDecomposition:
    """Split R0 o R0 into its Weyl-type, traceless-Ricci-type and scalar-type parts.

    With a metric ``g`` the coordinate components of R0 are first taken to the
    orthonormal frame of ``g``, and T, U, V are returned in that frame.

    U = -1/(n(n-1)) |R0|^2 (g o g)
    V = -2/(n-2) (R0^2 o g) + 2/(n(n-2)) |R0|^2 (g o g)
    T = R0 o R0 - U - V

    Raises:
        SymmetryError: If ``ric0`` is not tracefree
    """
    if g is not None:
        ric0 = _sym2_in_frame(ric0, g)
    _require_tracefree(ric0)
    n = ric0.dim
    eye = Sym2.identity(n, ric0.batch_shape)
    r2 = ric0.norm2()
    gg = kulkarni_nomizu(eye, eye)
    u = gg * (-r2 / (n * (n - 1)))
    v = kulkarni_nomizu(ric0.square(), eye) * (-2.0 / (n - 2)) + gg * (2.0 * r2 / (n * (n - 2)))
    t = kulkarni_nomizu(ric0, ric0) - u - v
    return TUVDecomposition(ric0, t, u, v)


def _sharp_sides(w: Alg4, ric0: Sym2, rho) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = w.dim
    rho = np.asarray(rho, dtype=float)
    lhs = np.abs(-weyl_ricci_ricci(w, ric0) + rho / (n - 2) * cubic_trace(ric0))
    combined = w.values + (rho / (math.sqrt(2 * n) * (n - 2)))[(...,) + (None,) * 4] * \
        kulkarni_nomizu(ric0, Sym2.identity(n, ric0.batch_shape)).values
    combined_norm2 = np.einsum("...ijkl,...ijkl->...", combined, combined)
    rhs = math.sqrt((n - 2) / (2.0 * (n - 1))) * np.sqrt(combined_norm2) * ric0.norm2()
    closed = norm2(w) + 2.0 * rho ** 2 / (n * (n - 2)) * ric0.norm2()
    identity_error = np.abs(combined_norm2 - closed) / np.maximum(np.abs(closed), 1e-300)
    return lhs, rhs, identity_error


def sharp_estimate(s: EstimateSample, tolerance: float = 1e-12) -> EstimateReport:
    """|-W(R0, R0) + rho/(n-2) tr R0^3| <= sqrt((n-2)/(2(n-1))) |W + rho/(sqrt(2n)(n-2)) R0 o g| |R0|^2."""
    lhs, rhs, _ = _sharp_sides(s.weyl, s.traceless_ricci, s.rho)
    return EstimateReport.from_arrays(lhs, rhs, tolerance=tolerance, relative=True)


def cubic_bound_check(w: Alg4, tolerance: float = 1e-12) -> EstimateReport:
    """2 W_ijkl W_ipkq W_pjql + 1/2 W_ijkl W_klpq W_pqij <= C(n) |W|^3."""
    lhs = cubic_weyl_form(w)
    rhs = cubic_constant(w.dim) * np.maximum(norm2(w), 0.0) ** 1.5
    return EstimateReport.from_arrays(lhs, rhs, tolerance=tolerance, relative=True)


def theta_coefficient(theta: float) -> float:
    """f(theta) = (theta^2 - theta + 1) / (theta - 1)^2.

    Raises:
        ThetaSingularityError: If theta == 1
    """
    if theta == 1.0:
        raise ThetaSingularityError("theta must differ from 1; the coefficient has a pole there")
    return (theta * theta - theta + 1.0) / (theta - 1.0) ** 2


def theta_minimize(lower: float = -10.0, upper: float = 10.0, gap: float = 1e-6) -> Tuple[float, float]:
    """Minimize theta_coefficient on [lower, upper] minus a gap around the pole.

    Returns:
        Tuple: (theta*, f(theta*))
    """
    best = None
    for a, b in ((lower, 1.0 - gap), (1.0 + gap, upper)):
        if b <= a:
            continue
        res = minimize_scalar(theta_coefficient, bounds=(a, b), method="bounded",
                              options={"xatol": 1e-10})
        logger.debug("theta minimization on [%g, %g]: x=%.12f f=%.15f", a, b, res.x, res.fun)
        if best is None or res.fun < best[1]:
            best = (float(res.x), float(res.fun))
    if best is None:
        raise ThetaSingularityError(f"Empty search interval [{lower}, {upper}]")
    return best


def rho_from_theta(theta: float, n: int) -> float:
    """rho = n (theta - 1)^2 / (2 (theta^2 - theta + 1)), i.e. n / (2 f(theta))."""
    return check_dim(n) / (2.0 * theta_coefficient(theta))


def _require_dim4(n: int, what: str) -> None:
    if n != 4:
        raise DimensionError(f"{what} is a 4-dimensional condition; got n = {n}")


def _kn_with_identity(ric0: Sym2) -> np.ndarray:
    return kulkarni_nomizu(ric0, Sym2.identity(ric0.dim, ric0.batch_shape)).values


def _alg4_norm(values: np.ndarray) -> np.ndarray:
    return np.sqrt(np.maximum(np.einsum("...ijkl,...ijkl->...", values, values), 0.0))


def pointwise_pinching_thm11(w: Alg4, ric0: Sym2, scalar, margin: float = 0.0,
                             locations: Optional[np.ndarray] = None,
                             g: Optional[Sym2] = None) -> EstimateReport:
    """|W + sqrt(2)/3 R0 o g| < 2/(3 sqrt(3)) R at every entry (n = 4).

    ``w`` and ``ric0`` are orthonormal-frame components, or coordinate
    components of the metric ``g`` when it is given.

    Raises:
        DimensionError: If n != 4
        PreconditionError: If R is not positive
    """
    _require_dim4(w.dim, "Pointwise pinching")
    if g is not None:
        w, ric0 = _alg4_in_frame(w, g), _sym2_in_frame(ric0, g)
    scalar = np.asarray(scalar, dtype=float)
    if scalar.size and float(np.min(scalar)) <= 0.0:
        raise PreconditionError("Pointwise pinching needs positive scalar curvature",
                                measured=float(np.min(scalar)), threshold=0.0)
    lhs = _alg4_norm(w.values + math.sqrt(2.0) / 3.0 * _kn_with_identity(ric0))
    rhs = 2.0 / (3.0 * math.sqrt(3.0)) * scalar
    return EstimateReport.from_arrays(lhs, rhs, strict=True, margin=margin, locations=locations)


def einstein_pinching_condition(w: Alg4, ric0: Sym2, scalar, theta: float = THETA_MIN,
                                margin: float = 0.0,
                                locations: Optional[np.ndarray] = None) -> EstimateReport:
    """sqrt(2(n-2)/(n-1)) |f(theta) W + n/(2 sqrt(2n)(n-2)) R0 o g| < R/(n-1) in any dimension.

    At theta = -1 and n = 4 this is the pointwise pinching of :func:`pointwise_pinching_thm11`.
    """
    n = w.dim
    f = theta_coefficient(theta)
    combo = f * w.values + n / (2.0 * math.sqrt(2.0 * n) * (n - 2)) * _kn_with_identity(ric0)
    lhs = math.sqrt(2.0 * (n - 2) / (n - 1)) * _alg4_norm(combo)
    rhs = np.asarray(scalar, dtype=float) / (n - 1)
    return EstimateReport.from_arrays(lhs, rhs, strict=True, margin=margin, locations=locations)


@dataclass(frozen=True)
class RemarkChain:
    """The chain of elementary consequences of the 4-dimensional pointwise pinching."""
    weaker_condition: EstimateReport
    squared_chain: EstimateReport
    squared_bound: EstimateReport
    linear_bound: EstimateReport
    constant_comparison: bool

    def as_dict(self) -> Dict:
        return {
            "weaker_condition": self.weaker_condition.as_dict(),
            "squared_chain": self.squared_chain.as_dict(),
            "squared_bound": self.squared_bound.as_dict(),
            "linear_bound": self.linear_bound.as_dict(),
            "constant_comparison": self.constant_comparison,
        }


def remark1_chain(w: Alg4, ric0: Sym2, scalar, locations: Optional[np.ndarray] = None) -> RemarkChain:
    """Evaluate |W| + |R0| < R/16 and the chain implied by the pointwise pinching.

    |W|^2 + |R0|^2 <= |W|^2 + 16/9 |R0|^2 < 4R^2/27, |W| + |R0| < 4R/(3 sqrt 6), and
    the constant comparison 4/(3 sqrt 6) > 1/16.
    """
    _require_dim4(w.dim, "The pinching chain")
    scalar = np.asarray(scalar, dtype=float)
    wn = _alg4_norm(w.values)
    rn = np.sqrt(np.maximum(ric0.norm2(), 0.0))
    return RemarkChain(
        weaker_condition=EstimateReport.from_arrays(wn + rn, scalar / 16.0, strict=True, locations=locations),
        squared_chain=EstimateReport.from_arrays(wn ** 2 + rn ** 2, wn ** 2 + 16.0 / 9.0 * rn ** 2,
                                                 tolerance=1e-12, relative=True, locations=locations),
        squared_bound=EstimateReport.from_arrays(wn ** 2 + 16.0 / 9.0 * rn ** 2, 4.0 * scalar ** 2 / 27.0,
                                                 strict=True, locations=locations),
        linear_bound=EstimateReport.from_arrays(wn + rn, 4.0 * scalar / (3.0 * math.sqrt(6.0)),
                                                strict=True, locations=locations),
        constant_comparison=4.0 / (3.0 * math.sqrt(6.0)) > 1.0 / 16.0,
    )


def _einstein_residual(bundle: CurvatureBundle, m: MetricField) -> Tuple[float, float]:
    mask = bundle.mask("traceless_ricci")
    ric0 = pointwise_norm(bundle.traceless_ricci.values, m)[mask]
    scale = max(float(np.max(np.abs(bundle.scalar[mask]))) if mask.any() else 0.0, 1e-12)
    return (float(ric0.max()) if ric0.size else 0.0), scale


def require_einstein(bundle: CurvatureBundle, m: MetricField, tolerance: float) -> float:
    """Raise PreconditionError unless max |R0| <= tolerance * max |R|; returns max |R0|."""
    residual, scale = _einstein_residual(bundle, m)
    if residual > tolerance * scale:
        raise PreconditionError(
            f"Metric is not Einstein: max |Ric0| = {residual:.3e} exceeds {tolerance:.1e} x {scale:.3e}",
            measured=residual, threshold=tolerance * scale)
    return residual


def einstein_weyl_laplacian_residual(bundle: CurvatureBundle, m: MetricField,
                                     einstein_tolerance: float = 1e-2) -> float:
    """max |1/2 Lap|W|^2 - |nabla W|^2 - 2R/n |W|^2 + 2 (cubic Weyl form)| over retained points.

    Raises:
        PreconditionError: If the metric is not Einstein to tolerance
    """
    require_einstein(bundle, m, einstein_tolerance)
    n, order = bundle.dim, bundle.stencil_order
    frame = orthonormal_curvature(bundle, m)
    w2 = frame.weyl_norm ** 2
    lap = scalar_laplacian(m, w2, order, bundle.gamma)
    residual = (0.5 * lap - weyl_gradient_norm2(bundle, m)
                - 2.0 / n * bundle.scalar * w2 + 2.0 * cubic_weyl_form(frame.weyl))
    mask = bundle.mask("laplacian_weyl_norm")
    if not mask.any():
        raise PreconditionError("No grid points survive the excision margin for the Weyl Laplacian; refine the grid")
    value = float(np.max(np.abs(residual[mask])))
    logger.info("Weyl Laplacian residual: %.3e", value)
    return value


@dataclass(frozen=True)
class KatoCheck:
    """One refined Kato inequality; ``applicable`` is False when its hypothesis fails."""
    name: str
    applicable: bool
    hypothesis_residual: float
    report: EstimateReport

    def as_dict(self) -> Dict:
        return {"name": self.name, "applicable": self.applicable,
                "hypothesis_residual": self.hypothesis_residual, "report": self.report.as_dict()}


def _kato(norm_field: np.ndarray, gradient_norm2: np.ndarray, constant: float, m: MetricField,
          order: int, mask: np.ndarray, tolerance: float) -> EstimateReport:
    grad_abs = stencils.gradient(norm_field, m.chart.spacing, order)
    grad_abs2 = pointwise_norm(grad_abs, m) ** 2
    keep = mask & (norm_field > KATO_EXCLUSION * float(np.max(norm_field[mask]) if mask.any() else 0.0))
    return EstimateReport.from_arrays(constant * grad_abs2[keep], gradient_norm2[keep],
                                      tolerance=tolerance, locations=np.argwhere(keep))


def kato_checks(bundle: CurvatureBundle, m: MetricField, einstein_tolerance: float = 1e-2,
                harmonic: Optional[bool] = None, harmonic_tolerance: float = 1e-6,
                tolerance: float = 1e-2) -> List[KatoCheck]:
    """Refined Kato inequalities for W on Einstein metrics and for R0 on harmonic curvature.

    |nabla W|^2 >= (n+1)/(n-1) |nabla|W||^2 and |nabla R0|^2 >= (n+2)/n |nabla|R0||^2.
    Points where the norm is below 1e-8 of its maximum are skipped. A check
    whose hypothesis fails is returned with ``applicable=False`` and is
    informational only.

    Args:
        bundle: Curvature bundle
        m: Metric field
        einstein_tolerance: Relative tolerance on max |R0|
        harmonic: Structural harmonic-curvature flag; None measures the Codazzi residual
        harmonic_tolerance: Relative tolerance on the Codazzi residual
        tolerance: Allowed negative slack relative to R_max^3

    Returns:
        List[KatoCheck]: The Weyl check and the traceless Ricci check
    """
    n, order = bundle.dim, bundle.stencil_order
    frame = orthonormal_curvature(bundle, m)
    residual, scale = _einstein_residual(bundle, m)
    slack_tol = tolerance * scale ** 3
    mask3 = bundle.mask("nabla_ricci")

    weyl_report = _kato(frame.weyl_norm, weyl_gradient_norm2(bundle, m), (n + 1.0) / (n - 1.0),
                        m, order, mask3, slack_tol)
    checks = [KatoCheck("weyl", residual <= einstein_tolerance * scale, residual, weyl_report)]

    codazzi = codazzi_residual(bundle)
    applicable = harmonic if harmonic is not None else codazzi <= harmonic_tolerance * scale
    ric0_grad2 = pointwise_norm(bundle.nabla_traceless_ricci.values, m) ** 2
    ric0_report = _kato(frame.traceless_ricci_norm, ric0_grad2, (n + 2.0) / n, m, order, mask3, slack_tol)
    checks.append(KatoCheck("traceless_ricci", bool(applicable), codazzi, ric0_report))
    for check in checks:
        if not check.applicable:
            logger.info("Kato check '%s' is report-only: hypothesis residual %.3e", check.name,
                        check.hypothesis_residual)
    return checks


@dataclass
class SampleSuite:
    """Aggregated random-sample results for one dimension."""
    n: int
    samples: int
    seed: int
    rho: Optional[float]
    reports: Dict[str, EstimateReport] = field(default_factory=dict)
    identity_errors: Dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> Dict:
        return {
            "n": self.n,
            "samples": self.samples,
            "seed": self.seed,
            "rho": self.rho,
            "reports": {k: v.as_dict() for k, v in sorted(self.reports.items())},
            "identity_errors": dict(sorted(self.identity_errors.items())),
        }


def _merge(reports: Sequence[EstimateReport]) -> EstimateReport:
    """Combine chunk reports, keeping the chunk whose witness has the smallest slack."""
    worst = min(reports, key=lambda r: r.slack if r.rhs == 0 else r.slack / abs(r.rhs))
    ratios = [r.max_ratio for r in reports if not math.isnan(r.max_ratio)]
    return EstimateReport(
        lhs=worst.lhs, rhs=worst.rhs, slack=worst.slack,
        satisfied=all(r.satisfied for r in reports), strict=worst.strict,
        count=sum(r.count for r in reports), violations=sum(r.violations for r in reports),
        max_ratio=max(ratios) if ratios else float("nan"), witness=worst.witness,
    )


def sample_suite(n: int, samples: int, seed: int, rho: Optional[float] = None,
                 tolerance: float = 1e-12, chunk: int = SAMPLE_CHUNK) -> SampleSuite:
    """Random batch tests of the sharp estimate, the T/U/V identity, the cubic bound and f(theta).

    Samples are drawn in chunks, each from its own stream spawned off
    ``np.random.SeedSequence(seed)``, so the result depends only on
    (n, samples, seed, rho, chunk).

    Args:
        n: Dimension
        samples: Number of samples
        seed: Root seed
        rho: Fixed rho; None draws rho uniformly in [-5, 5] per sample
        tolerance: Relative slack tolerance
        chunk: Samples per stream

    Returns:
        SampleSuite: Per-inequality reports and maximal identity errors
    """
    n = check_dim(n)
    suite = SampleSuite(n=n, samples=samples, seed=seed, rho=rho)
    sharp, cubic, theta = [], [], []
    errors = {"tuv_norm_identity": 0.0, "tuv_middle_identity": 0.0, "combined_norm_identity": 0.0}
    sizes = [min(chunk, samples - start) for start in range(0, samples, chunk)]
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    for size, stream in zip(sizes, streams):
        rng = np.random.default_rng(stream)
        w = random_weyl(rng, n, size)
        ric0 = random_tracefree(rng, n, size)
        rhos = rng.uniform(-5.0, 5.0, size) if rho is None else np.full(size, float(rho))
        thetas = rng.uniform(-50.0, 50.0, size)

        lhs, rhs, combined_err = _sharp_sides(w, ric0, rhos)
        sharp.append(EstimateReport.from_arrays(lhs, rhs, tolerance=tolerance, relative=True))
        errors["combined_norm_identity"] = max(errors["combined_norm_identity"], float(combined_err.max()))

        first, middle, closed = tuv_decompose(ric0).norm_identity()
        denom = np.maximum(np.abs(closed), 1e-300)
        errors["tuv_norm_identity"] = max(errors["tuv_norm_identity"],
                                          float(np.max(np.abs(first - closed) / denom)))
        errors["tuv_middle_identity"] = max(errors["tuv_middle_identity"],
                                            float(np.max(np.abs(middle - closed) / denom)))

        cubic.append(cubic_bound_check(w, tolerance))
        f = (thetas ** 2 - thetas + 1.0) / (thetas - 1.0) ** 2
        theta.append(EstimateReport.from_arrays(np.full(size, THETA_MIN_VALUE), f,
                                                tolerance=tolerance, relative=True))
    suite.reports = {"sharp_estimate": _merge(sharp), "cubic_bound": _merge(cubic),
                     "theta_coefficient": _merge(theta)}
    suite.identity_errors = errors
    logger.info("Sampled %d tensors in dimension %d (seed %d)", samples, n, seed)
    return suite
