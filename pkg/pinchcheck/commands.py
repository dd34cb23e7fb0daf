"""The analyze, check, verify, sample and constants commands."""
import logging
import math
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .algebraic_estimates import (
    EstimateReport,
    cubic_constant,
    einstein_pinching_condition,
    einstein_weyl_laplacian_residual,
    pointwise_pinching_thm11,
    remark1_chain,
    sample_suite,
    theta_minimize,
    THETA_MIN,
    THETA_MIN_VALUE,
)
from .base import Geometry
from .chart_geometry import DEPTH, bach_from_weyl_divergence, codazzi_residual
from .config import RunConfig, YamabeMode
from .errors import DimensionError, PreconditionError
from .factory import GeometryFactory
from .integral_verifier import (
    CurvatureContext,
    IdentityResidual,
    TrialFunction,
    YamabeEstimate,
    YamabeSource,
    bianchi_residual,
    curvature_decomposition_residual,
    constants_table,
    corollary21_conditions,
    einstein_constant_check,
    einstein_weyl_integral,
    excision_fraction,
    gauss_bonnet_4d,
    integration_by_parts_residual,
    kato,
    lemma21_residual,
    lemma21_ricci_inequality,
    lemma22_residual,
    lemma24_combination,
    sobolev_check,
    thm12_hypothesis,
    thm13_hypothesis,
    volume,
    yamabe_quotient,
)
from .oracle import empirical_orders, oracle_compare, oracle_convergence
from .report import CheckRecord, CheckRef, Report, RunProvenance, Status
from .tensor_core import MAX_DIM, MIN_DIM, Alg4, Sym2, Symmetry

logger = logging.getLogger(__name__)

SAMPLE_IDENTITY_TOLERANCE = 1e-10
THETA_LOCATION_TOLERANCE = 1e-6
THETA_VALUE_TOLERANCE = 1e-10

# refusals that turn a record into "not-applicable"
REFUSALS = (PreconditionError, DimensionError)


def _status(satisfied: bool) -> Status:
    return Status.SATISFIED if satisfied else Status.VIOLATED


def estimate_record(name: str, ref: CheckRef, report: EstimateReport, gating: bool = True,
                    details: Optional[Dict] = None) -> CheckRecord:
    status = _status(report.satisfied) if gating else Status.INFORMATIONAL
    return CheckRecord(name, ref, status, gating=gating, lhs=report.lhs, rhs=report.rhs, slack=report.slack,
                       details={"report": report.as_dict(), **(details or {})})


def not_applicable(name: str, ref: CheckRef, error: Exception, gating: bool = True) -> CheckRecord:
    details = {}
    if isinstance(error, PreconditionError):
        details = {"measured": error.measured, "threshold": error.threshold}
    logger.info("Check '%s' not applicable: %s", name, error)
    return CheckRecord(name, ref, Status.NOT_APPLICABLE, gating=gating, details=details, reason=str(error))


def guarded(report: Report, name: str, ref: CheckRef, build: Callable[[], List[CheckRecord]],
            gating: bool = True) -> None:
    """Add the records produced by ``build``, or a not-applicable record if it refuses."""
    try:
        records = build()
    except REFUSALS as e:
        report.add(not_applicable(name, ref, e, gating))
        return
    for record in records:
        report.add(record)


def new_report(config: RunConfig, seed: Optional[int] = None) -> Report:
    return Report(config.command, RunProvenance(config.as_dict(), seed))


def build_context(config: RunConfig, resolution: int) -> Tuple[Geometry, CurvatureContext]:
    """Sample the configured geometry and compute its curvature."""
    spec = config.geometry_at(resolution)
    geometry = GeometryFactory.from_spec(spec)
    m = geometry.build(spec.resolution, config.tolerances.spd)
    ctx = CurvatureContext.from_metric(
        m, config.stencil_order,
        einstein=True if geometry.einstein else None,
        parallel_ricci=True if geometry.parallel_ricci else None,
        max_excision=config.tolerances.excision,
    )
    return geometry, ctx


def resolve_yamabe(config: RunConfig, geometry: Geometry, ctx: CurvatureContext) -> YamabeEstimate:
    """
    Yamabe value of the run according to ``config.yamabe``.

    Raises:
        PreconditionError: If an exact value is requested but none is known
    """
    choice = config.yamabe
    if choice.mode is YamabeMode.USER:
        return YamabeEstimate(float(choice.value), YamabeSource.USER)
    if choice.mode is YamabeMode.EXACT:
        value = geometry.exact_yamabe()
        if value is None:
            raise PreconditionError(
                f"No exact Yamabe value is known for '{geometry.name}'; use --yamabe trial or --yamabe user:V")
        return YamabeEstimate(value, YamabeSource.EXACT)
    logger.warning("Using the constant trial function: the Yamabe value is an upper bound only")
    return YamabeEstimate(yamabe_quotient(ctx, TrialFunction.constant(ctx.metric)), YamabeSource.TRIAL)


def _masked_max(values: np.ndarray, mask: np.ndarray) -> float:
    picked = np.abs(values[mask])
    return float(picked.max()) if picked.size else float("nan")


def _identity_floor(ctx: CurvatureContext, power: int, tolerance: float) -> float:
    """Absolute residual treated as zero: tolerance^2 R_max^power Vol."""
    return tolerance ** 2 * ctx.scalar_scale ** power * volume(ctx.metric, ctx.max_excision)


def cmd_analyze(config: RunConfig) -> Report:
    """Curvature summary at the finest resolution, plus oracle errors and orders when available."""
    report = new_report(config)
    geometry, ctx = build_context(config, config.resolutions[-1])
    b, f, chart = ctx.bundle, ctx.frame, ctx.metric.chart
    mask2 = b.mask("weyl")
    report.add(CheckRecord(
        "curvature_summary", CheckRef.CURVATURE_SUMMARY, Status.INFORMATIONAL, gating=False,
        details={
            "geometry": geometry.describe(),
            "grid": list(chart.shape),
            "spacing": list(chart.spacing),
            "max_weyl": _masked_max(f.weyl_norm, mask2),
            "max_traceless_ricci": _masked_max(f.traceless_ricci_norm, mask2),
            "max_bach": ctx.bach_residual(),
            "scalar_min": float(np.min(b.scalar[mask2])),
            "scalar_max": float(np.max(b.scalar[mask2])),
            "excision_fraction": excision_fraction(ctx.metric, DEPTH["weyl"], ctx.order),
        }))
    report.add(CheckRecord("curvature_symmetries", CheckRef.CURVATURE_SYMMETRIES, Status.INFORMATIONAL,
                           gating=False, residuals=dict(b.residuals)))
    oracle = geometry.oracle()
    if oracle is not None:
        comparison = oracle_compare(b, ctx.metric, oracle, geometry.characteristic_spacing(chart))
        report.add(CheckRecord("oracle_comparison", CheckRef.ORACLE_COMPARISON, Status.INFORMATIONAL,
                               gating=False, residuals=comparison.errors,
                               details={"spacing": comparison.spacing}))
        if len(config.resolutions) > 1:
            ladder = oracle_convergence(geometry, config.resolutions, config.stencil_order, config.tolerances.spd)
            report.add(CheckRecord("oracle_convergence", CheckRef.ORACLE_CONVERGENCE, Status.INFORMATIONAL,
                                   gating=False, orders=ladder.orders(), details=ladder.as_dict()))
    return report


def cmd_check(config: RunConfig) -> Report:
    """Evaluate the pointwise and integral pinching hypotheses on the configured geometry."""
    report = new_report(config)
    geometry, ctx = build_context(config, config.resolutions[-1])
    tol = config.tolerances
    f = ctx.frame
    mask = ctx.retained("weyl")
    locations = np.argwhere(mask)
    w = Alg4(f.weyl.values[mask], Symmetry.weyl())
    ric0 = Sym2(f.traceless_ricci.values[mask])
    scalar = ctx.bundle.scalar[mask]

    try:
        y: Optional[YamabeEstimate] = resolve_yamabe(config, geometry, ctx)
        y_error: Optional[PreconditionError] = None
    except PreconditionError as e:
        y, y_error = None, e
    y_details = {"yamabe": y.as_dict()} if y else {}

    guarded(report, "pointwise_pinching", CheckRef.POINTWISE_PINCHING, lambda: [estimate_record(
        "pointwise_pinching", CheckRef.POINTWISE_PINCHING,
        pointwise_pinching_thm11(w, ric0, scalar, tol.margin, locations))])
    guarded(report, "einstein_pinching", CheckRef.EINSTEIN_PINCHING, lambda: [estimate_record(
        "einstein_pinching", CheckRef.EINSTEIN_PINCHING,
        einstein_pinching_condition(w, ric0, scalar, THETA_MIN, tol.margin, locations), gating=False)],
        gating=False)

    def chain() -> List[CheckRecord]:
        result = remark1_chain(w, ric0, scalar, locations)
        return [CheckRecord("pinching_chain", CheckRef.PINCHING_CHAIN, Status.INFORMATIONAL, gating=False,
                            details=result.as_dict())]

    guarded(report, "pinching_chain", CheckRef.PINCHING_CHAIN, chain, gating=False)

    def needs_yamabe() -> YamabeEstimate:
        if y is None:
            raise y_error
        return y

    guarded(report, "integral_pinching_bach_flat", CheckRef.BACH_FLAT_PINCHING, lambda: [estimate_record(
        "integral_pinching_bach_flat", CheckRef.BACH_FLAT_PINCHING,
        thm12_hypothesis(ctx, needs_yamabe(), tol.margin, tol.bach, tol.scalar_constancy), details=y_details)])
    guarded(report, "integral_pinching_harmonic", CheckRef.HARMONIC_PINCHING, lambda: [estimate_record(
        "integral_pinching_harmonic", CheckRef.HARMONIC_PINCHING,
        thm13_hypothesis(ctx, needs_yamabe(), tol.margin, tol.harmonic), details=y_details)])

    def four_dimensional() -> List[CheckRecord]:
        conditions = corollary21_conditions(ctx, y, tol.margin)
        extra = {"chi_estimate": conditions.chi_estimate, "forms_agree": conditions.forms_agree}
        out = []
        for key, result in sorted(conditions.records.items()):
            gating = key in ("bach_flat", "harmonic")
            out.append(estimate_record(f"four_dimensional_{key}", CheckRef.FOUR_DIM_CONDITIONS, result,
                                       gating=gating, details=extra))
        return out

    guarded(report, "four_dimensional_conditions", CheckRef.FOUR_DIM_CONDITIONS, four_dimensional)
    return report


def _ladder_record(name: str, ref: CheckRef, rungs: List[IdentityResidual], spacings: List[float],
                   rtol: float, atol: float, gating: bool = True) -> CheckRecord:
    finest = rungs[-1]
    passed = finest.passed(rtol, atol)
    return CheckRecord(
        name, ref, _status(passed) if gating else Status.INFORMATIONAL, gating=gating,
        lhs=finest.lhs, rhs=finest.rhs, slack=None,
        residuals={"abs": [r.abs_residual for r in rungs], "rel": [r.rel_residual for r in rungs],
                   "atol": atol, "rtol": rtol},
        orders={"abs": empirical_orders([r.abs_residual for r in rungs], spacings)},
        details={"spacings": spacings},
    )


def _pointwise_record(name: str, ref: CheckRef, values: List[float], spacings: List[float]) -> CheckRecord:
    return CheckRecord(name, ref, Status.INFORMATIONAL, gating=False,
                       residuals={"max": values}, orders={"max": empirical_orders(values, spacings)},
                       details={"spacings": spacings})


def cmd_verify(config: RunConfig) -> Report:
    """Integral identities and pointwise residuals across the resolution ladder."""
    report = new_report(config)
    tol = config.tolerances
    spacings: List[float] = []
    identities: Dict[str, List[IdentityResidual]] = {}
    pointwise: Dict[str, List[float]] = {}
    refused: Dict[str, Exception] = {}
    floors: Dict[str, float] = {}
    ctx = geometry = None

    def collect(key: str, compute: Callable, store: Dict) -> None:
        if key in refused:
            return
        try:
            store.setdefault(key, []).append(compute())
        except REFUSALS as e:
            refused[key] = e
            store.pop(key, None)

    for res in config.resolutions:
        geometry, ctx = build_context(config, res)
        spacings.append(geometry.characteristic_spacing(ctx.metric.chart))
        ric = ctx.bundle.ricci
        for theta in config.thetas:
            collect(f"theta_identity[{theta:g}]", lambda: lemma21_residual(ctx, ric, theta, DEPTH["ricci"]),
                    identities)
        collect("integration_by_parts", lambda: integration_by_parts_residual(ctx, ric, DEPTH["ricci"]),
                identities)
        collect("bach_flat_identity", lambda: lemma22_residual(ctx, tol.bach), identities)
        collect("gauss_bonnet_rearrangement", lambda: gauss_bonnet_4d(ctx).rearrangement, identities)
        collect("contracted_bianchi", lambda: bianchi_residual(ctx), pointwise)
        collect("codazzi", lambda: codazzi_residual(ctx.bundle), pointwise)
        collect("curvature_decomposition", lambda: curvature_decomposition_residual(ctx), pointwise)
        collect("weyl_laplacian", lambda: einstein_weyl_laplacian_residual(ctx.bundle, ctx.metric, tol.einstein),
                pointwise)
        collect("bach_cross_check", lambda: _masked_max(
            bach_from_weyl_divergence(ctx.bundle, ctx.metric).values - ctx.bundle.bach.values,
            ctx.retained("bach")), pointwise)
        floors = {"power3": _identity_floor(ctx, 3, tol.identity), "power2": _identity_floor(ctx, 2, tol.identity)}
        logger.info("Verification rung %s finished", ctx.metric.chart.shape)

    refs = {"integration_by_parts": CheckRef.INTEGRATION_BY_PARTS, "bach_flat_identity": CheckRef.BACH_FLAT_IDENTITY,
            "gauss_bonnet_rearrangement": CheckRef.GAUSS_BONNET, "contracted_bianchi": CheckRef.CONTRACTED_BIANCHI,
            "codazzi": CheckRef.CODAZZI, "curvature_decomposition": CheckRef.CURVATURE_DECOMPOSITION,
            "weyl_laplacian": CheckRef.WEYL_LAPLACIAN,
            "bach_cross_check": CheckRef.BACH_CROSS_CHECK}
    for key, rungs in identities.items():
        ref = refs.get(key, CheckRef.THETA_IDENTITY)
        atol = floors["power2"] if key == "gauss_bonnet_rearrangement" else floors["power3"]
        report.add(_ladder_record(key, ref, rungs, spacings, tol.identity, atol))
    for key, values in pointwise.items():
        report.add(_pointwise_record(key, refs[key], values, spacings))
    for key, error in sorted(refused.items()):
        gating = key not in ("contracted_bianchi", "codazzi", "curvature_decomposition", "weyl_laplacian",
                             "bach_cross_check")
        report.add(not_applicable(key, refs.get(key, CheckRef.THETA_IDENTITY), error, gating))

    # finest rung only
    def gauss_bonnet() -> List[CheckRecord]:
        gb = gauss_bonnet_4d(ctx)
        expected = geometry.euler_characteristic
        ok = expected is None or gb.euler_characteristic == expected
        return [CheckRecord("gauss_bonnet", CheckRef.GAUSS_BONNET, _status(ok),
                            details={**gb.as_dict(), "expected": expected})]

    guarded(report, "gauss_bonnet", CheckRef.GAUSS_BONNET, gauss_bonnet)

    def ricci_inequality() -> List[CheckRecord]:
        return [estimate_record(f"ricci_gradient_inequality[{theta:g}]", CheckRef.RICCI_GRADIENT_INEQUALITY, r)
                for theta, r in lemma21_ricci_inequality(ctx, config.thetas, tol.identity)]

    guarded(report, "ricci_gradient_inequality", CheckRef.RICCI_GRADIENT_INEQUALITY, ricci_inequality)

    def kato_records() -> List[CheckRecord]:
        out = []
        for check in kato(ctx, tol.einstein, tol.harmonic, tol.identity):
            if check.applicable:
                out.append(estimate_record(f"kato_{check.name}", CheckRef.REFINED_KATO, check.report,
                                           details={"hypothesis_residual": check.hypothesis_residual}))
            else:
                out.append(CheckRecord(f"kato_{check.name}", CheckRef.REFINED_KATO, Status.NOT_APPLICABLE,
                                       gating=False, details=check.as_dict(),
                                       reason=f"hypothesis residual {check.hypothesis_residual:.3e}"))
        return out

    guarded(report, "kato", CheckRef.REFINED_KATO, kato_records)

    def yamabe_records() -> List[CheckRecord]:
        y = resolve_yamabe(config, geometry, ctx)
        u = TrialFunction.constant(ctx.metric)
        out = [estimate_record("yamabe_sobolev", CheckRef.YAMABE_SOBOLEV, sobolev_check(ctx, u, y, tol.identity),
                               details={"yamabe": y.as_dict()})]
        try:
            out.append(estimate_record("einstein_yamabe_combination", CheckRef.YAMABE_COMBINATION,
                                       lemma24_combination(ctx, y, tol.einstein, tol.identity), gating=False,
                                       details={"yamabe": y.as_dict()}))
        except REFUSALS as e:
            out.append(not_applicable("einstein_yamabe_combination", CheckRef.YAMABE_COMBINATION, e, False))
        return out

    guarded(report, "yamabe_sobolev", CheckRef.YAMABE_SOBOLEV, yamabe_records)

    def weyl_integral() -> List[CheckRecord]:
        return [estimate_record("einstein_weyl_integral", CheckRef.EINSTEIN_WEYL_INTEGRAL,
                                einstein_weyl_integral(ctx, tol.einstein), gating=False,
                                details={"constant_check": einstein_constant_check()})]

    guarded(report, "einstein_weyl_integral", CheckRef.EINSTEIN_WEYL_INTEGRAL, weyl_integral, gating=False)
    return report


def cmd_sample(config: RunConfig) -> Report:
    """Random algebraic batch tests, reproducible from the seed."""
    report = new_report(config, seed=config.seed)
    refs = {"sharp_estimate": CheckRef.SHARP_ESTIMATE, "cubic_bound": CheckRef.CUBIC_BOUND,
            "theta_coefficient": CheckRef.THETA_COEFFICIENT}
    for n in config.dims:
        suite = sample_suite(n, config.samples, config.seed, config.rho, config.tolerances.estimate)
        for key, result in sorted(suite.reports.items()):
            report.add(estimate_record(f"{key}_n{n}", refs[key], result,
                                       details={"n": n, "samples": suite.samples, "rho": suite.rho}))
        worst = max(suite.identity_errors.values())
        report.add(CheckRecord(f"tuv_identity_n{n}", CheckRef.TUV_IDENTITY,
                               _status(worst <= SAMPLE_IDENTITY_TOLERANCE),
                               residuals=dict(suite.identity_errors),
                               details={"n": n, "threshold": SAMPLE_IDENTITY_TOLERANCE}))
    theta, value = theta_minimize()
    ok = abs(theta - THETA_MIN) <= THETA_LOCATION_TOLERANCE and abs(value - THETA_MIN_VALUE) <= THETA_VALUE_TOLERANCE
    report.add(CheckRecord("theta_minimum", CheckRef.THETA_COEFFICIENT, _status(ok), lhs=value,
                           rhs=THETA_MIN_VALUE, details={"theta": theta, "expected_theta": THETA_MIN}))
    return report


def cmd_constants(config: RunConfig) -> Report:
    """C(n) and the pinching constants for n = 4..8 with their argmin selections."""
    report = new_report(config)
    for n in range(MIN_DIM, MAX_DIM + 1):
        table = constants_table(n)
        report.add(CheckRecord(f"constants_n{n}", CheckRef.CONSTANTS, _status(table.selection_matches),
                               details=table.as_dict()))
    report.add(CheckRecord("einstein_constant", CheckRef.EINSTEIN_WEYL_INTEGRAL,
                           _status(einstein_constant_check()),
                           lhs=4.0 * cubic_constant(4) / (3.0 * math.sqrt(12.0)), rhs=0.25))
    return report


COMMANDS: Dict[str, Callable[[RunConfig], Report]] = {
    "analyze": cmd_analyze,
    "check": cmd_check,
    "verify": cmd_verify,
    "sample": cmd_sample,
    "constants": cmd_constants,
}


def run_command(config: RunConfig) -> Report:
    try:
        command = COMMANDS[config.command]
    except KeyError:
        raise ValueError(f"Unknown command: {config.command}. Available commands: {', '.join(COMMANDS)}") from None
    logger.info("Running %s", config.command)
    return command(config)
