"""Structured run reports with provenance, written as deterministic JSON."""
import enum
import json
import math
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

SCHEMA_VERSION = "1.0"


class CheckRef(str, enum.Enum):
    """Closed set of tags naming the statement each record evaluates."""
    CURVATURE_SUMMARY = "curvature-summary"
    CURVATURE_SYMMETRIES = "curvature-symmetries"
    ORACLE_COMPARISON = "oracle-comparison"
    ORACLE_CONVERGENCE = "oracle-convergence"
    POINTWISE_PINCHING = "pointwise-weyl-ricci-pinching"
    EINSTEIN_PINCHING = "einstein-theta-pinching"
    PINCHING_CHAIN = "pointwise-pinching-chain"
    BACH_FLAT_PINCHING = "integral-pinching-bach-flat"
    HARMONIC_PINCHING = "integral-pinching-harmonic"
    FOUR_DIM_CONDITIONS = "four-dimensional-integral-conditions"
    THETA_IDENTITY = "theta-tensor-identity"
    INTEGRATION_BY_PARTS = "ricci-identity-integration"
    RICCI_GRADIENT_INEQUALITY = "traceless-ricci-gradient-inequality"
    BACH_FLAT_IDENTITY = "bach-flat-gradient-identity"
    BACH_CROSS_CHECK = "bach-weyl-divergence-cross-check"
    WEYL_LAPLACIAN = "einstein-weyl-laplacian"
    REFINED_KATO = "refined-kato"
    CONTRACTED_BIANCHI = "contracted-bianchi"
    CODAZZI = "codazzi-residual"
    CURVATURE_DECOMPOSITION = "curvature-decomposition"
    GAUSS_BONNET = "chern-gauss-bonnet"
    YAMABE_SOBOLEV = "yamabe-sobolev"
    YAMABE_COMBINATION = "einstein-yamabe-combination"
    EINSTEIN_WEYL_INTEGRAL = "einstein-weyl-integral"
    SHARP_ESTIMATE = "sharp-weyl-ricci-estimate"
    TUV_IDENTITY = "tuv-norm-identity"
    CUBIC_BOUND = "cubic-weyl-bound"
    THETA_COEFFICIENT = "theta-coefficient"
    CONSTANTS = "pinching-constants"


class Status(str, enum.Enum):
    SATISFIED = "satisfied"
    VIOLATED = "violated"
    NOT_APPLICABLE = "not-applicable"
    INFORMATIONAL = "informational"


def to_jsonable(value: Any) -> Any:
    """Recursively convert numpy scalars/arrays, enums and non-finite floats (-> None)."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


@dataclass
class CheckRecord:
    """Outcome of one check.

    ``gating`` records decide the exit code; the rest are reported only.
    """
    name: str
    ref: CheckRef
    status: Status
    gating: bool = True
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    slack: Optional[float] = None
    residuals: Dict[str, Any] = field(default_factory=dict)
    orders: Dict[str, Any] = field(default_factory=dict)
    details: Dict[str, Any] = field(default_factory=dict)
    reason: Optional[str] = None

    def __post_init__(self):
        self.ref = CheckRef(self.ref)
        self.status = Status(self.status)

    @property
    def satisfied(self) -> Optional[bool]:
        if self.status is Status.SATISFIED:
            return True
        if self.status is Status.VIOLATED:
            return False
        return None

    @property
    def failed(self) -> bool:
        return self.gating and self.status is Status.VIOLATED

    def as_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "ref": self.ref.value,
            "status": self.status.value,
            "satisfied": self.satisfied,
            "gating": self.gating,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "residuals": self.residuals,
            "orders": self.orders,
            "details": self.details,
            "reason": self.reason,
        }


def _get_system_info() -> Dict[str, str]:
    """
    Get system information for provenance tracking.

    Returns:
        Dict[str, str]: Platform and library versions (no host or time fields)
    """
    import scipy

    from . import __version__

    return {
        "os": platform.system(),
        "python_version": platform.python_version(),
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "pinchcheck_version": __version__,
    }


@dataclass
class RunProvenance:
    """Information about the run for reproducibility."""
    config: Dict[str, Any]
    seed: Optional[int] = None
    system: Dict[str, str] = field(default_factory=_get_system_info)

    def as_dict(self) -> Dict[str, Any]:
        return {"config": self.config, "seed": self.seed, "system": self.system}


@dataclass
class Report:
    """All records of one command run."""
    command: str
    provenance: RunProvenance
    records: List[CheckRecord] = field(default_factory=list)

    def add(self, record: CheckRecord) -> CheckRecord:
        self.records.append(record)
        return record

    def find(self, name: str) -> CheckRecord:
        for record in self.records:
            if record.name == name:
                return record
        raise KeyError(name)

    @property
    def failed(self) -> List[CheckRecord]:
        return [r for r in self.records if r.failed]

    def summary(self) -> Dict[str, int]:
        counts = {s.value: 0 for s in Status}
        for record in self.records:
            counts[record.status.value] += 1
        return counts

    def as_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "provenance": self.provenance.as_dict(),
            "records": [r.as_dict() for r in self.records],
            "summary": self.summary(),
        }

    def to_json(self) -> str:
        return json.dumps(to_jsonable(self.as_dict()), sort_keys=True, indent=2, allow_nan=False) + "\n"

    def save(self, path: Path) -> Path:
        path = Path(path)
        path.write_text(self.to_json(), encoding="utf-8")
        return path
