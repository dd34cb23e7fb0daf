"""Run configuration: spec files, environment defaults and CLI overrides.

Precedence is command-line flag, then spec file, then ``PINCHCHECK_*``
environment variables (a ``.env`` file is read through python-dotenv), then
built-in defaults.
"""
import argparse
import enum
import inspect
import logging
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

from dotenv import dotenv_values

from .base import DEFAULT_EXCISION_ANGLE, DEFAULT_ISOMETRY_RESOLUTION, GeometrySpec
from .errors import PinchcheckError, SpecParseError
from .factory import GeometryFactory

logger = logging.getLogger(__name__)

ENV_PREFIX = "PINCHCHECK_"
DEFAULT_RESOLUTIONS = (12,)
DEFAULT_STENCIL_ORDER = 4
DEFAULT_SAMPLES = 10000
DEFAULT_SEED = 0
DEFAULT_DIMS = (4, 5, 6)
DEFAULT_THETAS = (-1.0, 0.5, 2.0)
SECTIONS = ("geometry", "grid", "yamabe", "tolerances")


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances shared by every command (all relative unless noted)."""
    identity: float = 1e-2
    margin: float = 0.0
    spd: float = 1e-10
    bach: float = 5e-2
    harmonic: float = 1e-6
    scalar_constancy: float = 1e-2
    einstein: float = 1e-2
    estimate: float = 1e-12
    excision: float = 0.95

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "margin":
                if value < 0:
                    raise ValueError(f"Tolerance 'margin' must be >= 0; got {value}")
            elif not value > 0:
                raise ValueError(f"Tolerance '{f.name}' must be > 0; got {value}")
        if self.excision > 1.0:
            raise ValueError(f"Tolerance 'excision' is a volume fraction and must be <= 1; got {self.excision}")

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


class YamabeMode(str, enum.Enum):
    EXACT = "exact"
    TRIAL = "trial"
    USER = "user"


@dataclass(frozen=True)
class YamabeChoice:
    """Where the Yamabe value of a run comes from."""
    mode: YamabeMode = YamabeMode.EXACT
    value: Optional[float] = None

    @classmethod
    def parse(cls, text: str) -> "YamabeChoice":
        """Parse 'exact', 'trial' or 'user:V'."""
        head, _, tail = text.strip().partition(":")
        try:
            mode = YamabeMode(head.strip().lower())
        except ValueError:
            raise ValueError(f"Yamabe source must be exact, trial or user:V; got '{text}'") from None
        if mode is YamabeMode.USER:
            if not tail:
                raise ValueError("A user Yamabe source needs a value, as in user:50.27")
            return cls(mode, float(tail))
        if tail:
            raise ValueError(f"Yamabe source '{head}' takes no value; got '{text}'")
        return cls(mode)

    def as_dict(self) -> Dict[str, Any]:
        return {"mode": self.mode.value, "value": self.value}


def parse_int_list(text: str) -> Tuple[int, ...]:
    values = tuple(int(v) for v in str(text).split(",") if v.strip())
    if not values:
        raise ValueError("expected a comma-separated list of integers")
    return values


def parse_float_list(text: str) -> Tuple[float, ...]:
    values = tuple(float(v) for v in str(text).split(",") if v.strip())
    if not values:
        raise ValueError("expected a comma-separated list of numbers")
    return values


def parse_resolutions(text: str) -> Tuple[int, ...]:
    """Resolution ladder: positive and strictly ascending."""
    values = parse_int_list(text)
    if any(v <= 0 for v in values):
        raise ValueError(f"resolutions must be positive; got {text}")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError(f"resolutions must be strictly ascending; got {text}")
    return values


GEOMETRY_PARAMS: Dict[str, Callable[[str], Any]] = {
    "n": int,
    "p": int,
    "q": int,
    "seed": int,
    "mode_count": int,
    "radius": float,
    "r1": float,
    "r2": float,
    "amplitude": float,
    "periods": parse_float_list,
}

GRID_KEYS: Dict[str, Callable[[str], Any]] = {
    "resolution": parse_resolutions,
    "stencil_order": int,
    "excision_angle": float,
    "isometry_resolution": int,
}


def geometry_parameters(kind: str) -> List[str]:
    """Constructor parameters a geometry kind accepts in its spec section."""
    geometry_class = GeometryFactory.available_geometries()[kind]
    names = inspect.signature(geometry_class.__init__).parameters
    return [p for p in names if p not in ("self", "excision_angle", "isometry_resolution")]


@dataclass(frozen=True)
class SpecFile:
    """Parsed contents of a geometry spec file."""
    geometry: GeometrySpec
    resolutions: Optional[Tuple[int, ...]] = None
    stencil_order: Optional[int] = None
    yamabe: Optional[YamabeChoice] = None
    tolerances: Dict[str, float] = field(default_factory=dict)


def _convert(parser: Callable[[str], Any], value: str, line: int, key: str) -> Any:
    try:
        return parser(value)
    except ValueError as e:
        raise SpecParseError(f"invalid value '{value}': {e}", line, key) from None


def parse_spec_text(text: str) -> SpecFile:
    """
    Parse the line-oriented spec format.

    Args:
        text: Spec file contents

    Returns:
        SpecFile: Geometry plus optional grid, Yamabe and tolerance overrides

    Raises:
        SpecParseError: Naming the line and key of the first problem
    """
    section = None
    entries: Dict[str, Dict[str, Tuple[str, int]]] = {s: {} for s in SECTIONS}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise SpecParseError("section header must end with ']'", number, line)
            section = line[1:-1].strip().lower()
            if section not in SECTIONS:
                raise SpecParseError(f"unknown section; expected one of {', '.join(SECTIONS)}", number, section)
            continue
        if "=" not in line:
            raise SpecParseError("expected 'key = value'", number, line)
        key, value = (part.strip() for part in line.split("=", 1))
        if section is None:
            raise SpecParseError("key appears before any section header", number, key)
        if not key or not value:
            raise SpecParseError("empty key or value", number, key or line)
        if key in entries[section]:
            raise SpecParseError(f"duplicate key in [{section}]", number, key)
        entries[section][key] = (value, number)

    geo = entries["geometry"]
    if "kind" not in geo:
        raise SpecParseError("[geometry] needs a 'kind'", None, "kind")
    kind, kind_line = geo.pop("kind")
    kind = kind.lower()
    if kind not in GeometryFactory.available_geometries():
        available = ", ".join(sorted(GeometryFactory.available_geometries()))
        raise SpecParseError(f"unknown geometry kind; available kinds: {available}", kind_line, "kind")
    allowed = geometry_parameters(kind)
    params = {}
    for key, (value, number) in geo.items():
        if key not in allowed or key not in GEOMETRY_PARAMS:
            raise SpecParseError(f"unknown parameter for {kind}; expected one of {', '.join(allowed)}",
                                 number, key)
        params[key] = _convert(GEOMETRY_PARAMS[key], value, number, key)

    grid = {}
    for key, (value, number) in entries["grid"].items():
        if key not in GRID_KEYS:
            raise SpecParseError(f"unknown grid key; expected one of {', '.join(GRID_KEYS)}", number, key)
        grid[key] = _convert(GRID_KEYS[key], value, number, key)

    yamabe = None
    ysec = entries["yamabe"]
    for key, (_, number) in ysec.items():
        if key not in ("source", "value"):
            raise SpecParseError("unknown yamabe key; expected source or value", number, key)
    if "source" in ysec:
        source, number = ysec["source"]
        text_value = source if "value" not in ysec else f"{source}:{ysec['value'][0]}"
        yamabe = _convert(YamabeChoice.parse, text_value, number, "source")
    elif "value" in ysec:
        raise SpecParseError("a Yamabe value needs 'source = user'", ysec["value"][1], "value")

    known = {f.name for f in fields(Tolerances)}
    tolerances = {}
    for key, (value, number) in entries["tolerances"].items():
        if key not in known:
            raise SpecParseError(f"unknown tolerance; expected one of {', '.join(sorted(known))}", number, key)
        tolerances[key] = _convert(float, value, number, key)

    resolutions = grid.get("resolution")
    spec = GeometrySpec(
        kind=kind,
        params=params,
        resolution=(resolutions[-1],) if resolutions else (12,),
        excision_angle=grid.get("excision_angle", DEFAULT_EXCISION_ANGLE),
        isometry_resolution=grid.get("isometry_resolution", DEFAULT_ISOMETRY_RESOLUTION),
    )
    try:
        GeometryFactory.from_spec(spec)
    except PinchcheckError as e:
        raise SpecParseError(f"invalid geometry: {e}", kind_line, "kind") from None
    return SpecFile(spec, resolutions, grid.get("stencil_order"), yamabe, tolerances)


def parse_spec_file(path: Path) -> SpecFile:
    """Read and parse a spec file; a missing file is a parse error too."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise SpecParseError(f"cannot read spec file {path}: {e}") from None
    logger.debug("Parsing spec file %s", path)
    return parse_spec_text(text)


def load_environment(env_file: Optional[str] = ".env", enabled: bool = True) -> Dict[str, str]:
    """
    Collect ``PINCHCHECK_*`` settings from a .env file and the process environment.

    Process variables win over the file, as with ``load_dotenv(override=False)``.
    """
    env: Dict[str, str] = {}
    if enabled and env_file and Path(env_file).exists():
        env.update({k: v for k, v in dotenv_values(env_file).items() if v is not None})
        logger.info("Loaded environment variables from %s", env_file)
    env.update(os.environ)
    return {k: v for k, v in env.items() if k.startswith(ENV_PREFIX)}


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs; echoed into the report provenance."""
    command: str
    spec_path: Optional[str] = None
    geometry: Optional[GeometrySpec] = None
    stencil_order: int = DEFAULT_STENCIL_ORDER
    resolutions: Tuple[int, ...] = DEFAULT_RESOLUTIONS
    tolerances: Tolerances = field(default_factory=Tolerances)
    samples: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED
    dims: Tuple[int, ...] = DEFAULT_DIMS
    rho: Optional[float] = None
    thetas: Tuple[float, ...] = DEFAULT_THETAS
    yamabe: YamabeChoice = field(default_factory=YamabeChoice)
    out: Optional[str] = None

    def __post_init__(self):
        if self.stencil_order not in (2, 4):
            raise ValueError(f"Stencil order must be 2 or 4; got {self.stencil_order}")
        if not self.resolutions or any(b <= a for a, b in zip(self.resolutions, self.resolutions[1:])):
            raise ValueError(f"Resolutions must be a non-empty ascending list; got {self.resolutions}")
        if self.samples < 1:
            raise ValueError(f"Sample count must be >= 1; got {self.samples}")

    def geometry_at(self, resolution: int) -> GeometrySpec:
        if self.geometry is None:
            raise ValueError(f"Command '{self.command}' needs a geometry spec (--spec PATH)")
        return replace(self.geometry, resolution=(resolution,))

    def as_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "spec_path": self.spec_path,
            "geometry": self.geometry.as_dict() if self.geometry else None,
            "stencil_order": self.stencil_order,
            "resolutions": list(self.resolutions),
            "tolerances": self.tolerances.as_dict(),
            "samples": self.samples,
            "seed": self.seed,
            "dims": list(self.dims),
            "rho": self.rho,
            "thetas": list(self.thetas),
            "yamabe": self.yamabe.as_dict(),
        }


def _pick(flag: Any, spec_value: Any, env: Mapping[str, str], name: str,
          parser: Callable[[str], Any], default: Any) -> Any:
    if flag is not None:
        return flag
    if spec_value is not None:
        return spec_value
    raw = env.get(ENV_PREFIX + name)
    if raw is not None and raw.strip():
        try:
            return parser(raw)
        except ValueError as e:
            raise ValueError(f"Environment variable {ENV_PREFIX}{name}: {e}") from None
    return default


def build_run_config(args: argparse.Namespace, env: Mapping[str, str]) -> RunConfig:
    """
    Merge CLI flags, the spec file and environment defaults into a RunConfig.

    Raises:
        SpecParseError: If the spec file is malformed
        ValueError: If a flag or environment value is invalid
    """
    spec = parse_spec_file(Path(args.spec)) if getattr(args, "spec", None) else None
    overrides = dict(spec.tolerances) if spec else {}
    for name, flag, env_name in (("identity", getattr(args, "tolerance", None), "TOLERANCE"),
                                 ("margin", getattr(args, "margin", None), "MARGIN")):
        value = _pick(flag, overrides.get(name), env, env_name, float, None)
        if value is not None:
            overrides[name] = value
    tolerances = Tolerances(**overrides)
    return RunConfig(
        command=args.command,
        spec_path=str(args.spec) if getattr(args, "spec", None) else None,
        geometry=spec.geometry if spec else None,
        stencil_order=_pick(getattr(args, "stencil_order", None), spec.stencil_order if spec else None,
                            env, "STENCIL_ORDER", int, DEFAULT_STENCIL_ORDER),
        resolutions=_pick(getattr(args, "resolution", None), spec.resolutions if spec else None,
                          env, "RESOLUTION", parse_resolutions, DEFAULT_RESOLUTIONS),
        tolerances=tolerances,
        samples=_pick(getattr(args, "samples", None), None, env, "SAMPLES", int, DEFAULT_SAMPLES),
        seed=_pick(getattr(args, "seed", None), None, env, "SEED", int, DEFAULT_SEED),
        dims=_pick(getattr(args, "dim", None), None, env, "DIMS", parse_int_list, DEFAULT_DIMS),
        rho=getattr(args, "rho", None),
        thetas=_pick(getattr(args, "theta", None), None, env, "THETAS", parse_float_list, DEFAULT_THETAS),
        yamabe=_pick(getattr(args, "yamabe", None), spec.yamabe if spec else None,
                     env, "YAMABE", YamabeChoice.parse, YamabeChoice()),
        out=getattr(args, "out", None),
    )
