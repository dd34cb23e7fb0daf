"""Tests for spec parsing, configuration precedence and JSON reports."""
import json
import os
from unittest import mock

import numpy as np
import pytest

from pinchcheck.cli import parse_args
from pinchcheck.config import (
    DEFAULT_RESOLUTIONS,
    Tolerances,
    YamabeChoice,
    YamabeMode,
    build_run_config,
    load_environment,
    parse_resolutions,
    parse_spec_file,
    parse_spec_text,
)
from pinchcheck.errors import SpecParseError
from pinchcheck.report import CheckRecord, CheckRef, Report, RunProvenance, Status, to_jsonable

SPHERE_SPEC = """
# unit four-sphere
[geometry]
kind = round_sphere
n = 4
radius = 1.0

[grid]
resolution = 12,16
stencil_order = 4
excision_angle = 0.7

[yamabe]
source = user
value = 61.5

[tolerances]
identity = 0.05
"""


class TestSpecParsing:
    """Test the line-oriented spec format."""

    def test_full_spec(self):
        """Every section is parsed into the spec file."""
        spec = parse_spec_text(SPHERE_SPEC)
        assert spec.geometry.kind == "round_sphere"
        assert spec.geometry.params == {"n": 4, "radius": 1.0}
        assert spec.geometry.excision_angle == 0.7
        assert spec.geometry.resolution == (16,)
        assert spec.resolutions == (12, 16)
        assert spec.stencil_order == 4
        assert spec.yamabe == YamabeChoice(YamabeMode.USER, 61.5)
        assert spec.tolerances == {"identity": 0.05}

    def test_minimal_spec(self):
        """Only the geometry kind is required."""
        spec = parse_spec_text("[geometry]\nkind = Flat_Torus\n")
        assert spec.geometry.kind == "flat_torus"
        assert spec.resolutions is None
        assert spec.yamabe is None

    @pytest.mark.parametrize("text,line,key", [
        ("[geometry]\nkind = round_sphere\n[mesh]\n", 3, "mesh"),
        ("[geometry]\nkind = round_sphere\nkind = flat_torus\n", 3, "kind"),
        ("[geometry]\nn = 4\n", None, "kind"),
        ("[geometry]\nkind = klein_bottle\n", 2, "kind"),
        ("[geometry]\nkind = round_sphere\namplitude = 0.1\n", 3, "amplitude"),
        ("[geometry]\nkind = round_sphere\nn = four\n", 3, "n"),
        ("kind = round_sphere\n", 1, "kind"),
        ("[geometry]\nkind = round_sphere\n[grid]\nresolution = 16,12\n", 4, "resolution"),
        ("[geometry]\nkind = round_sphere\n[yamabe]\nvalue = 3.0\n", 4, "value"),
        ("[geometry]\nkind = round_sphere\n[tolerances]\nslack = 0.1\n", 4, "slack"),
        ("[geometry]\nkind = round_sphere\nradius = 0\n", 2, "kind"),
    ])
    def test_errors_name_line_and_key(self, text, line, key):
        """Malformed specs raise SpecParseError with the offending line and key."""
        with pytest.raises(SpecParseError) as excinfo:
            parse_spec_text(text)
        assert excinfo.value.line == line
        assert excinfo.value.key == key

    def test_exact_source_takes_no_value(self):
        """A value next to a non-user source is refused."""
        with pytest.raises(SpecParseError):
            parse_spec_text("[geometry]\nkind = round_sphere\n[yamabe]\nsource = exact\nvalue = 4\n")

    def test_missing_file(self, tmp_path):
        """A missing file is a parse error."""
        with pytest.raises(SpecParseError, match="cannot read"):
            parse_spec_file(tmp_path / "absent.spec")


class TestValueParsers:
    """Test the small value parsers."""

    def test_resolutions(self):
        """Resolution ladders are positive and strictly ascending."""
        assert parse_resolutions("8, 12,16") == (8, 12, 16)
        with pytest.raises(ValueError):
            parse_resolutions("12,12")
        with pytest.raises(ValueError):
            parse_resolutions("0")

    def test_yamabe_choice(self):
        """exact, trial and user:V are accepted."""
        assert YamabeChoice.parse("exact").mode is YamabeMode.EXACT
        assert YamabeChoice.parse("TRIAL").mode is YamabeMode.TRIAL
        assert YamabeChoice.parse("user:50.27") == YamabeChoice(YamabeMode.USER, 50.27)
        for bad in ("user", "exact:3", "guess"):
            with pytest.raises(ValueError):
                YamabeChoice.parse(bad)

    def test_tolerances(self):
        """Tolerances are positive and the excision fraction is at most one."""
        assert Tolerances().excision == 0.95
        with pytest.raises(ValueError):
            Tolerances(identity=0.0)
        with pytest.raises(ValueError):
            Tolerances(margin=-1.0)
        with pytest.raises(ValueError):
            Tolerances(excision=1.5)


class TestConfigPrecedence:
    """Test CLI > spec > environment > defaults."""

    def test_defaults(self):
        """Without spec or environment the defaults apply."""
        config = build_run_config(parse_args(["sample"]), {})
        assert config.resolutions == DEFAULT_RESOLUTIONS
        assert config.dims == (4, 5, 6)
        assert config.samples == 10000
        assert config.yamabe.mode is YamabeMode.EXACT

    def test_environment_over_defaults(self):
        """PINCHCHECK_* variables replace the defaults."""
        env = {"PINCHCHECK_SAMPLES": "250", "PINCHCHECK_DIMS": "4,7", "PINCHCHECK_TOLERANCE": "0.2"}
        config = build_run_config(parse_args(["sample"]), env)
        assert config.samples == 250
        assert config.dims == (4, 7)
        assert config.tolerances.identity == 0.2

    def test_spec_over_environment(self, spec_file):
        """Spec file values beat environment values."""
        path = spec_file(SPHERE_SPEC)
        env = {"PINCHCHECK_RESOLUTION": "8", "PINCHCHECK_TOLERANCE": "0.3", "PINCHCHECK_YAMABE": "trial"}
        config = build_run_config(parse_args(["check", "--spec", str(path)]), env)
        assert config.resolutions == (12, 16)
        assert config.tolerances.identity == 0.05
        assert config.yamabe.mode is YamabeMode.USER

    def test_cli_over_spec(self, spec_file):
        """Flags beat everything."""
        path = spec_file(SPHERE_SPEC)
        args = parse_args(["check", "--spec", str(path), "--resolution", "10,14", "--tolerance", "0.5",
                           "--yamabe", "exact", "--stencil-order", "2"])
        config = build_run_config(args, {"PINCHCHECK_STENCIL_ORDER": "4"})
        assert config.resolutions == (10, 14)
        assert config.tolerances.identity == 0.5
        assert config.yamabe.mode is YamabeMode.EXACT
        assert config.stencil_order == 2
        assert config.geometry_at(14).resolution == (14,)

    def test_bad_environment_value(self):
        """An unparsable environment value names the variable."""
        with pytest.raises(ValueError, match="PINCHCHECK_SEED"):
            build_run_config(parse_args(["sample"]), {"PINCHCHECK_SEED": "abc"})

    def test_geometry_required(self):
        """Geometry commands without a spec cannot resolve a grid."""
        config = build_run_config(parse_args(["check"]), {})
        with pytest.raises(ValueError, match="--spec"):
            config.geometry_at(12)


class TestLoadEnvironment:
    """Test .env loading through python-dotenv."""

    def test_env_file_and_process_environment(self, tmp_path):
        """Only PINCHCHECK_* keys are kept and process variables win."""
        env_file = tmp_path / ".env"
        env_file.write_text("PINCHCHECK_SEED=5\nPINCHCHECK_SAMPLES=100\nOTHER=1\n")
        with mock.patch.dict(os.environ, {"PINCHCHECK_SEED": "9"}):
            env = load_environment(str(env_file))
        assert env["PINCHCHECK_SEED"] == "9"
        assert env["PINCHCHECK_SAMPLES"] == "100"
        assert "OTHER" not in env

    def test_disabled(self, tmp_path):
        """--no-env-file skips the file."""
        env_file = tmp_path / ".env"
        env_file.write_text("PINCHCHECK_SAMPLES=100\n")
        with mock.patch.dict(os.environ, {}, clear=True):
            assert load_environment(str(env_file), enabled=False) == {}


class TestReport:
    """Test records and JSON output."""

    def make_report(self):
        report = Report("check", RunProvenance({"command": "check"}, seed=3))
        report.add(CheckRecord("a", CheckRef.POINTWISE_PINCHING, Status.SATISFIED, lhs=1.0, rhs=2.0))
        report.add(CheckRecord("b", CheckRef.HARMONIC_PINCHING, Status.VIOLATED, lhs=float("nan")))
        report.add(CheckRecord("c", CheckRef.PINCHING_CHAIN, Status.VIOLATED, gating=False))
        report.add(CheckRecord("d", CheckRef.BACH_FLAT_PINCHING, Status.NOT_APPLICABLE, reason="not Bach-flat"))
        return report

    def test_failed_counts_gating_violations_only(self):
        """Report-only violations do not fail the run."""
        report = self.make_report()
        assert [r.name for r in report.failed] == ["b"]
        assert report.find("a").satisfied is True
        assert report.find("d").satisfied is None
        assert report.summary() == {"satisfied": 1, "violated": 2, "not-applicable": 1, "informational": 0}
        with pytest.raises(KeyError):
            report.find("z")

    def test_json_is_deterministic(self):
        """Keys are sorted, NaN becomes null and nothing depends on time."""
        first, second = self.make_report().to_json(), self.make_report().to_json()
        assert first == second
        data = json.loads(first)
        assert data["schema_version"] == "1.0"
        assert data["records"][1]["lhs"] is None
        assert data["records"][3]["reason"] == "not Bach-flat"
        assert data["provenance"]["seed"] == 3
        assert "numpy_version" in data["provenance"]["system"]
        assert list(data) == sorted(data)

    def test_to_jsonable(self):
        """numpy values, enums and infinities are converted."""
        value = {"a": np.float64(np.inf), "b": np.arange(3), "c": Status.SATISFIED, 1: np.bool_(True)}
        assert to_jsonable(value) == {"a": None, "b": [0, 1, 2], "c": "satisfied", "1": True}

    def test_save(self, tmp_path):
        """save writes the JSON text."""
        report = self.make_report()
        path = report.save(tmp_path / "report.json")
        assert path.read_text(encoding="utf-8") == report.to_json()
