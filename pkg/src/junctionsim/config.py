"""Flat ``section.key = value`` experiment configuration.

Example::

    # two-site dc sweep
    model.L1 = 1
    model.L2 = 1
    model.t_hop = 0
    model.g11 = 1
    model.g22 = 1
    model.g12 = 0.1
    experiment.grid = 17

Every problem in a file is collected and reported together.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import ValidationError
from .model import JunctionSpec

KINDS = ("dc", "ac", "energy", "odlro", "validate", "oracle")
ENGINES = ("meanfield", "exact")
FORMATS = ("csv", "json", "both")


def _int(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or v != int(v):
        raise TypeError("expected an integer")
    return int(v)


def _float(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeError("expected a number")
    v = float(v)
    if not math.isfinite(v):
        raise TypeError("expected a finite number")
    return v


def _str(v):
    return str(v)


def _choice(options):
    def conv(v):
        v = str(v)
        if v not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return v
    return conv


def _at_least(lo, strict=False):
    def check(v):
        if (v <= lo) if strict else (v < lo):
            return f"must be {'>' if strict else '>='} {lo}"
    return check


# key -> (converter, range check or None, default); default None means optional/unset
SCHEMA = {
    "model.L1": (_int, _at_least(1), "required"),
    "model.L2": (_int, _at_least(1), "required"),
    "model.t_hop": (_float, None, 1.0),
    "model.mu": (_float, None, 0.0),
    "model.g11": (_float, _at_least(0.0), 0.0),
    "model.g22": (_float, _at_least(0.0), 0.0),
    "model.g12": (_float, None, 0.0),
    "model.volume_norm": (_float, _at_least(0.0, strict=True), None),
    "model.charge_unit": (_float, _at_least(0.0, strict=True), 1.0),
    "model.boundary": (_choice(("open", "periodic")), None, "open"),
    "model.cross_hop": (_float, None, 0.0),
    "experiment.kind": (_choice(KINDS), None, None),
    "experiment.grid": (_int, _at_least(1), 17),
    "experiment.engine": (_choice(ENGINES), None, "meanfield"),
    "experiment.target_gap": (_float, _at_least(0.0, strict=True), None),
    "experiment.V": (_float, None, 0.25),
    "experiment.theta0": (_float, None, 0.5),
    "experiment.T": (_float, _at_least(0.0, strict=True), None),
    "experiment.n_samples": (_int, _at_least(16), 1024),
    "experiment.dt_tol": (_float, _at_least(0.0, strict=True), 1e-8),
    "experiment.law_tol": (_float, _at_least(0.0, strict=True), 1e-10),
    "experiment.region": (_choice(("1", "2", "cross")), None, "1"),
    "experiment.ref_site": (_int, _at_least(0), 0),
    "output.directory": (_str, None, "out"),
    "output.format": (_choice(FORMATS), None, "csv"),
    "output.seed": (_int, _at_least(0), 0),
}


class ConfigError(ValidationError):
    """Invalid configuration; ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class ExperimentConfig:
    model: dict
    experiment: dict
    output: dict
    source: dict = field(default_factory=dict)

    @property
    def kind(self):
        return self.experiment["kind"]

    def spec(self) -> JunctionSpec:
        return JunctionSpec(**self.model)

    def echo(self) -> dict:
        return {"model": dict(self.model), "experiment": dict(self.experiment),
                "output": dict(self.output)}


def _literal(raw: str):
    raw = raw.strip()
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
        return raw[1:-1]
    try:
        return json.loads(raw)
    except ValueError:
        return raw


def parse_config(text: str, kind: str | None = None) -> ExperimentConfig:
    """Parse and validate a configuration.

    ``kind`` (from the CLI subcommand) fills ``experiment.kind``; a file
    value that disagrees with it is an error.
    """
    errors: list[str] = []
    values: dict = {}
    seen: set = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            errors.append(f"line {lineno}: syntax error, expected 'section.key = value'")
            continue
        key, raw = (s.strip() for s in stripped.split("=", 1))
        if key.count(".") != 1 or not all(key.split(".")) or not raw:
            errors.append(f"line {lineno}: syntax error in {stripped!r}")
            continue
        if key not in SCHEMA:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in seen:
            errors.append(f"line {lineno}: duplicate key {key!r}")
            continue
        seen.add(key)
        conv, check, _ = SCHEMA[key]
        try:
            val = conv(_literal(raw))
        except (TypeError, ValueError) as exc:
            errors.append(f"line {lineno}: {key}: {exc} (got {raw!r})")
            continue
        msg = check(val) if check else None
        if msg:
            errors.append(f"{key}: range violation, {msg} (got {val!r})")
            continue
        values[key] = val

    if kind is not None:
        if kind not in KINDS:
            errors.append(f"unknown experiment kind {kind!r}")
        elif values.get("experiment.kind", kind) != kind:
            errors.append(f"experiment.kind: file says {values['experiment.kind']!r} "
                          f"but the command runs {kind!r}")
        else:
            values["experiment.kind"] = kind

    for key, (_, _, default) in SCHEMA.items():
        if key in values or key in seen:
            continue
        if default == "required":
            errors.append(f"{key}: missing required key")
        elif default is not None:
            values[key] = default
    if "experiment.kind" not in values:
        errors.append("experiment.kind: missing (set it in the file or use a subcommand)")

    sections: dict = {"model": {}, "experiment": {}, "output": {}}
    for key, val in values.items():
        sec, name = key.split(".")
        sections[sec][name] = val
    if not errors:
        try:
            JunctionSpec(**sections["model"])
        except ValidationError as exc:
            errors.append(f"model: {exc}")
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(sections["model"], sections["experiment"], sections["output"],
                            source=values)


def load_config(path, kind: str | None = None) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), kind)
