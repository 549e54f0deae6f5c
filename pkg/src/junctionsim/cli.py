"""Command-line interface: ``junctionsim <command> --config FILE [--out DIR] [--format F]``.

Every run writes ``summary.json``; ``result.csv`` and ``plot.gp`` (a gnuplot
script over the CSV) are written for ``--format csv|both`` and
``result.json`` for ``--format json|both``.

Exit codes: 0 pass, 1 invariant violation, 2 usage or configuration error,
3 capacity or integration failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import FORMATS, ConfigError, ExperimentConfig, load_config
from .errors import (CapacityError, ImplementationDefectError, IntegrationError,
                     ModelInconsistencyError, SolverError, ValidationError)
from .experiments import (ORACLE_TOL, ac_run, dc_sweep, default_theta_grid, energy_sweep,
                          odlro_run, spec_with_gap)
from .validation import run_suite

log = logging.getLogger("junctionsim")

SCHEMA_VERSION = 1
EXIT_PASS, EXIT_VIOLATION, EXIT_USAGE, EXIT_CAPACITY = 0, 1, 2, 3
CROSS_PLATEAU_TOL = 1e-12

COMMANDS = {
    "validate": "validate",
    "dc-sweep": "dc",
    "ac-run": "ac",
    "energy-sweep": "energy",
    "odlro-scan": "odlro",
    "oracle-check": "oracle",
}

# exception type -> (exit code, machine-readable reason)
FAILURES = [
    (ConfigError, EXIT_USAGE, "config_error"),
    (CapacityError, EXIT_CAPACITY, "capacity_exceeded"),
    (IntegrationError, EXIT_CAPACITY, "integration_failure"),
    (SolverError, EXIT_CAPACITY, "solver_failure"),
    (ImplementationDefectError, EXIT_VIOLATION, "implementation_defect"),
    (ModelInconsistencyError, EXIT_VIOLATION, "model_inconsistency"),
    (ValidationError, EXIT_USAGE, "invalid_input"),
]


class Outcome:
    """Tabular result of one command plus its summary fields."""

    def __init__(self, columns, rows, xlabel, ylabel):
        self.columns = list(columns)
        self.rows = rows
        self.xlabel = xlabel
        self.ylabel = ylabel
        self.fit = None
        self.results: dict = {}
        self.tolerances: dict = {}
        self.checks: dict = {}
        self.violations: list = []

    @property
    def passed(self) -> bool:
        return all(self.checks.values()) and not self.violations


def _num(x) -> float | None:
    x = float(x)
    return x if math.isfinite(x) else None


def _fit(result) -> dict:
    return {"basis": list(result.fit_basis), "omega": result.fit_omega,
            "coefficients": dict(result.coefficients), "residual": result.residual}


def _spec(cfg: ExperimentConfig):
    spec = cfg.spec()
    gap = cfg.experiment.get("target_gap")
    return spec_with_gap(spec, gap) if gap is not None else spec


def _grid(cfg):
    return default_theta_grid(cfg.experiment["grid"])


def _sweep(cfg, fn):
    exp = cfg.experiment
    res = fn(_spec(cfg), _grid(cfg), exp["engine"], law_tol=exp["law_tol"])
    out = Outcome(("delta_theta", "observable"), list(zip(res.grid, res.values)),
                  "delta_theta", "J" if res.kind == "dc" else "<H12>")
    out.fit = _fit(res)
    out.tolerances = {"law_tol": exp["law_tol"]}
    out.checks = {f"{res.kind}_law": res.passed}
    out.violations = list(res.violations)
    out.results = {"engine": exp["engine"], "n_points": int(res.grid.size)}
    if res.kind == "energy":
        out.results["cos_sign"] = res.metadata["cos_sign"]
    return out


def cmd_dc(cfg):
    return _sweep(cfg, dc_sweep)


def cmd_energy(cfg):
    return _sweep(cfg, energy_sweep)


def cmd_ac(cfg):
    exp = cfg.experiment
    res = ac_run(_spec(cfg), exp["V"], theta0=exp["theta0"], T=exp.get("T"),
                 dt_tol=exp["dt_tol"], n_samples=exp["n_samples"])
    out = Outcome(("time", "current", "charge_region1"),
                  list(zip(res.grid, res.values, res.extra["charge_region1"])), "time", "J(t)")
    out.fit = _fit(res)
    out.tolerances = {"dt_tol": exp["dt_tol"], "ehrenfest_limit": 100 * exp["dt_tol"],
                      "peak_window": res.extra["binwidth"]}
    out.checks = {"ehrenfest": res.extra["ehrenfest_max"] <= 100 * exp["dt_tol"],
                  "ac_law": not any(v.startswith("ac_law") for v in res.violations)}
    out.violations = list(res.violations)
    out.results = {k: _num(res.extra[k]) for k in
                   ("peak_omega", "expected_omega", "binwidth", "ehrenfest_max", "j_spread")}
    return out


def cmd_odlro(cfg):
    exp = cfg.experiment
    spec = _spec(cfg)
    tab = odlro_run(spec, exp["region"], exp["ref_site"], theta1=exp["theta0"])
    rows = [(d, c.real, c.imag, dev) for d, c, dev in
            zip(tab.separations, tab.correlations, tab.deviations)]
    out = Outcome(("separation", "correlation_real", "correlation_imag", "plateau_deviation"),
                  rows, "separation", "|C(d) - plateau|")
    seps = list(tab.separations)
    out.results = {"kind": tab.kind, "max_separation": int(max(seps)),
                   "deviation_at_max": _num(tab.deviations[-1])}
    if 2 in seps:
        out.results["deviation_at_2"] = _num(tab.deviation_at(2))
    if tab.kind == "cross":
        out.tolerances = {"cross_plateau": CROSS_PLATEAU_TOL}
        worst = float(np.max(tab.deviations))
        out.checks = {"cross_plateau": worst <= CROSS_PLATEAU_TOL}
        if not out.checks["cross_plateau"]:
            out.violations.append(f"cross_plateau: |C - conj(Psi2) Psi1| = {worst:.3e}")
    return out


def cmd_oracle(cfg):
    spec = _spec(cfg)
    grid = _grid(cfg)
    mf = dc_sweep(spec, grid, "meanfield").values
    ex = dc_sweep(spec, grid, "exact").values
    diff = np.abs(mf - ex)
    out = Outcome(("delta_theta", "meanfield", "exact", "abs_diff"),
                  list(zip(grid, mf, ex, diff)), "delta_theta", "J")
    worst = float(diff.max())
    out.tolerances = {"oracle_tol": ORACLE_TOL}
    out.checks = {"engines_agree": worst <= ORACLE_TOL}
    out.results = {"max_abs_diff": worst}
    if worst > ORACLE_TOL:
        raise ImplementationDefectError(
            f"mean-field and exact currents differ by {worst:.3e} > {ORACLE_TOL:.1e}")
    return out


def cmd_validate(cfg):
    checks = run_suite(_spec(cfg), seed=cfg.output["seed"], law_tol=cfg.experiment["law_tol"])
    out = Outcome(("check", "value", "tolerance", "passed"),
                  [(c.name, c.value, c.tolerance, int(c.passed)) for c in checks],
                  "check", "defect")
    out.checks = {c.name: c.passed for c in checks}
    out.tolerances = {c.name: c.tolerance for c in checks}
    out.results = {"values": {c.name: _num(c.value) for c in checks},
                   "timings": {c.name: c.seconds for c in checks}}
    out.violations = [f"{c.name}: {c.value:.3e} > {c.tolerance:.1e}" for c in checks
                      if not c.passed]
    return out


HANDLERS = {"validate": cmd_validate, "dc": cmd_dc, "ac": cmd_ac, "energy": cmd_energy,
            "odlro": cmd_odlro, "oracle": cmd_oracle}


def _cell(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def format_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(x) for x in row])
    return buf.getvalue()


def gnuplot_script(out: Outcome, kind: str) -> str:
    lines = [
        f"# {kind}: gnuplot -p plot.gp",
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set xlabel '{out.xlabel}'",
        f"set ylabel '{out.ylabel}'",
    ]
    if kind == "validate":
        lines += ["set logscale y", "set style fill solid",
                  "plot 'result.csv' using 0:($2 > 0 ? $2 : 1e-18):xtic(1) with boxes, \\",
                  "     '' using 0:3 with points pt 7 title 'tolerance'"]
    elif kind == "odlro":
        lines += ["set logscale y",
                  "plot 'result.csv' using 1:($4 > 0 ? $4 : 1e-18) with linespoints"]
    elif kind == "ac":
        lines += ["plot 'result.csv' using 1:2 with lines, '' using 1:3 axes x1y2 with lines",
                  "set y2tics"]
    elif kind == "oracle":
        lines += ["plot 'result.csv' using 1:2 with linespoints, '' using 1:3 with points"]
    else:
        lines += ["plot 'result.csv' using 1:2 with linespoints"]
    return "\n".join(lines) + "\n"


def _summary(kind, code, reason, cfg, out: Outcome | None) -> dict:
    s = {
        "schema_version": SCHEMA_VERSION,
        "tool": "junctionsim",
        "version": __version__,
        "command": kind,
        "status": "pass" if code == EXIT_PASS else "fail",
        "exit_code": code,
        "reason": reason,
        "config": cfg.echo() if cfg is not None else None,
    }
    if out is not None:
        s.update(fit=out.fit, tolerances=out.tolerances, checks=out.checks,
                 violations=out.violations, results=out.results)
    return s


def _write(out_dir: Path, fmt: str, kind: str, summary: dict, out: Outcome | None):
    out_dir.mkdir(parents=True, exist_ok=True)
    if out is not None and fmt in ("csv", "both"):
        (out_dir / "result.csv").write_text(format_csv(out.columns, out.rows))
        (out_dir / "plot.gp").write_text(gnuplot_script(out, kind))
    if out is not None and fmt in ("json", "both"):
        rows = [[x if isinstance(x, str) else _num(x) for x in r] for r in out.rows]
        (out_dir / "result.json").write_text(
            json.dumps({"columns": out.columns, "rows": rows}, indent=1) + "\n")
    (out_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True, default=_num) + "\n")


def run(kind: str, config_path, out_dir=None, fmt=None) -> tuple[int, dict]:
    """Run one command; returns ``(exit_code, summary)`` and writes the output files."""
    cfg = out = None
    try:
        cfg = load_config(config_path, kind)
        out = HANDLERS[kind](cfg)
        code = EXIT_PASS if out.passed else EXIT_VIOLATION
        reason = None if out.passed else {"code": "invariant_violation",
                                          "messages": out.violations or
                                          [k for k, v in out.checks.items() if not v]}
    except (OSError, *(t for t, _, _ in FAILURES)) as exc:
        code, name = next(((c, n) for t, c, n in FAILURES if isinstance(exc, t)),
                          (EXIT_USAGE, "config_unreadable"))
        messages = exc.errors if isinstance(exc, ConfigError) else [str(exc)]
        reason = {"code": name, "messages": messages}
        for m in messages:
            log.error(m)
        out = None
    if cfg is not None or out_dir is not None:
        target = Path(out_dir if out_dir is not None else cfg.output["directory"])
        fmt = fmt or (cfg.output["format"] if cfg is not None else "csv")
        summary = _summary(kind, code, reason, cfg, out)
        _write(target, fmt, kind, summary, out)
    else:
        summary = _summary(kind, code, reason, cfg, out)
    return code, summary


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="junctionsim",
                                description="Two-region superconducting junction simulator")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="flat section.key = value file")
        sp.add_argument("--out", help="output directory (overrides output.directory)")
        sp.add_argument("--format", choices=FORMATS, help="overrides output.format")
        sp.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    kind = COMMANDS[args.command]
    code, summary = run(kind, args.config, args.out, args.format)
    status = summary["status"]
    detail = "" if summary["reason"] is None else f" ({summary['reason']['code']})"
    print(f"{args.command}: {status}{detail}", file=sys.stderr if code else sys.stdout)
    return code


if __name__ == "__main__":
    sys.exit(main())
