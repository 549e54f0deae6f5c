"""Invariant suite run by ``junctionsim validate``."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import ImplementationDefectError
from .experiments import (LAW_TOL, ORACLE_TOL, cluster_check, dc_sweep, energy_sweep,
                          gauge_check, oracle_check, wick_oracle_equivalence, _solutions)
from .fock import build_basis, car_defect
from .model import (JunctionSpec, build_hamiltonian, charge_op, current_op, random_spec,
                    verify_conservation)

CONSERVATION_TOL = 1e-12
WICK_SUITE_MAX_MODES = 12


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool
    seconds: float

    def as_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "tolerance": self.tolerance,
                "passed": self.passed, "seconds": self.seconds}


def _check(name, tol, fn):
    """``fn`` returns a defect, or ``(defect, passed)`` when more than the size matters."""
    t0 = time.perf_counter()
    out = fn()
    value, ok = out if isinstance(out, tuple) else (float(out), float(out) <= tol)
    return Check(name, float(value), tol, bool(ok), time.perf_counter() - t0)


def _conservation(spec):
    basis = spec.basis()
    res = verify_conservation(build_hamiltonian(spec, basis), spec, basis)
    return max(res["total"], res["region1"], res["region2"], res["H12_total"])


def _current_reduction(spec):
    basis = spec.basis()
    return current_op(build_hamiltonian(spec, basis), charge_op(spec, basis, 1),
                      return_residual=True)[1]


def _oracle(spec, grid, sols):
    try:
        return oracle_check(spec, grid, sols)
    except ImplementationDefectError:
        return float("inf")


def _energy_current(spec, grid, sols):
    # J = -2|e| d<H12>/dtheta, so the sine coefficient of J is 2|e| times the cosine one of <H12>
    J = dc_sweep(spec, grid, "meanfield", sols)
    E = energy_sweep(spec, grid, "meanfield", sols)
    return abs(J.coefficients["sin"] - 2 * spec.charge_unit * E.coefficients["cos"])


def run_suite(spec: JunctionSpec, seed: int = 0, n_random: int = 20, theta_grid=None,
              law_tol: float = LAW_TOL) -> list[Check]:
    """Run the invariant checks on ``spec`` (and seeded random specs).

    Exact-engine checks need the junction's Fock space, so junctions beyond the mode
    cap raise :class:`~junctionsim.errors.CapacityError`.
    """
    spec.basis()  # capacity check up front
    sols = _solutions(spec, None)
    rng = np.random.default_rng(seed)
    randoms = [random_spec(rng) for _ in range(n_random)]
    checks = [
        _check("car", CONSERVATION_TOL, lambda: car_defect(build_basis(min(spec.n_modes, 8)))),
        _check("conservation", CONSERVATION_TOL,
               lambda: max(_conservation(s) for s in [spec] + randoms)),
        _check("current_reduction", CONSERVATION_TOL,
               lambda: max(_current_reduction(s) for s in [spec] + randoms)),
    ]
    for engine in ("meanfield", "exact"):
        checks.append(_check(f"dc_law_{engine}", law_tol,
                             lambda e=engine: _law_defect(dc_sweep(spec, theta_grid, e, sols))))
    checks.append(_check("engines_agree", ORACLE_TOL, lambda: _oracle(spec, theta_grid, sols)))
    checks.append(_check("energy_law", law_tol,
                         lambda: _law_defect(energy_sweep(spec, theta_grid, "meanfield", sols))))
    checks.append(_check("energy_current", law_tol,
                         lambda: _energy_current(spec, theta_grid, sols)))
    for phi in (np.pi / 4, np.pi / 2, np.pi):
        checks.append(_check(f"gauge_phi={phi:.6f}", law_tol,
                             lambda p=phi: gauge_check(spec, p, theta_grid, sols)))
    checks.append(_check("clustering", ORACLE_TOL,
                         lambda: _cluster_defect(spec, sols)))
    if spec.n_modes <= WICK_SUITE_MAX_MODES:
        checks.append(_check("wick_vs_fock", ORACLE_TOL,
                             lambda: wick_oracle_equivalence(spec, 4, sols)["max_diff"]))
    return checks


def _law_defect(result):
    return result.residual, result.passed


def _cluster_defect(spec, sols):
    rep = cluster_check(spec, solutions=sols)
    return max(rep.max_defect, rep.max_forbidden_pattern)
