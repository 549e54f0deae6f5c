"""Numerical experiments on the junction: dc, ac, energy, gauge, clustering.

Every observable can be computed two ways on the same product BCS state:
``meanfield`` (Wick contraction on the covariance) and ``exact`` (Fock-space
expectation of the sparse operator).  :func:`oracle_check` compares them.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ImplementationDefectError, ValidationError
from .evolution import evolve, propagate_many
from .fock import (FockBasis, SparseOperator, StateVector, apply_word_to_vector,
                   expectation, word_operator)
from .meanfield import (BcsSolution, OdlroTable, _pfaffians_of_words, coupling_for_gap,
                        covariance, embed_product_state, odlro_scan, polynomial_expect,
                        solve_region)
from .model import (DOWN, UP, JunctionSpec, build_hamiltonian, charge_op,
                    current_op, current_terms, gauge_rotation, hamiltonian_terms)

log = logging.getLogger(__name__)

LAW_TOL = 1e-10
ORACLE_TOL = 1e-10
DEFAULT_GRID_POINTS = 17
ENGINES = ("meanfield", "exact")


def default_theta_grid(n: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    return np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)


BASIS_FUNCTIONS = {
    "const": np.ones_like,
    "cos": np.cos,
    "sin": np.sin,
}


def fit_trig(grid, values, basis=("const", "cos", "sin"), omega: float = 1.0):
    """Least-squares fit of ``values`` on ``{f(omega * grid)}``.

    Returns ``(coefficients, residual)``; the residual is the max absolute
    deviation of the fit on the grid.
    """
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    A = np.column_stack([BASIS_FUNCTIONS[b](omega * grid) for b in basis])
    coef, *_ = np.linalg.lstsq(A, values, rcond=None)
    residual = float(np.max(np.abs(A @ coef - values))) if values.size else 0.0
    return dict(zip(basis, map(float, coef))), residual


@dataclass
class SweepResult:
    """Observable values on a control grid together with a trigonometric fit."""

    kind: str
    grid: np.ndarray
    values: np.ndarray
    coefficients: dict
    residual: float
    fit_basis: tuple = ("const", "cos", "sin")
    fit_omega: float = 1.0
    metadata: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values)
        if self.grid.size > 1 and np.any(np.diff(self.grid) <= 0):
            raise ValidationError("sweep grid must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("sweep produced non-finite values")

    @property
    def passed(self) -> bool:
        return not self.violations

    def recompute_residual(self) -> float:
        A = np.column_stack([BASIS_FUNCTIONS[b](self.fit_omega * self.grid)
                             for b in self.fit_basis])
        coef = np.array([self.coefficients[b] for b in self.fit_basis])
        return float(np.max(np.abs(A @ coef - np.real(self.values))))


def _solutions(spec, solutions, tol=1e-12):
    if solutions is not None:
        return solutions
    return solve_region(spec, 1, tol=tol), solve_region(spec, 2, tol=tol)


def _check_grid(theta_grid):
    grid = default_theta_grid() if theta_grid is None else np.asarray(theta_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValidationError("theta grid must be a non-empty 1-d sequence")
    return grid


class _ExactJunction:
    """Exact-engine objects for one spec, built once per experiment."""

    def __init__(self, spec: JunctionSpec, basis: FockBasis | None = None):
        self.spec = spec
        self.basis = spec.basis() if basis is None else basis
        self.split = build_hamiltonian(spec, self.basis)
        self.Q1 = charge_op(spec, self.basis, 1)
        self.J, self.current_residual = current_op(self.split, self.Q1, return_residual=True)

    def state(self, sol1, sol2) -> StateVector:
        return embed_product_state(sol1, sol2, self.spec, self.basis)


def _observable_values(spec, grid, engine, solutions, observable):
    if engine not in ENGINES:
        raise ValidationError(f"engine must be one of {ENGINES}, got {engine!r}")
    sol1, sol2 = _solutions(spec, solutions)
    if engine == "meanfield":
        terms = current_terms(spec) if observable == "current" else hamiltonian_terms(spec)["H12"]
        vals = [polynomial_expect(covariance(sol1.with_phase(sol2.theta + th), sol2, spec), terms)
                for th in grid]
    else:
        ex = _ExactJunction(spec)
        op = ex.J if observable == "current" else ex.split.H12
        vals = [expectation(op, ex.state(sol1.with_phase(sol2.theta + th), sol2)) for th in grid]
    vals = np.asarray(vals)
    imag = float(np.max(np.abs(vals.imag))) if vals.size else 0.0
    if imag > 1e-10:
        raise ImplementationDefectError(
            f"expectation of a hermitian observable has imaginary part {imag:.3e}")
    return vals.real


def _metadata(spec, engine, **kw):
    meta = {"spec": spec.as_dict(), "engine": engine}
    meta.update(kw)
    return meta


def dc_sweep(spec: JunctionSpec, theta_grid=None, engine: str = "meanfield",
             solutions: tuple[BcsSolution, BcsSolution] | None = None,
             law_tol: float = LAW_TOL) -> SweepResult:
    """Tunneling current ``J`` versus phase difference ``theta_1 - theta_2``.

    The current is fitted on ``{1, cos, sin}``; for the product state the law
    is exactly sinusoidal, so a constant or cosine part or a fit residual
    above ``law_tol`` is recorded as a violation.
    """
    grid = _check_grid(theta_grid)
    J = _observable_values(spec, grid, engine, solutions, "current")
    coef, residual = fit_trig(grid, J)
    violations = []
    if abs(coef["const"]) > law_tol or abs(coef["cos"]) > law_tol or residual > law_tol:
        violations.append(
            f"dc_law: J(dtheta) is not a pure sine (const={coef['const']:.3e}, "
            f"cos={coef['cos']:.3e}, residual={residual:.3e}, tol={law_tol:.1e})")
        log.warning(violations[-1])
    return SweepResult("dc", grid, J, coef, residual,
                       metadata=_metadata(spec, engine, law_tol=law_tol),
                       violations=violations)


def energy_sweep(spec: JunctionSpec, theta_grid=None, engine: str = "meanfield",
                 solutions: tuple[BcsSolution, BcsSolution] | None = None,
                 law_tol: float = LAW_TOL) -> SweepResult:
    """Junction energy ``<H12>`` versus phase difference, fitted on ``{1, cos}``.

    For ``g12 > 0`` the cosine coefficient must be negative so that the
    energy is lowest at zero phase difference.
    """
    grid = _check_grid(theta_grid)
    E = _observable_values(spec, grid, engine, solutions, "energy")
    basis = ("const", "cos")
    coef, residual = fit_trig(grid, E, basis)
    violations = []
    if residual > law_tol:
        violations.append(f"energy_law: <H12> is not constant + cos (residual={residual:.3e})")
    if spec.g12 > 0 and not coef["cos"] < 0:
        violations.append(
            f"energy_sign: cos coefficient {coef['cos']:.3e} is not negative for g12 > 0")
    for v in violations:
        log.warning(v)
    return SweepResult("energy", grid, E, coef, residual, fit_basis=basis,
                       metadata=_metadata(spec, engine, law_tol=law_tol,
                                          cos_sign=int(np.sign(coef["cos"]))),
                       violations=violations)


def _stencil_derivative(H: SparseOperator, Q: SparseOperator, vec: np.ndarray, h: float):
    """Five-point derivative of ``<Q>`` at ``vec`` by short propagations."""
    qdiag = Q.matrix.diagonal().real
    q = [float(np.vdot(w, qdiag * w).real)
         for w in propagate_many(H, vec, (-2 * h, -h, h, 2 * h), tol=1e-14)]
    return (q[0] - 8 * q[1] + 8 * q[2] - q[3]) / (12 * h)


def spectrum(times: np.ndarray, values: np.ndarray):
    """Hann-windowed DFT of a uniformly sampled real signal (mean removed).

    Returns ``(omega, amplitude, binwidth)`` with angular frequencies.
    """
    n = times.size
    dt = times[1] - times[0]
    x = (values - values.mean()) * np.hanning(n)
    amp = np.abs(np.fft.rfft(x))
    omega = 2 * np.pi * np.fft.rfftfreq(n, dt)
    return omega, amp, 2 * np.pi / (n * dt)


def ac_run(spec: JunctionSpec, V: float, theta0: float = 0.0, T: float | None = None,
           dt_tol: float = 1e-8, n_samples: int = 1024,
           solutions: tuple[BcsSolution, BcsSolution] | None = None,
           min_periods: float = 8.0, ehrenfest_step: float = 1e-2,
           ehrenfest_every: int = 1) -> SweepResult:
    """Real-time current under a voltage ``V`` on region 1.

    The voltage couples as ``H_total + V Q_1``, which advances the pair
    phase difference at the rate ``2 |e| V``; the dominant spectral line of
    ``J(t)`` is compared with that frequency.  Along the trajectory the
    integrator is checked against the current definition
    ``d<Q_1>/dt = <[iH, Q_1]>`` (Ehrenfest residual).
    """
    omega_expected = 2 * spec.charge_unit * abs(V)
    if T is None:
        if V == 0:
            raise ValidationError("T is required when V = 0")
        T = min_periods * 2 * np.pi / omega_expected * 1.25
    if V != 0 and T < min_periods * 2 * np.pi / omega_expected:
        raise ValidationError(
            f"T={T} covers fewer than {min_periods} periods of 2|e|V={omega_expected}")
    if n_samples < 16:
        raise ValidationError("n_samples must be >= 16")
    sol1, sol2 = _solutions(spec, solutions)
    ex = _ExactJunction(spec)
    H = ex.split.H_total + ex.Q1.scale(V)
    H = SparseOperator(H.basis, H.matrix, hermitian=True)
    v0 = ex.state(sol1.with_phase(sol2.theta + theta0), sol2)
    times = np.linspace(0.0, T, n_samples)
    traj = evolve(v0, H, times, tol=dt_tol)
    J = np.array([expectation(ex.J, s).real for s in traj])
    Q = np.array([expectation(ex.Q1, s).real for s in traj])

    ehrenfest = np.full(times.size, np.nan)
    for i in range(0, times.size, ehrenfest_every):
        dq = _stencil_derivative(H, ex.Q1, traj[i].amplitudes, ehrenfest_step)
        ehrenfest[i] = abs(dq - J[i])
    ehrenfest_max = float(np.nanmax(ehrenfest))

    omega, amp, binwidth = spectrum(times, J)
    k = int(np.argmax(amp[1:])) + 1 if amp.size > 1 else 0
    peak = float(omega[k])
    coef, residual = fit_trig(times, J, omega=omega_expected) if V else fit_trig(times, J, ("const",))

    violations = []
    if ehrenfest_max > 100 * dt_tol:
        violations.append(
            f"ehrenfest: |dQ1/dt - J| = {ehrenfest_max:.3e} exceeds 100*tol = {100 * dt_tol:.1e}")
    if V != 0 and abs(peak - omega_expected) > binwidth:
        violations.append(
            f"ac_law: spectral peak {peak:.6g} not within one bin ({binwidth:.3g}) "
            f"of 2|e|V = {omega_expected:.6g}")
    for v in violations:
        log.warning(v)
    return SweepResult(
        "ac", times, J, coef, residual,
        fit_basis=tuple(coef), fit_omega=omega_expected if V else 1.0,
        metadata=_metadata(spec, "exact", V=V, theta0=theta0, T=T, dt_tol=dt_tol,
                           n_samples=n_samples),
        violations=violations,
        extra={"charge_region1": Q, "omega": omega, "amplitude": amp, "binwidth": binwidth,
               "peak_omega": peak, "expected_omega": omega_expected,
               "ehrenfest": ehrenfest, "ehrenfest_max": ehrenfest_max,
               "j_spread": float(J.max() - J.min())})


def gauge_check(spec: JunctionSpec, phi: float, theta_grid=None,
                solutions: tuple[BcsSolution, BcsSolution] | None = None) -> float:
    """Max ``|J[exp(i phi N_1) BCS(dtheta)] - J[BCS(dtheta + 2 phi)]|`` over the grid."""
    grid = _check_grid(theta_grid)
    sol1, sol2 = _solutions(spec, solutions)
    ex = _ExactJunction(spec)
    U = gauge_rotation(spec, ex.basis, phi, 1)
    worst = 0.0
    for th in grid:
        v = ex.state(sol1.with_phase(sol2.theta + th), sol2)
        rotated = StateVector(ex.basis, U @ v)
        shifted = ex.state(sol1.with_phase(sol2.theta + th + 2 * phi), sol2)
        worst = max(worst, abs(expectation(ex.J, rotated) - expectation(ex.J, shifted)))
    return float(worst)


@dataclass
class ClusterReport:
    max_defect: float
    defects: np.ndarray
    monomials: list
    pattern_contributions: dict
    max_forbidden_pattern: float

    @property
    def surviving_patterns(self) -> list:
        return sorted(p for p, v in self.pattern_contributions.items() if abs(v) > ORACLE_TOL)


def region_words(spec: JunctionSpec, region: int, max_len: int = 2) -> list[tuple]:
    """All ladder words of length ``1..max_len`` supported in ``region``."""
    ladders = [(m, d) for m in spec.modes(region) for d in (False, True)]
    words = []
    for k in range(1, max_len + 1):
        words += list(itertools.product(ladders, repeat=k))
    return words


def mixed_monomials(spec: JunctionSpec, max_len: int = 2) -> list[tuple[tuple, tuple]]:
    """Pairs ``(A, B)`` with ``A`` in region 1 and ``B`` in region 2."""
    return list(itertools.product(region_words(spec, 1, max_len), region_words(spec, 2, max_len)))


def entangled_pair_state(spec: JunctionSpec, basis: FockBasis | None = None) -> StateVector:
    """``(|pair at first site of 1> + |pair at first site of 2>) / sqrt 2`` - not clustering."""
    basis = spec.basis() if basis is None else basis
    x, y = spec.sites(1)[0], spec.sites(2)[0]
    amps = np.zeros(basis.dimension, dtype=complex)
    amps[basis.index_of([spec.mode(x, UP), spec.mode(x, DOWN)])] = 1 / np.sqrt(2)
    amps[basis.index_of([spec.mode(y, UP), spec.mode(y, DOWN)])] = 1 / np.sqrt(2)
    return StateVector(basis, amps)


def pair_ops(spec: JunctionSpec, basis: FockBasis, region: int):
    """``(P^+, P)`` for the first site of ``region``."""
    x = spec.sites(region)[0]
    create = ((spec.mode(x, UP), True), (spec.mode(x, DOWN), True))
    annihilate = ((spec.mode(x, DOWN), False), (spec.mode(x, UP), False))
    return word_operator(basis, create), word_operator(basis, annihilate)


def _factorization_defects(state: StateVector, basis, monomials):
    cache = {}
    vec = state.amplitudes

    def ev(word):
        if word not in cache:
            cache[word] = np.vdot(vec, apply_word_to_vector(word, vec, basis.n_modes))
        return cache[word]

    return np.array([abs(ev(A + B) - ev(A) * ev(B)) for A, B in monomials])


def pattern_contributions(spec: JunctionSpec, state: StateVector, seed: int = 0) -> dict:
    """Current contributions of each region pattern of a generic quartic kernel.

    A random real kernel ``w(x, y, z, u)`` (hermitian-symmetric) over all
    modes defines ``sum w a+_x a+_y a_u a_z / V``; each term enters the
    current with weight ``i |e| k`` where ``k`` is the region-1 charge shift.
    Returned values are summed per pattern ``(i, j, k, l)`` of the regions of
    ``(x, y, z, u)``.
    """
    rng = np.random.default_rng(seed)
    n = spec.n_modes
    w = rng.normal(size=(n, n, n, n))
    w = 0.5 * (w + w.transpose(2, 3, 0, 1))
    vec = state.amplitudes
    basis = state.basis
    # R[(u, z)] = a_u a_z |v>
    R = np.zeros((n, n, basis.dimension), dtype=complex)
    for u in range(n):
        for z in range(n):
            R[u, z] = apply_word_to_vector(((u, False), (z, False)), vec, n)
    Rf = R.reshape(n * n, -1)
    # <a+_x a+_y a_u a_z> = <a_y a_x v | a_u a_z v>
    E = (Rf.conj() @ Rf.T).reshape(n, n, n, n)      # [y, x, u, z]
    E = E.transpose(1, 0, 3, 2)                      # [x, y, z, u]
    region = np.array([spec.region_of_mode(m) for m in range(n)])
    out = {}
    for pat in itertools.product((1, 2), repeat=4):
        i, j, k, l = pat
        shift = (i == 1) + (j == 1) - (k == 1) - (l == 1)
        mask = np.ix_(region == i, region == j, region == k, region == l)
        total = 1j * spec.charge_unit * shift * np.sum(w[mask] * E[mask]) / spec.volume_norm
        out[pat] = complex(total)
    return out


def cluster_check(spec: JunctionSpec, monomials=None, state: StateVector | None = None,
                  solutions=None, theta1: float = np.pi / 3, kernel_seed: int = 0) -> ClusterReport:
    """Factorization defects ``|<AB> - <A><B>|`` for region-1/region-2 monomials.

    The default state is the product BCS state at phase difference
    ``theta1``.  Also reports the per-pattern decomposition of the current
    (see :func:`pattern_contributions`); only the ``(1,1,2,2)`` and
    ``(2,2,1,1)`` patterns survive in a product state.
    """
    basis = spec.basis()
    if state is None:
        sol1, sol2 = _solutions(spec, solutions)
        state = embed_product_state(sol1.with_phase(theta1), sol2.with_phase(0.0), spec, basis)
    monomials = mixed_monomials(spec) if monomials is None else list(monomials)
    defects = _factorization_defects(state, basis, monomials)
    contrib = pattern_contributions(spec, state, kernel_seed)
    forbidden = max(abs(v) for p, v in contrib.items() if p not in ((1, 1, 2, 2), (2, 2, 1, 1)))
    return ClusterReport(float(defects.max()) if defects.size else 0.0, defects, monomials,
                         contrib, float(forbidden))


def oracle_check(spec: JunctionSpec, theta_grid=None, solutions=None,
                 threshold: float = ORACLE_TOL) -> float:
    """Max ``|J_meanfield - J_exact|`` over the grid; raises above ``threshold``."""
    grid = _check_grid(theta_grid)
    sols = _solutions(spec, solutions)
    mf = _observable_values(spec, grid, "meanfield", sols, "current")
    ex = _observable_values(spec, grid, "exact", sols, "current")
    worst = float(np.max(np.abs(mf - ex)))
    if worst > threshold:
        raise ImplementationDefectError(
            f"mean-field and exact currents differ by {worst:.3e} > {threshold:.1e}")
    return worst


def nondecreasing_words(n_ladders: int, max_len: int) -> list[tuple[int, ...]]:
    """Ladder-index words ``p_1 <= ... <= p_k`` for ``k <= max_len``."""
    words = []
    for k in range(max_len + 1):
        words += list(itertools.combinations_with_replacement(range(n_ladders), k))
    return words


def _ladder(p: int) -> tuple[int, bool]:
    return (p // 2, bool(p % 2))


def wick_oracle_equivalence(spec: JunctionSpec, max_len: int = 6, solutions=None,
                            theta1: float = 0.9) -> dict:
    """Compare Wick and exact Fock values for every non-decreasing monomial.

    Monomials are words ``c_{p_1} ... c_{p_k}`` over ladder indices
    ``p = 2*mode + dagger`` with ``p_1 <= ... <= p_k`` and ``k <= max_len``.

    The exact side splits each word into a left and right half of length at
    most ``ceil(max_len / 2)`` and evaluates ``<L^+ v | R v>``.  Vectors in
    different ``(S_z^1, S_z^2, parity_1, parity_2)`` sectors are orthogonal
    because the product state has a definite sector, so only same-sector
    inner products are formed.
    """
    sol1, sol2 = _solutions(spec, solutions)
    sol1, sol2 = sol1.with_phase(theta1), sol2.with_phase(0.0)
    basis = spec.basis()
    v = embed_product_state(sol1, sol2, spec, basis).amplitudes
    qf = covariance(sol1, sol2, spec)
    n_lad = 2 * spec.n_modes
    half = (max_len + 1) // 2
    table_words = nondecreasing_words(n_lad, half)
    index = {w: i for i, w in enumerate(table_words)}

    def sector(word):
        sz = [0, 0]
        par = [0, 0]
        for p in word:
            m, dag = _ladder(p)
            r = spec.region_of_mode(m) - 1
            step = 1 if dag else -1
            sz[r] += step if m % 2 == UP else -step
            par[r] ^= 1
        return tuple(sz + par)

    n = spec.n_modes
    right = np.empty((len(table_words), v.size), dtype=complex)
    left = np.empty_like(right)
    rsec, lsec = [], []
    for i, w in enumerate(table_words):
        right[i] = apply_word_to_vector([_ladder(p) for p in w], v, n)
        adj = [p ^ 1 for p in reversed(w)]
        left[i] = apply_word_to_vector([_ladder(p) for p in adj], v, n)
        rsec.append(sector(w))
        lsec.append(sector(adj))
    gram = np.zeros((len(table_words), len(table_words)), dtype=complex)
    groups: dict = {}
    for i, s in enumerate(rsec):
        groups.setdefault(s, ([], []))[1].append(i)
    for i, s in enumerate(lsec):
        groups.setdefault(s, ([], []))[0].append(i)
    for li, ri in groups.values():
        if li and ri:
            gram[np.ix_(li, ri)] = left[li].conj() @ right[ri].T

    words = nondecreasing_words(n_lad, max_len)
    li = np.fromiter((index[w[:len(w) // 2]] for w in words), dtype=np.int64, count=len(words))
    ri = np.fromiter((index[w[len(w) // 2:]] for w in words), dtype=np.int64, count=len(words))
    exact = gram[li, ri]
    wick = np.zeros(len(words), dtype=complex)
    T = qf.contraction_table()
    lengths = np.array([len(w) for w in words])
    for k in range(max_len + 1):
        sel = np.flatnonzero(lengths == k)
        if sel.size:
            W = np.array([words[i] for i in sel], dtype=np.int64).reshape(sel.size, k)
            wick[sel] = _pfaffians_of_words(T, W)
    diff = np.abs(wick - exact)
    worst = int(np.argmax(diff))
    return {"n_monomials": len(words), "max_diff": float(diff.max()),
            "worst_word": [_ladder(p) for p in words[worst]],
            "n_nonzero": int(np.sum(np.abs(exact) > 1e-12))}


def spec_with_gap(spec: JunctionSpec, delta: float) -> JunctionSpec:
    """Copy of ``spec`` whose intra-region couplings give the gap ``delta`` in both regions."""
    if not delta > 0:
        raise ValidationError(f"target gap must be > 0, got {delta!r}")
    g = {}
    for r in (1, 2):
        M = spec.region_size(r)
        g_eff = coupling_for_gap(M, spec.t_hop, spec.mu, delta, spec.boundary)
        g[r] = g_eff * spec.volume_norm / (2 * M)
    return replace(spec, g11=float(g[1]), g22=float(g[2]))


def odlro_run(spec: JunctionSpec, region="1", ref_site: int = 0, theta1: float = 0.0,
              solutions=None) -> OdlroTable:
    """Pair-correlation scan on the mean-field product state."""
    sol1, sol2 = _solutions(spec, solutions)
    state = covariance(sol1.with_phase(sol2.theta + theta1), sol2, spec)
    return odlro_scan(state, spec, region, ref_site)
