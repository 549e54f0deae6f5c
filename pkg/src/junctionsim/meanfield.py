"""Quasi-free BCS layer: gap equation, covariances, Wick contraction.

Each region is solved in the eigenbasis of its own hopping matrix.  The
orbitals are real, so pairing an orbital with itself (up with down) is the
finite-chain analogue of pairing ``k`` with ``-k``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from ._backend import kernels
from .errors import (SolverError, StructuralError, ValidationError)
from .fock import FockBasis, StateVector, polynomial_operator
from .model import DOWN, UP, JunctionSpec, Term, region_hopping_matrix

WICK_MAX_LENGTH = 12
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class BcsSolution:
    """Gap-equation solution for one translation-invariant region.

    ``orbitals[:, n]`` is the real single-particle orbital with energy
    ``energies[n]``; ``u`` and ``v`` are the Bogoliubov amplitudes of that
    orbital and ``theta`` is the common pair phase.
    """

    region: int
    delta: float
    theta: float
    mu: float
    g: float
    energies: np.ndarray
    orbitals: np.ndarray
    u: np.ndarray
    v: np.ndarray
    residual: float

    @property
    def n_sites(self) -> int:
        return self.orbitals.shape[0]

    def with_phase(self, theta: float) -> "BcsSolution":
        return replace(self, theta=float(np.mod(theta, TWO_PI)))

    def pair_amplitudes(self) -> np.ndarray:
        """On-site ``<a_{x,dn} a_{x,up}>`` for every site of the region."""
        w = self.u * self.v
        return (self.orbitals ** 2) @ w * np.exp(1j * self.theta)

    def pair_amplitude(self) -> complex:
        """Site-averaged on-site pair amplitude ``(1/M) sum_k u_k v_k e^{i theta}``."""
        return complex(np.sum(self.u * self.v) / self.n_sites * np.exp(1j * self.theta))

    @classmethod
    def from_amplitudes(cls, u, v, theta=0.0, region=1, orbitals=None,
                        energies=None, mu=0.0) -> "BcsSolution":
        """Build a state directly from Bogoliubov amplitudes (no gap equation)."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        if u.shape != v.shape:
            raise ValidationError("u and v must have the same shape")
        if np.any(np.abs(u ** 2 + v ** 2 - 1) > 1e-12):
            raise ValidationError("Bogoliubov amplitudes must satisfy u^2 + v^2 = 1")
        M = u.size
        orbitals = np.eye(M) if orbitals is None else np.asarray(orbitals, dtype=float)
        energies = np.zeros(M) if energies is None else np.asarray(energies, dtype=float)
        return cls(region, float("nan"), float(np.mod(theta, TWO_PI)), mu, float("nan"),
                   energies, orbitals, u, v, 0.0)


def _amplitudes(xi, delta):
    if delta > 0:
        E = np.sqrt(xi ** 2 + delta ** 2)
        u = np.sqrt(0.5 * (1 + xi / E))
        v = np.sqrt(0.5 * (1 - xi / E))
    else:
        u = (xi >= 0).astype(float)
        v = (xi < 0).astype(float)
    return u, v


def gap_residual(delta, xi, g, M) -> float:
    """``|delta - (g/M) sum_k delta / (2 E_k)|``."""
    if delta == 0:
        return 0.0
    E = np.sqrt(xi ** 2 + delta ** 2)
    return float(abs(delta - g / M * np.sum(delta / (2 * E))))


def solve_gap(M: int, t_hop: float, mu: float, g: float, tol: float = 1e-12,
              boundary: str = "periodic", region: int = 1, theta: float = 0.0,
              max_iter: int = 500) -> BcsSolution:
    """Solve ``1 = (g/M) sum_k 1/(2 E_k)`` for the gap by bisection.

    The bracket is ``[tol, g*M]``.  When the gap function is non-positive at
    the lower end there is no superconducting solution and the normal state
    (``delta = 0``) is returned.
    """
    if M < 1:
        raise ValidationError(f"M must be >= 1, got {M}")
    if g < 0:
        raise ValidationError(f"g must be >= 0, got {g}")
    if tol <= 0:
        raise ValidationError(f"tol must be > 0, got {tol}")
    energies, orbitals = np.linalg.eigh(region_hopping_matrix(M, t_hop, boundary))
    xi = energies - mu

    def f(d):
        return g / M * np.sum(1.0 / (2.0 * np.sqrt(xi ** 2 + d ** 2))) - 1.0

    delta = 0.0
    lo, hi = tol, g * M
    if g > 0 and hi > lo and f(lo) > 0:
        if f(hi) > 0:
            raise SolverError(f"gap function positive at both ends of [{lo}, {hi}]")
        for _ in range(max_iter):
            mid = 0.5 * (lo + hi)
            if f(mid) > 0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= tol * max(1.0, hi):
                break
        else:
            raise SolverError(
                f"bisection did not converge in {max_iter} iterations; "
                f"bracket [{lo!r}, {hi!r}]")
        delta = 0.5 * (lo + hi)
    u, v = _amplitudes(xi, delta)
    return BcsSolution(region, delta, float(np.mod(theta, TWO_PI)), mu, g, energies,
                       orbitals, u, v, gap_residual(delta, xi, g, M))


def coupling_for_gap(M: int, t_hop: float, mu: float, delta: float,
                     boundary: str = "periodic") -> float:
    """Pairing strength whose self-consistent gap is ``delta``."""
    energies = np.linalg.eigvalsh(region_hopping_matrix(M, t_hop, boundary))
    E = np.sqrt((energies - mu) ** 2 + delta ** 2)
    return M / np.sum(1.0 / (2.0 * E))


def solve_region(spec: JunctionSpec, region: int, theta: float = 0.0,
                 tol: float = 1e-12) -> BcsSolution:
    """Gap equation for one region of a junction.

    The mean-field gap of ``-(2 g_rr / V) P^+ P`` is ``(2 g_rr / V) <P>``, i.e.
    the generic equation with effective coupling ``2 g_rr M / V``.
    """
    M = spec.region_size(region)
    g_eff = spec.pair_coupling(region, region) * M
    return solve_gap(M, spec.t_hop, spec.mu, g_eff, tol=tol, boundary=spec.boundary,
                     region=region, theta=theta)


@dataclass(frozen=True)
class QuasiFreeState:
    """Two-point data of a quasi-free state.

    ``G[a, b] = <a+_a a_b>`` and ``F[a, b] = <a_a a_b>`` over all modes.
    """

    G: np.ndarray
    F: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.G.shape[0]

    def check(self, atol: float = 1e-10) -> dict[str, float]:
        herm = float(np.abs(self.G - self.G.conj().T).max())
        anti = float(np.abs(self.F + self.F.T).max())
        ev = np.linalg.eigvalsh(0.5 * (self.G + self.G.conj().T))
        report = {"G_hermiticity": herm, "F_antisymmetry": anti,
                  "G_min_eig": float(ev.min()), "G_max_eig": float(ev.max())}
        if herm > 1e-12 or anti > 1e-12 or ev.min() < -atol or ev.max() > 1 + atol:
            raise ValidationError(f"invalid quasi-free covariance: {report}")
        return report

    def contraction_table(self) -> np.ndarray:
        """``T[p, q] = <c_p c_q>`` with ladder index ``p = 2*mode + dagger``."""
        n = self.n_modes
        G, F = self.G, self.F
        T = np.zeros((2 * n, 2 * n), dtype=complex)
        # dagger index 1 -> creation
        T[1::2, 0::2] = G                          # <a+_a a_b>
        T[0::2, 1::2] = np.eye(n) - G.T            # <a_a a+_b>
        T[0::2, 0::2] = F                          # <a_a a_b>
        T[1::2, 1::2] = F.conj().T                 # <a+_a a+_b> = conj(F[b, a])
        return T


def _region_blocks(sol: BcsSolution, spec: JunctionSpec, region: int):
    M = spec.region_size(region)
    if sol.n_sites != M:
        raise StructuralError(f"solution has {sol.n_sites} sites, region {region} has {M}")
    phi = sol.orbitals
    g_block = (phi * sol.v ** 2) @ phi.T
    k_block = (phi * (sol.u * sol.v)) @ phi.T * np.exp(1j * sol.theta)
    return g_block, k_block


def covariance(sol1: BcsSolution, sol2: BcsSolution, spec: JunctionSpec) -> QuasiFreeState:
    """Covariance of the product state ``|BCS_1(theta_1)> (x) |BCS_2(theta_2)>``."""
    n = spec.n_modes
    G = np.zeros((n, n), dtype=complex)
    F = np.zeros((n, n), dtype=complex)
    for region, sol in ((1, sol1), (2, sol2)):
        g_block, k_block = _region_blocks(sol, spec, region)
        sites = list(spec.sites(region))
        up = np.array([spec.mode(s, UP) for s in sites])
        dn = np.array([spec.mode(s, DOWN) for s in sites])
        G[np.ix_(up, up)] = g_block
        G[np.ix_(dn, dn)] = g_block
        F[np.ix_(dn, up)] = k_block                # <a_{x dn} a_{y up}>
        F[np.ix_(up, dn)] = -k_block.T             # <a_{x up} a_{y dn}>
    return QuasiFreeState(G, F)


def _word_indices(ops) -> np.ndarray:
    return np.array([2 * int(m) + int(bool(d)) for m, d in ops], dtype=np.int64)


def _pfaffians_of_words(T: np.ndarray, W: np.ndarray, chunk: int = 50_000) -> np.ndarray:
    """Wick values for a stack of equal-length ladder words (index arrays)."""
    B, k = W.shape
    if k == 0:
        return np.ones(B, dtype=complex)
    if k % 2:
        return np.zeros(B, dtype=complex)
    upper = np.triu(np.ones((k, k), dtype=bool), 1)
    out = np.empty(B, dtype=complex)
    for start in range(0, B, chunk):
        w = W[start:start + chunk]
        A = T[w[:, :, None], w[:, None, :]]
        A = np.where(upper, A, 0)
        A = A - np.swapaxes(A, 1, 2)
        out[start:start + chunk] = kernels.pfaffian_batch(A)
    return out


def wick_expect(state: QuasiFreeState, ops: Sequence[tuple[int, bool]],
                table: np.ndarray | None = None) -> complex:
    """Expectation of an ordered ladder monomial by the pfaffian Wick rule.

    ``ops`` is a sequence of ``(mode, dagger)``.  Odd monomials vanish.
    """
    ops = list(ops)
    if len(ops) > WICK_MAX_LENGTH:
        raise ValidationError(
            f"monomial length {len(ops)} exceeds the Wick cap {WICK_MAX_LENGTH}")
    for m, _ in ops:
        if not 0 <= m < state.n_modes:
            raise IndexError(f"mode {m} out of range")
    if len(ops) % 2:
        return 0j
    T = state.contraction_table() if table is None else table
    return complex(_pfaffians_of_words(T, _word_indices(ops)[None, :])[0])


def wick_expect_many(state: QuasiFreeState, words: Sequence[Sequence[tuple[int, bool]]]) -> np.ndarray:
    """Vectorized :func:`wick_expect` over many words of mixed length."""
    T = state.contraction_table()
    out = np.zeros(len(words), dtype=complex)
    by_len: dict[int, list[int]] = {}
    for i, w in enumerate(words):
        if len(w) > WICK_MAX_LENGTH:
            raise ValidationError(
                f"monomial length {len(w)} exceeds the Wick cap {WICK_MAX_LENGTH}")
        by_len.setdefault(len(w), []).append(i)
    for k, idx in by_len.items():
        W = np.array([_word_indices(words[i]) for i in idx], dtype=np.int64).reshape(len(idx), k)
        out[idx] = _pfaffians_of_words(T, W)
    return out


def polynomial_expect(state: QuasiFreeState, terms: Sequence[Term]) -> complex:
    """``sum_k coeff_k <word_k>`` in a quasi-free state."""
    if not terms:
        return 0j
    coeffs = np.array([c for c, _ in terms], dtype=complex)
    return complex(coeffs @ wick_expect_many(state, [w for _, w in terms]))


@dataclass(frozen=True)
class OdlroTable:
    separations: np.ndarray
    correlations: np.ndarray
    plateau: np.ndarray
    deviations: np.ndarray
    envelope: np.ndarray
    kind: str

    def deviation_at(self, d: int) -> float:
        return float(self.deviations[list(self.separations).index(d)])


def _pair_word(spec, x, y):
    # P^+(x) P(y)
    return ((spec.mode(x, UP), True), (spec.mode(x, DOWN), True),
            (spec.mode(y, DOWN), False), (spec.mode(y, UP), False))


def odlro_scan(state: QuasiFreeState, spec: JunctionSpec, region="1",
               ref_site: int = 0) -> OdlroTable:
    """Pair correlation ``C(d) = <P^+(x) P(x+d)>`` against its condensate plateau.

    ``region`` is ``1``, ``2`` or ``"cross"``.  Within a region ``x`` is
    ``ref_site`` of that region; periodic regions are scanned to ``M // 2``.
    For ``"cross"`` the correlation is ``<P^+(y) P(x)>`` with ``x`` in region
    1 and ``y`` in region 2, whose plateau is ``conj(Psi_2) Psi_1``.
    """
    region = str(region)
    on_site = np.array([state.F[spec.mode(s, DOWN), spec.mode(s, UP)]
                        for s in range(spec.n_sites)])
    if region in ("1", "2"):
        sites = list(spec.sites(int(region)))
        M = len(sites)
        if not 0 <= ref_site < M:
            raise IndexError(f"ref_site {ref_site} outside region {region}")
        x = sites[ref_site]
        if spec.boundary == "periodic":
            seps = np.arange(0, M // 2 + 1)
            ys = [sites[(ref_site + d) % M] for d in seps]
        else:
            seps = np.arange(0, M - ref_site)
            ys = [sites[ref_site + d] for d in seps]
        words = [_pair_word(spec, x, y) for y in ys]
        plateau = np.conj(on_site[x]) * on_site[ys]
    elif region == "cross":
        x = list(spec.sites(1))[ref_site]
        ys = list(spec.sites(2))
        seps = np.array([y - x for y in ys])
        words = [_pair_word(spec, y, x) for y in ys]
        plateau = np.conj(on_site[ys]) * on_site[x]
    else:
        raise ValueError(f"region must be 1, 2 or 'cross', got {region!r}")
    corr = wick_expect_many(state, words)
    dev = np.abs(corr - plateau)
    envelope = np.maximum.accumulate(dev[::-1])[::-1]
    return OdlroTable(np.asarray(seps), corr, np.asarray(plateau), dev, envelope,
                      "cross" if region == "cross" else f"region{region}")


def pair_creation_terms(spec: JunctionSpec, sol: BcsSolution, region: int, n: int) -> list[Term]:
    """``b+_{n up} b+_{n dn}`` for orbital ``n`` in position-space modes."""
    phi = sol.orbitals[:, n]
    sites = list(spec.sites(region))
    terms = []
    for i, x in enumerate(sites):
        for j, y in enumerate(sites):
            c = phi[i] * phi[j]
            if c != 0:
                terms.append((c, ((spec.mode(x, UP), True), (spec.mode(y, DOWN), True))))
    return terms


def embed_product_state(sol1: BcsSolution, sol2: BcsSolution, spec: JunctionSpec,
                        basis: FockBasis | None = None) -> StateVector:
    """Expand ``prod_n (u_n + v_n e^{i theta} b+_{n up} b+_{n dn}) |0>`` per region."""
    basis = spec.basis() if basis is None else basis
    if basis.n_modes != spec.n_modes:
        raise StructuralError(f"basis has {basis.n_modes} modes, spec needs {spec.n_modes}")
    vec = np.zeros(basis.dimension, dtype=complex)
    vec[0] = 1.0
    for region, sol in ((1, sol1), (2, sol2)):
        _region_blocks(sol, spec, region)
        phase = np.exp(1j * sol.theta)
        for n in range(sol.n_sites):
            if sol.v[n] == 0:
                vec = sol.u[n] * vec
                continue
            pair = polynomial_operator(basis, pair_creation_terms(spec, sol, region, n))
            vec = sol.u[n] * vec + sol.v[n] * phase * (pair.matrix @ vec)
    return StateVector(basis, vec)
