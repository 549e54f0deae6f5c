"""Two-region lattice junction: Hamiltonian split, charges and current.

Sites of region 1 come first, then region 2; each site carries an up and a
down mode, so mode ``2*s + spin`` belongs to global site ``s``.

The pairing kernel is separable, real and on-site.  Summing the quartic
term over both spin orderings of the pair gives ``2 P^+ P`` with
``P = sum_x a_{x,dn} a_{x,up}``, so

    H_r  = -t sum_<xy>,s (a+_xs a_ys + h.c.) - mu sum n_xs - (2 g_rr / V) P_r^+ P_r
    H_12 = -(2 g_12 / V) (P_1^+ P_2 + P_2^+ P_1)  [ - t_W (boundary hop) ]

with ``V = volume_norm``.  Charge is ``Q = -|e| N``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Iterable

import numpy as np

from .errors import ModelInconsistencyError, StructuralError, ValidationError
from .fock import (FockBasis, SparseOperator, Word, build_basis, commutator,
                   number_op, polynomial_operator)

UP, DOWN = 0, 1
PAIR_SPIN_MULTIPLICITY = 2
IDENTITY_ATOL = 1e-12
CURRENT_RESIDUAL_LIMIT = 1e-10

Term = tuple[complex, Word]


@dataclass(frozen=True)
class JunctionSpec:
    """Parameters of the two-region junction.

    ``cross_hop`` adds single-particle hopping across the boundary between
    the last site of region 1 and the first site of region 2; it is zero for
    an ideal phase boundary.
    """

    L1: int
    L2: int
    t_hop: float = 1.0
    mu: float = 0.0
    g11: float = 0.0
    g22: float = 0.0
    g12: float = 0.0
    volume_norm: float | None = None
    charge_unit: float = 1.0
    boundary: str = "open"
    cross_hop: float = 0.0

    def __post_init__(self):
        errors = self.validation_errors()
        if errors:
            raise ValidationError("; ".join(errors))
        if self.volume_norm is None:
            object.__setattr__(self, "volume_norm", float(self.L1 + self.L2))

    def validation_errors(self) -> list[str]:
        errs = []
        for name in ("L1", "L2"):
            val = getattr(self, name)
            if not isinstance(val, (int, np.integer)) or val < 1:
                errs.append(f"{name} must be a positive integer, got {val!r}")
        for name in ("t_hop", "mu", "g11", "g22", "g12", "charge_unit", "cross_hop"):
            val = getattr(self, name)
            if isinstance(val, complex) or not np.isfinite(val):
                errs.append(f"{name} must be a finite real, got {val!r}")
        if self.g11 < 0 or self.g22 < 0:
            errs.append("intra-region couplings g11, g22 must be >= 0")
        if self.volume_norm is not None and not self.volume_norm > 0:
            errs.append(f"volume_norm must be > 0, got {self.volume_norm!r}")
        if not self.charge_unit > 0:
            errs.append(f"charge_unit must be > 0, got {self.charge_unit!r}")
        if self.boundary not in ("open", "periodic"):
            errs.append(f"boundary must be 'open' or 'periodic', got {self.boundary!r}")
        return errs

    @property
    def n_sites(self) -> int:
        return self.L1 + self.L2

    @property
    def n_modes(self) -> int:
        return 2 * self.n_sites

    def sites(self, region: int) -> range:
        if region == 1:
            return range(0, self.L1)
        if region == 2:
            return range(self.L1, self.n_sites)
        raise ValueError(f"region must be 1 or 2, got {region!r}")

    def region_size(self, region: int) -> int:
        return len(self.sites(region))

    def mode(self, site: int, spin: int) -> int:
        return 2 * site + spin

    def modes(self, region) -> list[int]:
        if region == "both":
            return list(range(self.n_modes))
        return [self.mode(s, spin) for s in self.sites(region) for spin in (UP, DOWN)]

    def region_of_mode(self, mode: int) -> int:
        return 1 if mode // 2 < self.L1 else 2

    def pair_coupling(self, region_a: int, region_b: int) -> float:
        g = {(1, 1): self.g11, (2, 2): self.g22}.get((region_a, region_b), self.g12)
        return PAIR_SPIN_MULTIPLICITY * g / self.volume_norm

    def mode_labels(self) -> list[tuple]:
        return [(self.region_of_mode(m), (m // 2) - (0 if m // 2 < self.L1 else self.L1),
                 "up" if m % 2 == UP else "dn") for m in range(self.n_modes)]

    def basis(self, cap: int | None = None) -> FockBasis:
        kwargs = {} if cap is None else {"cap": cap}
        return build_basis(self.n_modes, labels=self.mode_labels(), **kwargs)

    def as_dict(self) -> dict:
        return asdict(self)


def region_hopping_matrix(M: int, t_hop: float, boundary: str) -> np.ndarray:
    """Single-particle hopping matrix of an ``M``-site chain.

    The periodic bond ``(M-1, 0)`` is added only for ``M >= 3``; shorter
    chains have no distinct wrap-around bond.
    """
    h = np.zeros((M, M))
    for x in range(M - 1):
        h[x, x + 1] = h[x + 1, x] = -t_hop
    if boundary == "periodic" and M >= 3:
        h[0, M - 1] = h[M - 1, 0] = -t_hop
    return h


def pair_annihilation_terms(spec: JunctionSpec, region: int) -> list[Term]:
    """``P_r = sum_x a_{x,dn} a_{x,up}`` as a list of terms."""
    return [(1.0, ((spec.mode(x, DOWN), False), (spec.mode(x, UP), False)))
            for x in spec.sites(region)]


def _pair_product_terms(spec, ra, rb, coeff) -> list[Term]:
    # coeff * P_ra^+ P_rb
    terms = []
    for x in spec.sites(ra):
        for y in spec.sites(rb):
            word = ((spec.mode(x, UP), True), (spec.mode(x, DOWN), True),
                    (spec.mode(y, DOWN), False), (spec.mode(y, UP), False))
            terms.append((coeff, word))
    return terms


def _region_terms(spec: JunctionSpec, region: int) -> list[Term]:
    terms: list[Term] = []
    sites = list(spec.sites(region))
    hop = region_hopping_matrix(len(sites), spec.t_hop, spec.boundary)
    for i, x in enumerate(sites):
        for j, y in enumerate(sites):
            if hop[i, j] != 0:
                for spin in (UP, DOWN):
                    terms.append((hop[i, j], ((spec.mode(x, spin), True),
                                              (spec.mode(y, spin), False))))
        if spec.mu != 0:
            for spin in (UP, DOWN):
                m = spec.mode(x, spin)
                terms.append((-spec.mu, ((m, True), (m, False))))
    g = spec.pair_coupling(region, region)
    if g != 0:
        terms += _pair_product_terms(spec, region, region, -g)
    return terms


def _junction_terms(spec: JunctionSpec) -> list[Term]:
    terms: list[Term] = []
    g = spec.pair_coupling(1, 2)
    if g != 0:
        terms += _pair_product_terms(spec, 1, 2, -g)
        terms += _pair_product_terms(spec, 2, 1, -g)
    if spec.cross_hop != 0:
        x, y = spec.L1 - 1, spec.L1
        for spin in (UP, DOWN):
            a, b = spec.mode(x, spin), spec.mode(y, spin)
            terms.append((-spec.cross_hop, ((a, True), (b, False))))
            terms.append((-spec.cross_hop, ((b, True), (a, False))))
    return terms


def hamiltonian_terms(spec: JunctionSpec) -> dict[str, list[Term]]:
    """Symbolic form of the split: keys ``H1``, ``H2``, ``H12``."""
    return {"H1": _region_terms(spec, 1), "H2": _region_terms(spec, 2),
            "H12": _junction_terms(spec)}


@dataclass(frozen=True)
class HamiltonianSplit:
    H_total: SparseOperator
    H1: SparseOperator
    H2: SparseOperator
    H12: SparseOperator
    terms: dict = field(repr=False, default_factory=dict)

    def parts(self) -> dict[str, SparseOperator]:
        return {"H_total": self.H_total, "H1": self.H1, "H2": self.H2, "H12": self.H12}

    def split_defect(self) -> float:
        return (self.H_total - (self.H1 + self.H2 + self.H12)).max_abs()


def _check_basis(spec: JunctionSpec, basis: FockBasis):
    if basis.n_modes != spec.n_modes:
        raise StructuralError(
            f"basis has {basis.n_modes} modes, spec needs {spec.n_modes}")


def build_hamiltonian(spec: JunctionSpec, basis: FockBasis | None = None) -> HamiltonianSplit:
    """Assemble ``H_total = H1 + H2 + H12`` on the Fock space."""
    basis = spec.basis() if basis is None else basis
    _check_basis(spec, basis)
    terms = hamiltonian_terms(spec)
    parts = {k: polynomial_operator(basis, v, hermitian=True) for k, v in terms.items()}
    total = polynomial_operator(basis, terms["H1"] + terms["H2"] + terms["H12"], hermitian=True)
    return HamiltonianSplit(total, parts["H1"], parts["H2"], parts["H12"], terms)


def charge_op(spec: JunctionSpec, basis: FockBasis, region=1) -> SparseOperator:
    """``Q(region) = -|e| N(region)``; ``region`` is 1, 2 or ``"both"``."""
    _check_basis(spec, basis)
    return number_op(basis, spec.modes(region)).scale(-spec.charge_unit)


def charge_shift(spec: JunctionSpec, word: Word, region: int = 1) -> int:
    """Net number of particles ``word`` adds to ``region``."""
    return sum((1 if dag else -1) for m, dag in word if spec.region_of_mode(m) == region)


def current_terms(spec: JunctionSpec, terms: Iterable[Term] | None = None) -> list[Term]:
    """Symbolic ``[i H, Q_1]``.

    A word adding ``k`` particles to region 1 satisfies ``[W, N_1] = -k W``,
    hence ``[i W, Q_1] = i |e| k W``.
    """
    if terms is None:
        parts = hamiltonian_terms(spec)
        terms = parts["H1"] + parts["H2"] + parts["H12"]
    out = []
    for coeff, word in terms:
        k = charge_shift(spec, word, 1)
        if k:
            out.append((1j * spec.charge_unit * k * coeff, word))
    return out


def current_op(split: HamiltonianSplit, Q1: SparseOperator, return_residual: bool = False):
    """Tunneling-current operator ``[i H_total, Q_1]``.

    The same commutator built from ``H12`` alone must agree; the max-norm
    difference is the residual.  Above ``CURRENT_RESIDUAL_LIMIT`` some
    regional term fails to conserve regional charge and
    :class:`ModelInconsistencyError` is raised.
    """
    J = commutator(split.H_total.scale(1j), Q1)
    J12 = commutator(split.H12.scale(1j), Q1)
    residual = (J - J12).max_abs()
    if residual > CURRENT_RESIDUAL_LIMIT:
        raise ModelInconsistencyError(
            f"[iH, Q1] and [iH12, Q1] differ by {residual:.3e}; a regional term "
            "does not conserve regional charge")
    J = SparseOperator(J.basis, J.matrix, hermitian=True)
    return (J, residual) if return_residual else J


def verify_conservation(split: HamiltonianSplit, spec: JunctionSpec,
                        basis: FockBasis) -> dict[str, float]:
    """Max-norm commutators of each Hamiltonian part with its charge."""
    Q = charge_op(spec, basis, "both")
    Q1 = charge_op(spec, basis, 1)
    Q2 = charge_op(spec, basis, 2)
    return {
        "total": commutator(split.H_total, Q).max_abs(),
        "region1": commutator(split.H1, Q1).max_abs(),
        "region2": commutator(split.H2, Q2).max_abs(),
        "H12_total": commutator(split.H12, Q).max_abs(),
        "total_vs_region1": commutator(split.H_total, Q1).max_abs(),
    }


def gauge_rotation(spec: JunctionSpec, basis: FockBasis, phi: float, region: int = 1) -> SparseOperator:
    """Diagonal unitary ``exp(i phi N(region))``."""
    _check_basis(spec, basis)
    counts = number_op(basis, spec.modes(region)).matrix.diagonal().real
    return SparseOperator.diagonal(basis, np.exp(1j * phi * counts))


def random_spec(rng: np.random.Generator, max_modes: int = 12, **overrides) -> JunctionSpec:
    """Random valid spec with at most ``max_modes`` modes (for property checks)."""
    max_sites = max_modes // 2
    L1 = int(rng.integers(1, max_sites))
    L2 = int(rng.integers(1, max_sites - L1 + 1))
    params = dict(
        L1=L1, L2=L2,
        t_hop=float(rng.uniform(-1.5, 1.5)),
        mu=float(rng.uniform(-1.0, 1.0)),
        g11=float(rng.uniform(0.0, 2.0)),
        g22=float(rng.uniform(0.0, 2.0)),
        g12=float(rng.uniform(-1.0, 1.0)),
        charge_unit=float(rng.uniform(0.5, 2.0)),
        boundary=str(rng.choice(["open", "periodic"])),
    )
    params.update(overrides)
    return JunctionSpec(**params)
