"""Exact Fock-space representation of a finite set of fermionic modes.

Basis states are bit patterns: bit ``j`` of the basis index is set when mode
``j`` is occupied.  Creation and annihilation operators follow the
Jordan-Wigner sign rule: acting with mode ``j`` picks up
``(-1)**(number of occupied modes with index < j)``.

Operators are stored as complex CSR matrices (``scipy.sparse``) wrapped in
:class:`SparseOperator`, which tracks the basis it acts on.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from ._backend import kernels
from .errors import CapacityError, StructuralError, ValidationError

MAX_MODES = 24
HERMITIAN_ATOL = 1e-12
NORM_ATOL = 1e-8

CREATION = "creation"
ANNIHILATION = "annihilation"

# A ladder operator is (mode, dagger); a word is an ordered product of them.
Ladder = tuple[int, bool]
Word = tuple[Ladder, ...]


@dataclass(frozen=True)
class FockBasis:
    """Occupation-number basis over ``n_modes`` fermionic modes.

    ``labels`` optionally names each mode (e.g. ``(region, site, spin)``) and
    fixes the mode order once and for all.
    """

    n_modes: int
    labels: tuple | None = None

    def __post_init__(self):
        if self.labels is not None and len(self.labels) != self.n_modes:
            raise ValidationError(
                f"{len(self.labels)} labels given for {self.n_modes} modes")

    @property
    def dimension(self) -> int:
        return 1 << self.n_modes

    def index_of(self, occupied: Iterable[int]) -> int:
        idx = 0
        for m in occupied:
            self._check_mode(m)
            idx |= 1 << m
        return idx

    def occupation(self, index: int) -> tuple[int, ...]:
        return tuple(j for j in range(self.n_modes) if (index >> j) & 1)

    def _check_mode(self, mode: int):
        if not 0 <= mode < self.n_modes:
            raise IndexError(f"mode {mode} out of range for {self.n_modes} modes")


def build_basis(n_modes: int, cap: int = MAX_MODES, labels=None) -> FockBasis:
    """Construct the ``2**n_modes`` dimensional occupation basis.

    Raises :class:`CapacityError` above ``cap`` modes.
    """
    if n_modes < 1:
        raise ValidationError(f"n_modes must be >= 1, got {n_modes}")
    if n_modes > cap:
        raise CapacityError(
            f"requested Fock dimension 2**{n_modes} = {1 << n_modes} exceeds "
            f"the cap 2**{cap}")
    return FockBasis(n_modes, tuple(labels) if labels is not None else None)


class SparseOperator:
    """Linear operator on a :class:`FockBasis`.

    The ``hermitian`` flag is a claim made by the constructor of the operator;
    :meth:`verify_hermitian` checks it against the stored entries.
    """

    __slots__ = ("basis", "matrix", "hermitian")

    def __init__(self, basis: FockBasis, matrix, hermitian: bool = False):
        m = sp.csr_matrix(matrix, dtype=complex)
        if m.shape != (basis.dimension, basis.dimension):
            raise StructuralError(
                f"matrix shape {m.shape} does not match dimension {basis.dimension}")
        m.sum_duplicates()
        m.eliminate_zeros()
        self.basis = basis
        self.matrix = m
        self.hermitian = bool(hermitian)

    @classmethod
    def identity(cls, basis):
        return cls(basis, sp.identity(basis.dimension, dtype=complex, format="csr"), True)

    @classmethod
    def zero(cls, basis):
        return cls(basis, sp.csr_matrix((basis.dimension, basis.dimension), dtype=complex), True)

    @classmethod
    def diagonal(cls, basis, values):
        values = np.asarray(values, dtype=complex)
        return cls(basis, sp.diags(values, format="csr"), bool(np.all(values.imag == 0)))

    def _same_basis(self, other: "SparseOperator"):
        if not isinstance(other, SparseOperator):
            raise StructuralError(f"expected SparseOperator, got {type(other).__name__}")
        if other.basis != self.basis:
            raise StructuralError("operators act on different bases")

    def adjoint(self) -> "SparseOperator":
        return SparseOperator(self.basis, self.matrix.conj().T.tocsr(), self.hermitian)

    def __add__(self, other):
        self._same_basis(other)
        return SparseOperator(self.basis, self.matrix + other.matrix,
                              self.hermitian and other.hermitian)

    def __sub__(self, other):
        self._same_basis(other)
        return SparseOperator(self.basis, self.matrix - other.matrix,
                              self.hermitian and other.hermitian)

    def __neg__(self):
        return SparseOperator(self.basis, -self.matrix, self.hermitian)

    def scale(self, c) -> "SparseOperator":
        c = complex(c)
        return SparseOperator(self.basis, self.matrix * c, self.hermitian and c.imag == 0)

    def __mul__(self, c):
        if isinstance(c, SparseOperator):
            return NotImplemented
        return self.scale(c)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            self._same_basis(other)
            return SparseOperator(self.basis, self.matrix @ other.matrix)
        if isinstance(other, StateVector):
            if other.basis != self.basis:
                raise StructuralError("operator and state act on different bases")
            return self.matrix @ other.amplitudes
        return self.matrix @ np.asarray(other)

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def max_abs(self) -> float:
        """Largest entry magnitude (the max norm)."""
        return float(np.abs(self.matrix.data).max()) if self.matrix.nnz else 0.0

    def hermiticity_defect(self) -> float:
        return (self - self.adjoint()).max_abs()

    def verify_hermitian(self, atol: float = HERMITIAN_ATOL) -> float:
        defect = self.hermiticity_defect()
        if defect >= atol:
            raise ValidationError(f"operator is not hermitian: max|A - A^+| = {defect:.3e}")
        return defect

    def __repr__(self):
        return (f"SparseOperator(dim={self.basis.dimension}, nnz={self.nnz}, "
                f"hermitian={self.hermitian})")


def commutator(A: SparseOperator, B: SparseOperator) -> SparseOperator:
    return (A @ B) - (B @ A)


def anticommutator(A: SparseOperator, B: SparseOperator) -> SparseOperator:
    return (A @ B) + (B @ A)


def op_algebra(A: SparseOperator, B: SparseOperator | None, op: str, c=None) -> SparseOperator:
    """Dispatch a named algebra operation; ``scale`` uses ``c``, ``adjoint`` ignores ``B``."""
    if op == "adjoint":
        return A.adjoint()
    if op == "scale":
        return A.scale(c)
    if B is None:
        raise StructuralError(f"operation {op!r} needs two operands")
    A._same_basis(B)
    if op == "add":
        return A + B
    if op == "mul":
        return A @ B
    if op == "commutator":
        return commutator(A, B)
    if op == "anticommutator":
        return anticommutator(A, B)
    raise ValueError(f"unknown operation {op!r}")


def _coo_of_word(word: Sequence[Ladder], n_modes: int):
    modes = np.fromiter((m for m, _ in word), dtype=np.int64, count=len(word))
    daggers = np.fromiter((d for _, d in word), dtype=np.int8, count=len(word))
    targets, signs = kernels.apply_word(modes, daggers, n_modes)
    cols = np.flatnonzero(signs)
    return targets[cols], cols, signs[cols].astype(float)


def word_operator(basis: FockBasis, word: Sequence[Ladder], coeff=1.0) -> SparseOperator:
    """Matrix of ``coeff * c_0 c_1 ... c_{k-1}`` for a ladder word."""
    for m, _ in word:
        basis._check_mode(m)
    if not word:
        return SparseOperator.identity(basis).scale(coeff)
    rows, cols, vals = _coo_of_word(word, basis.n_modes)
    mat = sp.csr_matrix((vals * coeff, (rows, cols)),
                        shape=(basis.dimension, basis.dimension), dtype=complex)
    return SparseOperator(basis, mat)


def polynomial_operator(basis: FockBasis, terms: Iterable[tuple[complex, Word]],
                        hermitian: bool = False) -> SparseOperator:
    """Assemble ``sum_k coeff_k * word_k`` in a single sparse build."""
    rows, cols, vals = [], [], []
    diag = np.zeros(basis.dimension, dtype=complex)
    for coeff, word in terms:
        if coeff == 0:
            continue
        for m, _ in word:
            basis._check_mode(m)
        if not word:
            diag += coeff
            continue
        r, c, v = _coo_of_word(word, basis.n_modes)
        rows.append(r)
        cols.append(c)
        vals.append(v * coeff)
    dim = basis.dimension
    if rows:
        mat = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                            shape=(dim, dim), dtype=complex)
    else:
        mat = sp.csr_matrix((dim, dim), dtype=complex)
    if diag.any():
        mat = mat + sp.diags(diag, format="csr")
    return SparseOperator(basis, mat, hermitian)


def apply_word_to_vector(word: Sequence[Ladder], vec: np.ndarray, n_modes: int) -> np.ndarray:
    """``word @ vec`` without building a matrix (the word is a signed partial permutation)."""
    out = np.zeros_like(vec)
    if not word:
        out[:] = vec
        return out
    rows, cols, vals = _coo_of_word(word, n_modes)
    out[rows] = vals * vec[cols]
    return out


def ladder_op(basis: FockBasis, mode: int, kind: str) -> SparseOperator:
    """Creation or annihilation operator for ``mode``."""
    if kind not in (CREATION, ANNIHILATION):
        raise ValueError(f"kind must be {CREATION!r} or {ANNIHILATION!r}, got {kind!r}")
    basis._check_mode(mode)
    return word_operator(basis, [(mode, kind == CREATION)])


def number_op(basis: FockBasis, modes: Iterable[int] | None = None) -> SparseOperator:
    """Diagonal particle-number operator summed over ``modes`` (default: all)."""
    modes = range(basis.n_modes) if modes is None else list(modes)
    idx = np.arange(basis.dimension, dtype=np.int64)
    counts = np.zeros(basis.dimension)
    for m in modes:
        basis._check_mode(m)
        counts += (idx >> m) & 1
    return SparseOperator.diagonal(basis, counts)


class StateVector:
    """Normalized amplitude vector over a :class:`FockBasis`."""

    __slots__ = ("basis", "amplitudes")

    def __init__(self, basis: FockBasis, amplitudes, normalize: bool = False,
                 atol: float = 1e-10):
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (basis.dimension,):
            raise StructuralError(
                f"amplitude vector of length {amps.size} for dimension {basis.dimension}")
        norm = np.linalg.norm(amps)
        if normalize:
            if norm == 0:
                raise ValidationError("cannot normalize the zero vector")
            amps /= norm
        elif abs(norm - 1.0) > atol:
            raise ValidationError(f"state is not normalized: |v| = {norm!r}")
        amps.flags.writeable = False
        self.basis = basis
        self.amplitudes = amps

    @classmethod
    def basis_state(cls, basis: FockBasis, occupied: Iterable[int] = ()):
        amps = np.zeros(basis.dimension, dtype=complex)
        amps[basis.index_of(occupied)] = 1.0
        return cls(basis, amps)

    @classmethod
    def vacuum(cls, basis: FockBasis):
        return cls.basis_state(basis, ())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "StateVector") -> complex:
        if other.basis != self.basis:
            raise StructuralError("states live on different bases")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __repr__(self):
        return f"StateVector(dim={self.basis.dimension})"


def expectation(A: SparseOperator, v: StateVector) -> complex:
    """``<v|A|v>`` for a normalized state."""
    if A.basis != v.basis:
        raise StructuralError("operator and state act on different bases")
    norm = np.linalg.norm(v.amplitudes)
    if abs(norm - 1.0) > NORM_ATOL:
        raise ValidationError(f"expectation needs a normalized state, |v| = {norm!r}")
    return complex(np.vdot(v.amplitudes, A.matrix @ v.amplitudes))


def car_defect(basis: FockBasis) -> float:
    """Max-norm violation of the canonical anticommutation relations.

    Checks ``{a_i, a+_j} = delta_ij`` and ``{a_i, a_j} = 0`` for all pairs.
    """
    n = basis.n_modes
    ann = [ladder_op(basis, m, ANNIHILATION) for m in range(n)]
    cre = [a.adjoint() for a in ann]
    one = SparseOperator.identity(basis)
    worst = 0.0
    for i in range(n):
        for j in range(i, n):
            target = one if i == j else SparseOperator.zero(basis)
            worst = max(worst,
                        (anticommutator(ann[i], cre[j]) - target).max_abs(),
                        anticommutator(ann[i], ann[j]).max_abs())
            if i != j:
                worst = max(worst, anticommutator(ann[j], cre[i]).max_abs())
    return float(worst)
