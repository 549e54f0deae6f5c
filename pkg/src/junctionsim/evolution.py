"""Real-time evolution ``i d|v>/dt = H(t)|v>`` on a Fock space.

Two routes:

* ``krylov`` (default) - adaptive-step Lanczos exponentiation.  Constant
  Hamiltonians are exponentiated directly; time-dependent ones use the
  fourth-order two-point Magnus step with step-doubling error control.
* ``dense`` - exact propagator from a full eigendecomposition, for constant
  Hamiltonians up to ``DENSE_MAX_DIM``.  This is the oracle for the Krylov
  path.
"""
from __future__ import annotations

import logging
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal

from .errors import IntegrationError, StructuralError, ValidationError
from .fock import SparseOperator, StateVector

log = logging.getLogger(__name__)

DENSE_MAX_DIM = 1 << 12
_EPS_STEP = 1e-14
_SQRT3 = np.sqrt(3.0)
_GL_LO, _GL_HI = 0.5 - _SQRT3 / 6.0, 0.5 + _SQRT3 / 6.0


def _lanczos_expm(H, v, dt, tol, m_max):
    """``exp(-i dt H) v`` in a Krylov space; returns ``(w, err)`` or ``(None, err)``."""
    n = v.shape[0]
    beta0 = np.linalg.norm(v)
    if beta0 == 0.0:
        return v.copy(), 0.0
    m_max = min(m_max, n)
    V = np.empty((m_max + 1, n), dtype=complex)
    V[0] = v / beta0
    alpha, beta = [], []
    err = np.inf
    for j in range(m_max):
        w = H @ V[j]
        a = float(np.vdot(V[j], w).real)
        # full reorthogonalization; m_max is small
        w = w - V[:j + 1].T @ (V[:j + 1].conj() @ w)
        w = w - V[:j + 1].T @ (V[:j + 1].conj() @ w)
        b = float(np.linalg.norm(w))
        alpha.append(a)
        if j == 0:
            evals, evecs = np.array([a]), np.ones((1, 1))
        else:
            evals, evecs = eigh_tridiagonal(np.array(alpha), np.array(beta))
        c = evecs @ (np.exp(-1j * dt * evals) * evecs[0])
        err = b * abs(c[-1])
        if err < tol or b < 1e-13 * max(1.0, abs(a)) or j + 1 == n:
            return beta0 * (V[:j + 1].T @ c), err
        beta.append(b)
        V[j + 1] = w / b
    return None, err


def propagate_many(H: SparseOperator, v: np.ndarray, dts: Sequence[float], tol: float = 1e-12,
                   m_max: int = 60) -> list[np.ndarray]:
    """``exp(-i dt H) v`` for several (possibly negative) short times.

    All times share one Krylov space, built until the error estimate for
    the largest ``|dt|`` drops below ``tol``.
    """
    dts = list(dts)
    dmax = max(abs(d) for d in dts)
    Hm = H.matrix if isinstance(H, SparseOperator) else H
    beta0 = np.linalg.norm(v)
    n = v.shape[0]
    m_max = min(m_max, n)
    V = np.empty((m_max + 1, n), dtype=complex)
    V[0] = v / beta0
    alpha, beta = [], []
    for j in range(m_max):
        w = Hm @ V[j]
        alpha.append(float(np.vdot(V[j], w).real))
        w = w - V[:j + 1].T @ (V[:j + 1].conj() @ w)
        w = w - V[:j + 1].T @ (V[:j + 1].conj() @ w)
        b = float(np.linalg.norm(w))
        if j == 0:
            evals, evecs = np.array(alpha), np.ones((1, 1))
        else:
            evals, evecs = eigh_tridiagonal(np.array(alpha), np.array(beta))
        c = evecs @ (np.exp(-1j * dmax * evals) * evecs[0])
        if b * abs(c[-1]) < tol or b < 1e-13 * max(1.0, abs(alpha[-1])) or j + 1 == n:
            basis = V[:j + 1].T
            return [beta0 * (basis @ (evecs @ (np.exp(-1j * d * evals) * evecs[0])))
                    for d in dts]
        beta.append(b)
        V[j + 1] = w / b
    raise IntegrationError(
        f"Krylov space of size {m_max} insufficient for |dt| = {dmax:.3e} at tol {tol:.1e}")


def _check_hermitian(H: SparseOperator):
    if not isinstance(H, SparseOperator):
        raise StructuralError(f"Hamiltonian must be a SparseOperator, got {type(H).__name__}")
    try:
        H.verify_hermitian()
    except ValidationError as exc:
        raise ValidationError(f"evolve needs a hermitian Hamiltonian: {exc}") from None


class _Stepper:
    def __init__(self, tol, m_max, min_step):
        self.tol = tol
        self.m_max = m_max
        self.min_step = min_step
        self.steps = 0
        self.rejected = 0

    def _fail(self, t, dt, err):
        raise IntegrationError(
            f"step size underflow at t={t:.6g}: dt={dt:.3e} < {self.min_step:.1e}, "
            f"last error estimate {err:.3e} (tol {self.tol:.1e}, "
            f"{self.steps} accepted / {self.rejected} rejected steps)")

    def constant(self, Hm, v, t0, t1, dt=None):
        t = t0
        dt = dt or (t1 - t0)
        last = dt
        while t < t1:
            final = dt >= t1 - t
            dt = min(dt, t1 - t)
            w, err = _lanczos_expm(Hm, v, dt, max(self.tol * dt, _EPS_STEP), self.m_max)
            if w is None:
                self.rejected += 1
                dt *= 0.5
                if dt < self.min_step:
                    self._fail(t, dt, err)
                continue
            v, t = w, (t1 if final else t + dt)
            self.steps += 1
            last = dt
            dt *= 2.0
        return v, last

    def magnus4(self, Hfun, v, t0, t1, dt=None):
        def expo(vec, ta, h):
            # Gauss-Legendre nodes; Omega = -i h [(H1 + H2)/2 - i (sqrt3 h / 12) [H2, H1]]
            H1 = Hfun(ta + _GL_LO * h)
            H2 = Hfun(ta + _GL_HI * h)
            _check_hermitian(H1)
            _check_hermitian(H2)
            m1, m2 = H1.matrix, H2.matrix
            heff = 0.5 * (m1 + m2) - 1j * (_SQRT3 * h / 12.0) * (m2 @ m1 - m1 @ m2)
            return self.constant(heff, vec, 0.0, h)[0]

        t = t0
        dt = dt or (t1 - t0)
        last = dt
        while t < t1:
            final = dt >= t1 - t
            dt = min(dt, t1 - t)
            full = expo(v, t, dt)
            half = expo(expo(v, t, 0.5 * dt), t + 0.5 * dt, 0.5 * dt)
            err = float(np.linalg.norm(half - full)) / 15.0
            local_tol = max(self.tol * dt, _EPS_STEP)
            if err <= local_tol:
                v, t = half, (t1 if final else t + dt)
                self.steps += 1
                fac = 2.0 if err == 0 else min(2.0, 0.9 * (local_tol / err) ** 0.2)
                last = dt
                dt *= max(fac, 0.5)
            else:
                self.rejected += 1
                dt *= max(0.2, 0.9 * (local_tol / err) ** 0.2)
                if dt < self.min_step:
                    self._fail(t, dt, err)
        return v, last


def evolve(v: StateVector,
           H: SparseOperator | Callable[[float], SparseOperator],
           t_grid: Sequence[float],
           tol: float = 1e-10,
           method: str = "krylov",
           m_max: int = 40,
           min_step: float = 1e-12) -> list[StateVector]:
    """Integrate the Schrodinger equation and return the state at each grid time.

    Parameters
    ----------
    v : StateVector
        State at ``t_grid[0]``.
    H : SparseOperator or callable
        Constant Hamiltonian, or ``H(t)`` returning one.  Must be hermitian.
    t_grid : sequence of float
        Strictly increasing output times.
    tol : float
        Error budget per unit time, applied to the state vector norm.
    method : {"krylov", "dense"}
        ``dense`` requires a constant ``H`` with dimension <= ``DENSE_MAX_DIM``.

    Returns
    -------
    list of StateVector
        One entry per grid time; the first is ``v`` itself.
    """
    if tol <= 0:
        raise ValidationError(f"tol must be positive, got {tol}")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ValidationError("t_grid must be a non-empty 1-d sequence")
    if np.any(np.diff(t_grid) <= 0):
        raise ValidationError("t_grid must be strictly increasing")
    constant = isinstance(H, SparseOperator)
    if constant:
        _check_hermitian(H)
        if H.basis != v.basis:
            raise StructuralError("Hamiltonian and state act on different bases")

    if method == "dense":
        if not constant:
            raise ValidationError("dense propagation needs a constant Hamiltonian")
        if v.basis.dimension > DENSE_MAX_DIM:
            raise ValidationError(
                f"dense propagation limited to dimension {DENSE_MAX_DIM}, "
                f"got {v.basis.dimension}")
        return _evolve_dense(v, H, t_grid)
    if method != "krylov":
        raise ValueError(f"unknown method {method!r}")

    stepper = _Stepper(tol, m_max, min_step)
    out = [v]
    vec = v.amplitudes.copy()
    dt = None
    for t0, t1 in zip(t_grid[:-1], t_grid[1:]):
        if constant:
            vec, dt = stepper.constant(H.matrix, vec, t0, t1, dt)
        else:
            vec, dt = stepper.magnus4(H, vec, t0, t1, dt)
        drift = abs(np.linalg.norm(vec) - 1.0)
        budget = tol * (t1 - t_grid[0]) + 1e-12
        if drift > max(budget, 1e-10):
            raise IntegrationError(
                f"norm drift {drift:.3e} at t={t1:.6g} exceeds budget {budget:.3e}")
        out.append(StateVector(v.basis, vec, atol=max(budget, 1e-10)))
    log.debug("evolve: %d accepted, %d rejected steps", stepper.steps, stepper.rejected)
    return out


def _evolve_dense(v, H, t_grid):
    evals, evecs = eigh(H.toarray())
    coeffs = evecs.conj().T @ v.amplitudes
    out = [v]
    for t in t_grid[1:]:
        dt = t - t_grid[0]
        vec = evecs @ (np.exp(-1j * evals * dt) * coeffs)
        out.append(StateVector(v.basis, vec))
    return out
