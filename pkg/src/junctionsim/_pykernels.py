"""Pure numpy implementations of the hot kernels.

Drop-in fallback for ``_ckernels``; both modules expose the same functions
with identical semantics and are cross-checked in the test suite.
"""
import numpy as np

NAME = "python"


def apply_word(modes, daggers, n_modes):
    """Action of a ladder-operator word on every basis state.

    The word ``c_0 c_1 ... c_{k-1}`` acts right to left.  Returns
    ``(targets, signs)`` with ``word |s> = signs[s] |targets[s]>``; a zero
    sign marks states the word annihilates.
    """
    modes = np.asarray(modes, dtype=np.int64)
    daggers = np.asarray(daggers, dtype=bool)
    states = np.arange(1 << n_modes, dtype=np.int64)
    signs = np.ones(states.shape, dtype=np.int8)
    for m, dag in zip(modes[::-1], daggers[::-1]):
        mask = np.int64(1) << np.int64(m)
        occupied = (states & mask) != 0
        blocked = occupied if dag else ~occupied
        signs[blocked] = 0
        parity = np.bitwise_count(states & (mask - 1)) & 1
        signs = np.where(parity == 1, -signs, signs).astype(np.int8)
        states = states ^ mask
    return states, signs


def _pf_batch(A, idx):
    if not idx:
        return np.ones(A.shape[0], dtype=complex)
    i0 = idx[0]
    total = np.zeros(A.shape[0], dtype=complex)
    for p in range(1, len(idx)):
        col = A[:, i0, idx[p]]
        if not col.any():
            continue
        rest = idx[1:p] + idx[p + 1:]
        term = col * _pf_batch(A, rest)
        total = total - term if p % 2 == 0 else total + term
    return total


def pfaffian_batch(A):
    """Pfaffians of a stack of antisymmetric matrices by row expansion."""
    A = np.asarray(A, dtype=complex)
    n = A.shape[-1]
    if n % 2:
        return np.zeros(A.shape[0], dtype=complex)
    return _pf_batch(A, list(range(n)))


def pfaffian(A):
    A = np.asarray(A, dtype=complex)
    return complex(pfaffian_batch(A[None])[0])
