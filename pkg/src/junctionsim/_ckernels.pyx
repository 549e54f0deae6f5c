# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_pykernels`` for the reference semantics."""
import numpy as np

NAME = "cython"

cdef enum:
    MAX_PF = 32

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


def apply_word(modes, daggers, int n_modes):
    cdef long long[::1] m = np.ascontiguousarray(modes, dtype=np.int64)
    cdef signed char[::1] d = np.ascontiguousarray(daggers, dtype=np.int8)
    cdef Py_ssize_t dim = (<Py_ssize_t>1) << n_modes
    targets = np.empty(dim, dtype=np.int64)
    signs = np.empty(dim, dtype=np.int8)
    cdef long long[::1] t = targets
    cdef signed char[::1] sg = signs
    cdef Py_ssize_t s, k
    cdef Py_ssize_t nops = m.shape[0]
    cdef unsigned long long state, mask
    cdef int sign
    with nogil:
        for s in range(dim):
            state = <unsigned long long>s
            sign = 1
            for k in range(nops - 1, -1, -1):
                mask = (<unsigned long long>1) << m[k]
                if d[k]:
                    if state & mask:
                        sign = 0
                        break
                else:
                    if not (state & mask):
                        sign = 0
                        break
                if __builtin_popcountll(state & (mask - 1)) & 1:
                    sign = -sign
                state ^= mask
            t[s] = <long long>state
            sg[s] = <signed char>sign
    return targets, signs


cdef double complex _pf(const double complex* A, int stride, int* idx, int n) noexcept nogil:
    # row expansion along the first remaining index; A is one row-major matrix
    cdef int rest[MAX_PF]
    cdef double complex total = 0
    cdef double complex a
    cdef const double complex* row
    cdef int p, q, r
    cdef double sign = 1.0
    if n == 0:
        return 1.0
    if n == 2:
        return A[idx[0] * stride + idx[1]]
    row = A + idx[0] * stride
    for p in range(1, n):
        a = row[idx[p]]
        if a.real != 0 or a.imag != 0:
            r = 0
            for q in range(1, n):
                if q != p:
                    rest[r] = idx[q]
                    r += 1
            total = total + sign * a * _pf(A, stride, rest, n - 2)
        sign = -sign
    return total


def pfaffian_batch(A):
    cdef double complex[:, :, ::1] M = np.ascontiguousarray(A, dtype=np.complex128)
    cdef Py_ssize_t b, nb = M.shape[0]
    cdef int n = <int>M.shape[2]
    cdef int i
    cdef int idx[MAX_PF]
    cdef const double complex* base
    out = np.ones(nb, dtype=np.complex128)
    cdef double complex[::1] o = out
    if n % 2:
        return np.zeros(nb, dtype=np.complex128)
    if n > MAX_PF:
        raise ValueError(f"pfaffian kernel supports at most {MAX_PF} rows, got {n}")
    if nb == 0 or n == 0:
        return out
    for i in range(n):
        idx[i] = i
    base = &M[0, 0, 0]
    with nogil:
        for b in range(nb):
            o[b] = _pf(base + b * n * n, n, idx, n)
    return out


def pfaffian(A):
    A = np.asarray(A, dtype=np.complex128)
    return complex(pfaffian_batch(A[None])[0])
