# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: Ryser permanent and the qubit sign-configuration sum."""

cimport cython
from libc.stdlib cimport malloc, free


def ryser_permanent(double complex[:, ::1] a):
    """Permanent via Ryser's formula with Gray-code subset updates."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j
    cdef unsigned long long k, gray, prev_gray, diff, total
    cdef double complex prod, acc = 0
    cdef int sign, bits = 0
    cdef double complex *rowsum
    if n == 0:
        return 1.0 + 0j
    rowsum = <double complex *> malloc(n * sizeof(double complex))
    if rowsum == NULL:
        raise MemoryError()
    try:
        for i in range(n):
            rowsum[i] = 0
        total = 1ULL << n
        prev_gray = 0
        for k in range(1, total):
            gray = k ^ (k >> 1)
            diff = gray ^ prev_gray
            j = 0
            while (diff >> j) != 1:
                j += 1
            if gray & diff:
                sign = 1
                bits += 1
            else:
                sign = -1
                bits -= 1
            for i in range(n):
                rowsum[i] = rowsum[i] + sign * a[i, j]
            prod = 1
            for i in range(n):
                prod = prod * rowsum[i]
            if bits & 1:
                acc = acc - prod
            else:
                acc = acc + prod
            prev_gray = gray
    finally:
        free(rowsum)
    if n & 1:
        return -acc
    return acc


def qubit_config_sum(double complex[:, ::1] u):
    """Average over all ``4**N`` sign pairs of the qubit P-function weight.

    ``u`` is the ``N x N`` block of the network (rows: outputs, cols: inputs).
    Each input contributes ``s s' / 4``; the moment factor is
    ``prod_k (u s)_k * conj((u s')_k)``.
    """
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i, k
    cdef unsigned long long s, sp, total
    cdef double complex *amp
    cdef double *sgn
    cdef double complex prod, col, acc = 0
    cdef double parity
    total = 1ULL << n
    amp = <double complex *> malloc(total * sizeof(double complex))
    sgn = <double *> malloc(total * sizeof(double))
    if amp == NULL or sgn == NULL:
        free(amp)
        free(sgn)
        raise MemoryError()
    try:
        for s in range(total):
            prod = 1
            parity = 1.0
            for k in range(n):
                col = 0
                for i in range(n):
                    if (s >> i) & 1:
                        col = col - u[k, i]
                    else:
                        col = col + u[k, i]
                prod = prod * col
            for i in range(n):
                if (s >> i) & 1:
                    parity = -parity
            amp[s] = prod
            sgn[s] = parity
        for s in range(total):
            for sp in range(total):
                acc = acc + (sgn[s] * sgn[sp]) * amp[s] * amp[sp].conjugate()
    finally:
        free(amp)
        free(sgn)
    return acc / (<double> total * <double> total)
