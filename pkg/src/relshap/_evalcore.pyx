# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled witness-scan kernel.

Scans view rows in storage order and accumulates the aggregate over rows
whose endogenous witnesses are all present in the coalition bit mask.
Accumulation is strictly sequential in row order so results are
bit-identical to the pure-Python fallback.
"""


def eval_players(const int[:, ::1] witnesses,
                 const double[::1] terms,
                 const unsigned long long[::1] mask,
                 int kind):
    """Aggregate over rows whose witness player bits are all set in mask.

    witnesses: per row, player indices (int32), -1-padded at the end.
    mask: little-endian 64-bit words of the coalition bit vector.
    kind: 0 = SUM of terms, 1 = COUNT, 2 = EXISTS (0/1, early exit).
    """
    cdef Py_ssize_t nrows = witnesses.shape[0]
    cdef Py_ssize_t width = witnesses.shape[1]
    cdef Py_ssize_t i, j
    cdef int p
    cdef bint ok
    cdef double acc = 0.0
    with nogil:
        for i in range(nrows):
            ok = True
            for j in range(width):
                p = witnesses[i, j]
                if p < 0:
                    break
                if not (mask[p >> 6] >> (p & 63)) & 1:
                    ok = False
                    break
            if ok:
                if kind == 2:
                    acc = 1.0
                    break
                elif kind == 1:
                    acc += 1.0
                else:
                    acc += terms[i]
    return acc
