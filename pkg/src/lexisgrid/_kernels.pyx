# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batch traversal.  Same arithmetic as ``_pykernels.traverse_batch``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double ALPHA_EPS = 1e-12


cdef inline double _clamp01(double x) noexcept nogil:
    if x < 0.0:
        return 0.0
    if x > 1.0:
        return 1.0
    return x


def traverse_batch(const double[:, ::1] starts, const double[::1] deltas,
                   const unsigned char[::1] grows, double t_r,
                   const double[::1] origin, int dim):
    cdef Py_ssize_t n = deltas.shape[0]
    cdef Py_ssize_t s, total = 0, widest = 0, m = 0
    cdef int ax
    cdef long long n0, count, u
    cdef double st, en, dt, rem, last, v, lo, hi, gap, mid, length
    cdef double x0[3]
    cdef double ext[3]
    cdef long long cnt[3]
    cdef long long pos[3]
    cdef long long base[3]
    cdef long long vox[3]
    cdef long long prev[3]
    cdef bint have_prev, same
    cdef Py_ssize_t bound, p, nkept, k, best

    # upper bound on output rows: crossings + 1 per segment
    for s in range(n):
        dt = deltas[s]
        bound = 1
        for ax in range(dim):
            st = starts[s, ax]
            en = st + dt if (ax < 2 or grows[s]) else st
            if en - st > 0:
                bound += <Py_ssize_t>(floor((en - origin[ax]) / t_r) - floor((st - origin[ax]) / t_r))
        total += bound
        if bound > widest:
            widest = bound

    seg_arr = np.empty(total, dtype=np.int64)
    idx_arr = np.empty((total, dim), dtype=np.int64)
    len_arr = np.empty(total, dtype=np.float64)
    cdef long long[::1] seg_out = seg_arr
    cdef long long[:, ::1] idx_out = idx_arr
    cdef double[::1] len_out = len_arr

    cdef double* axbuf = <double*> malloc((widest + 3) * sizeof(double))
    cdef double* kept = <double*> malloc((widest + 3) * sizeof(double))
    if axbuf == NULL or kept == NULL:
        free(axbuf)
        free(kept)
        raise MemoryError()

    try:
        with nogil:
            for s in range(n):
                dt = deltas[s]
                k = 0
                for ax in range(3):
                    cnt[ax] = 0
                    base[ax] = 0
                    x0[ax] = 0.0
                    ext[ax] = 0.0
                for ax in range(dim):
                    st = starts[s, ax]
                    en = st + dt if (ax < 2 or grows[s]) else st
                    x0[ax] = st - origin[ax]
                    ext[ax] = en - st
                    base[ax] = k
                    if ext[ax] <= 0:
                        continue
                    n0 = <long long> floor(x0[ax] / t_r)
                    count = <long long> floor((en - origin[ax]) / t_r) - n0
                    rem = x0[ax] - n0 * t_r
                    for u in range(1, count + 1):
                        axbuf[k] = _clamp01((u * t_r - rem) / ext[ax])
                        k += 1
                    cnt[ax] = count if count > 0 else 0

                # merge the sorted per-axis lists, dropping near-duplicates
                for ax in range(3):
                    pos[ax] = 0
                kept[0] = 0.0
                nkept = 1
                last = 0.0
                while True:
                    best = -1
                    for ax in range(dim):
                        if pos[ax] < cnt[ax]:
                            if best < 0 or axbuf[base[ax] + pos[ax]] < axbuf[base[best] + pos[best]]:
                                best = ax
                    if best < 0:
                        break
                    v = axbuf[base[best] + pos[best]]
                    pos[best] += 1
                    if v - last <= ALPHA_EPS or 1.0 - v <= ALPHA_EPS:
                        continue
                    kept[nkept] = v
                    nkept += 1
                    last = v
                kept[nkept] = 1.0
                nkept += 1

                have_prev = False
                for p in range(nkept - 1):
                    lo = kept[p]
                    hi = kept[p + 1]
                    gap = hi - lo
                    if gap <= ALPHA_EPS:
                        continue
                    mid = 0.5 * (lo + hi)
                    for ax in range(dim):
                        vox[ax] = <long long> floor((x0[ax] + mid * ext[ax]) / t_r)
                    length = gap * dt
                    same = have_prev
                    if same:
                        for ax in range(dim):
                            if vox[ax] != prev[ax]:
                                same = False
                    if same:
                        len_out[m - 1] += length
                    else:
                        seg_out[m] = s
                        for ax in range(dim):
                            idx_out[m, ax] = vox[ax]
                            prev[ax] = vox[ax]
                        len_out[m] = length
                        m += 1
                        have_prev = True
    finally:
        free(axbuf)
        free(kept)

    return seg_arr[:m].copy(), idx_arr[:m].copy(), len_arr[:m].copy()
