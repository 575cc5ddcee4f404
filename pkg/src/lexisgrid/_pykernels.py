"""Pure-Python batch traversal, used when the compiled kernel is missing.

Mirrors ``_kernels.pyx`` line for line; both must stay bit-identical with
:func:`lexisgrid.core.traverse`.
"""
import math

import numpy as np

ALPHA_EPS = 1e-12


def traverse_batch(starts, deltas, grows, t_r, origin, dim):
    """Trace many segments at once.

    Parameters
    ----------
    starts : (n, 3) float64 array of start points (t, a, d)
    deltas : (n,) float64 array of extents, all > 0
    grows : (n,) uint8 array, 1 where the duration axis grows
    t_r : voxel edge length
    origin : (3,) float64 grid origin
    dim : 2 or 3

    Returns
    -------
    seg : (m,) int64 segment number of each entry
    idx : (m, dim) int64 voxel indices
    length : (m,) float64 time at risk
    """
    n = len(deltas)
    seg_out = []
    idx_out = []
    len_out = []
    starts = starts.tolist()
    deltas = deltas.tolist()
    grows = grows.tolist()
    origin = [float(o) for o in origin]
    floor = math.floor
    for s in range(n):
        dt = deltas[s]
        start = starts[s]
        x0 = [0.0, 0.0, 0.0]
        ext = [0.0, 0.0, 0.0]
        alphas = []
        for ax in range(dim):
            st = start[ax]
            en = st + dt if (ax < 2 or grows[s]) else st
            x0[ax] = st - origin[ax]
            ext[ax] = en - st
            if ext[ax] <= 0:
                continue
            n0 = floor(x0[ax] / t_r)
            count = floor((en - origin[ax]) / t_r) - n0
            rem = x0[ax] - n0 * t_r
            for u in range(1, count + 1):
                alpha = (u * t_r - rem) / ext[ax]
                alphas.append(min(max(alpha, 0.0), 1.0))
        alphas.sort()
        kept = [0.0]
        last = 0.0
        for v in alphas:
            if v - last <= ALPHA_EPS or 1.0 - v <= ALPHA_EPS:
                continue
            kept.append(v)
            last = v
        kept.append(1.0)
        prev_voxel = None
        for p in range(len(kept) - 1):
            lo = kept[p]
            hi = kept[p + 1]
            gap = hi - lo
            if gap <= ALPHA_EPS:
                continue
            mid = 0.5 * (lo + hi)
            voxel = tuple(floor((x0[ax] + mid * ext[ax]) / t_r) for ax in range(dim))
            length = gap * dt
            if voxel == prev_voxel:
                len_out[-1] += length
            else:
                seg_out.append(s)
                idx_out.append(voxel)
                len_out.append(length)
                prev_voxel = voxel
    return (
        np.asarray(seg_out, dtype=np.int64),
        np.asarray(idx_out, dtype=np.int64).reshape(-1, dim),
        np.asarray(len_out, dtype=np.float64),
    )
