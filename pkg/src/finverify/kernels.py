"""Integer rectangle kernels.

Rectangles are rows ``(x0, y0, x1, y1)`` of an ``int64`` array.  Every kernel
has a numba implementation (``_nb_*``) and a vectorised numpy implementation
(``_np_*``); the public names are bound to one of them according to
``FINVERIFY_NUMBA``.  Both paths must return identical results, and the test
suite runs them side by side.
"""

import numpy as np

from finverify._accel import USE_NUMBA, njit

_BIG = np.iinfo(np.int64).max


# ---------------------------------------------------------------------------
# coverage painting on a compressed grid


@njit
def _nb_paint(idx, nx, ny):
    grid = np.zeros((nx, ny), dtype=np.int32)
    for k in range(idx.shape[0]):
        for i in range(idx[k, 0], idx[k, 2]):
            for j in range(idx[k, 1], idx[k, 3]):
                grid[i, j] += 1
    return grid


def _np_paint(idx, nx, ny):
    # 2-D difference array, then prefix sums along both axes
    diff = np.zeros((nx + 1, ny + 1), dtype=np.int32)
    if len(idx):
        np.add.at(diff, (idx[:, 0], idx[:, 1]), 1)
        np.add.at(diff, (idx[:, 2], idx[:, 1]), -1)
        np.add.at(diff, (idx[:, 0], idx[:, 3]), -1)
        np.add.at(diff, (idx[:, 2], idx[:, 3]), 1)
    return diff.cumsum(axis=0).cumsum(axis=1)[:nx, :ny].astype(np.int32)


# ---------------------------------------------------------------------------
# pairwise gaps


@njit
def _nb_min_gap2(a, b):
    best = -1
    for i in range(a.shape[0]):
        for j in range(b.shape[0]):
            dx = max(0, max(b[j, 0] - a[i, 2], a[i, 0] - b[j, 2]))
            dy = max(0, max(b[j, 1] - a[i, 3], a[i, 1] - b[j, 3]))
            d2 = dx * dx + dy * dy
            if best < 0 or d2 < best:
                best = d2
                if best == 0:
                    return 0
    return best


def _axis_gaps(a, b):
    dx = np.maximum(0, np.maximum(b[None, :, 0] - a[:, None, 2], a[:, None, 0] - b[None, :, 2]))
    dy = np.maximum(0, np.maximum(b[None, :, 1] - a[:, None, 3], a[:, None, 1] - b[None, :, 3]))
    return dx, dy


def _np_min_gap2(a, b):
    if len(a) == 0 or len(b) == 0:
        return -1
    best = -1
    for s in range(0, len(a), 512):
        dx, dy = _axis_gaps(a[s : s + 512], b)
        m = int((dx * dx + dy * dy).min())
        best = m if best < 0 else min(best, m)
    return best


@njit
def _nb_min_cheb_gap(a, b):
    best = -1
    for i in range(a.shape[0]):
        for j in range(b.shape[0]):
            dx = max(0, max(b[j, 0] - a[i, 2], a[i, 0] - b[j, 2]))
            dy = max(0, max(b[j, 1] - a[i, 3], a[i, 1] - b[j, 3]))
            d = max(dx, dy)
            if best < 0 or d < best:
                best = d
    return best


def _np_min_cheb_gap(a, b):
    if len(a) == 0 or len(b) == 0:
        return -1
    best = -1
    for s in range(0, len(a), 512):
        dx, dy = _axis_gaps(a[s : s + 512], b)
        m = int(np.maximum(dx, dy).min())
        best = m if best < 0 else min(best, m)
    return best


# ---------------------------------------------------------------------------
# minimum run length (interior width) on a compressed grid


@njit
def _nb_min_run(grid, xs, ys):
    nx, ny = grid.shape
    best = -1
    for j in range(ny):
        run = 0
        for i in range(nx):
            if grid[i, j]:
                run += xs[i + 1] - xs[i]
                if i == nx - 1 or not grid[i + 1, j]:
                    if best < 0 or run < best:
                        best = run
                    run = 0
    for i in range(nx):
        run = 0
        for j in range(ny):
            if grid[i, j]:
                run += ys[j + 1] - ys[j]
                if j == ny - 1 or not grid[i, j + 1]:
                    if best < 0 or run < best:
                        best = run
                    run = 0
    return best


def _runs_along_rows(grid, widths):
    """Lengths of maximal filled runs along axis 0, for every column."""
    nx, ny = grid.shape
    g = np.zeros((nx + 2, ny), dtype=np.int8)
    g[1:-1] = grid
    edge = np.diff(g, axis=0)
    cum = np.zeros((nx + 1, ny), dtype=np.int64)
    cum[1:] = np.cumsum(widths)[:, None]
    si, sj = np.nonzero(edge == 1)
    ei, ej = np.nonzero(edge == -1)
    # np.nonzero is row-major; reorder by column to pair starts with ends
    so = np.lexsort((si, sj))
    eo = np.lexsort((ei, ej))
    return cum[ei[eo], ej[eo]] - cum[si[so], sj[so]]


def _np_min_run(grid, xs, ys):
    g = grid.astype(bool)
    if not g.any():
        return -1
    rx = _runs_along_rows(g, np.diff(xs))
    ry = _runs_along_rows(g.T, np.diff(ys))
    return int(min(rx.min(), ry.min()))


# ---------------------------------------------------------------------------
# candidate pairs (interval sweep over x)


@njit
def _nb_self_pairs(r, order, halo):
    n = r.shape[0]
    cap = 64
    out = np.empty((cap, 2), dtype=np.int64)
    k = 0
    for ii in range(n):
        i = order[ii]
        for jj in range(ii + 1, n):
            j = order[jj]
            if r[j, 0] - r[i, 2] > halo:
                break
            gy = max(r[j, 1] - r[i, 3], r[i, 1] - r[j, 3])
            if gy > halo:
                continue
            if k == cap:
                cap *= 2
                grown = np.empty((cap, 2), dtype=np.int64)
                grown[:k] = out[:k]
                out = grown
            out[k, 0] = min(i, j)
            out[k, 1] = max(i, j)
            k += 1
    return out[:k].copy()


def _np_self_pairs(r, order, halo):
    n = len(r)
    chunks = []
    for s in range(0, n, 512):
        a = r[s : s + 512]
        gx = np.maximum(r[None, :, 0] - a[:, None, 2], a[:, None, 0] - r[None, :, 2])
        gy = np.maximum(r[None, :, 1] - a[:, None, 3], a[:, None, 1] - r[None, :, 3])
        ii, jj = np.nonzero((gx <= halo) & (gy <= halo))
        ii = ii + s
        keep = ii < jj
        chunks.append(np.stack([ii[keep], jj[keep]], axis=1))
    if not chunks:
        return np.empty((0, 2), dtype=np.int64)
    return np.concatenate(chunks).astype(np.int64)


def _sorted_pairs(p):
    if len(p) == 0:
        return np.empty((0, 2), dtype=np.int64)
    o = np.lexsort((p[:, 1], p[:, 0]))
    return np.ascontiguousarray(p[o])


if USE_NUMBA:
    paint = _nb_paint
    min_gap2 = _nb_min_gap2
    min_cheb_gap = _nb_min_cheb_gap
    min_run = _nb_min_run
    _self_pairs = _nb_self_pairs
else:
    paint = _np_paint
    min_gap2 = _np_min_gap2
    min_cheb_gap = _np_min_cheb_gap
    min_run = _np_min_run
    _self_pairs = _np_self_pairs


def self_pairs(rects, halo, impl=None):
    """Index pairs ``i < j`` whose per-axis gaps are both ``<= halo``.

    Sorted lexicographically.  ``halo=0`` yields every touching or overlapping
    pair; a negative halo requires positive-area overlap in both axes.
    """
    r = np.ascontiguousarray(rects, dtype=np.int64).reshape(-1, 4)
    order = np.argsort(r[:, 0], kind="stable").astype(np.int64)
    fn = _self_pairs if impl is None else impl
    return _sorted_pairs(fn(r, order, np.int64(halo)))


def cross_pairs(a, b, halo, impl=None):
    """Pairs ``(i, j)`` of rows of ``a`` and ``b`` within ``halo`` on both axes."""
    a = np.ascontiguousarray(a, dtype=np.int64).reshape(-1, 4)
    b = np.ascontiguousarray(b, dtype=np.int64).reshape(-1, 4)
    if len(a) == 0 or len(b) == 0:
        return np.empty((0, 2), dtype=np.int64)
    both = np.concatenate([a, b])
    p = self_pairs(both, halo, impl)
    na = len(a)
    p = p[(p[:, 0] < na) & (p[:, 1] >= na)]
    p[:, 1] -= na
    return _sorted_pairs(p)


IMPLEMENTATIONS = {
    "paint": (_nb_paint, _np_paint),
    "min_gap2": (_nb_min_gap2, _np_min_gap2),
    "min_cheb_gap": (_nb_min_cheb_gap, _np_min_cheb_gap),
    "min_run": (_nb_min_run, _np_min_run),
    "self_pairs": (_nb_self_pairs, _np_self_pairs),
}
