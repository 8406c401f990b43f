"""Independent brute-force oracles shared by the tests.

Everything here works on a 1 nm raster or by exhaustive enumeration and
deliberately avoids the package's own geometry code.
"""

import math
from collections import deque

import numpy as np

# frozen hand evaluations
PLATE_K41_A100_D01 = 36301.4  # 4.1 * 8.854 * 100 / 0.1 aF
SAKURAI_TOTAL_W1_T1 = 3.95
SAKURAI_TOTAL_W2_T1 = 5.10
SAKURAI_COUPLING_ALL1 = 0.79
SAKURAI_COUPLING_S2 = 0.79 * 2**-1.34  # 0.31207; quoted as 0.3120 to 4 places
M1_SHEET = 0.04 / 0.056  # ohm / sq
R_100_SQUARES = 71.43
ELMORE_ONE_STAGE_PS = 1.0
ELMORE_TWO_STAGE_PS = 3.0


def raster(rects, shape):
    m = np.zeros(shape, dtype=bool)
    for x0, y0, x1, y1 in rects:
        m[y0:y1, x0:x1] = True
    return m


def components(mask):
    """4-connected pixel components by BFS; returns a list of boolean masks."""
    seen = np.zeros_like(mask, dtype=bool)
    H, W = mask.shape
    out = []
    for y, x in zip(*np.nonzero(mask)):
        if seen[y, x]:
            continue
        comp = np.zeros_like(mask, dtype=bool)
        q = deque([(y, x)])
        seen[y, x] = True
        while q:
            cy, cx = q.popleft()
            comp[cy, cx] = True
            for ny, nx in ((cy + 1, cx), (cy - 1, cx), (cy, cx + 1), (cy, cx - 1)):
                if 0 <= ny < H and 0 <= nx < W and mask[ny, nx] and not seen[ny, nx]:
                    seen[ny, nx] = True
                    q.append((ny, nx))
        out.append(comp)
    return out


def bbox(mask):
    ys, xs = np.nonzero(mask)
    return (int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1)


def is_rect(mask):
    x0, y0, x1, y1 = bbox(mask)
    return int(mask.sum()) == (x1 - x0) * (y1 - y0)


def min_run(mask):
    """Shortest maximal run of filled pixels along any row or column."""
    best = None
    for m in (mask, mask.T):
        for row in m:
            run = 0
            for v in list(row) + [False]:
                if v:
                    run += 1
                elif run:
                    best = run if best is None else min(best, run)
                    run = 0
    return best


def inscribed_square_width(mask):
    """Min over filled pixels of the largest all-filled square containing the pixel."""
    H, W = mask.shape
    dp = np.zeros((H + 1, W + 1), dtype=int)
    for i in range(H):
        for j in range(W):
            if mask[i, j]:
                dp[i + 1, j + 1] = 1 + min(dp[i, j], dp[i + 1, j], dp[i, j + 1])
    best = np.zeros((H, W), dtype=int)
    for i in range(H):
        for j in range(W):
            s = dp[i + 1, j + 1]
            if s:
                blk = best[i - s + 1 : i + 1, j - s + 1 : j + 1]
                np.maximum(blk, s, out=blk)
    return int(best[mask].min())


def pixel_gap2(a, b):
    """Squared Euclidean gap between two pixel sets (as unit squares)."""
    pa = np.argwhere(a)
    pb = np.argwhere(b)
    best = None
    for s in range(0, len(pa), 256):
        d = np.abs(pa[s : s + 256, None, :] - pb[None, :, :]) - 1
        d = np.maximum(d, 0)
        g = int((d**2).sum(axis=2).min())
        best = g if best is None else min(best, g)
    return best


def rect_gap2(a, b):
    dx = max(0, b[0] - a[2], a[0] - b[2])
    dy = max(0, b[1] - a[3], a[1] - b[3])
    return dx * dx + dy * dy


def dilate(mask, r):
    """Chebyshev dilation by ``r`` pixels (brute-force shifts)."""
    out = mask.copy()
    H, W = mask.shape
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            sh = np.zeros_like(mask)
            ys = slice(max(dy, 0), H + min(dy, 0))
            yd = slice(max(-dy, 0), H + min(-dy, 0))
            xs = slice(max(dx, 0), W + min(dx, 0))
            xd = slice(max(-dx, 0), W + min(-dx, 0))
            sh[ys, xs] = mask[yd, xd]
            out |= sh
    return out


def fin_sum_geometry(n_fin, w_fin, l_fin):
    """Junction area / perimeter by enumerating fins one at a time."""
    area, perim = 0, 0
    for _ in range(n_fin):
        area += w_fin * l_fin
        perim += 2 * l_fin + w_fin  # both fin sides plus the far end
    return area, perim


def isqrt_gap(g2):
    return math.isqrt(g2)


def effective_resistance(resistors, a, b):
    """Two-terminal resistance of a resistor network by Laplacian solve.

    ``resistors`` is an iterable of ``(node, node, ohm)``.
    """
    resistors = list(resistors)
    nodes = sorted({n for x, y, _ in resistors for n in (x, y)} | {a, b})
    idx = {n: i for i, n in enumerate(nodes)}
    L = np.zeros((len(nodes), len(nodes)))
    for x, y, r in resistors:
        i, j = idx[x], idx[y]
        g = 1.0 / r
        L[i, i] += g
        L[j, j] += g
        L[i, j] -= g
        L[j, i] -= g
    rhs = np.zeros(len(nodes))
    rhs[idx[a]], rhs[idx[b]] = 1.0, -1.0
    keep = [i for i in range(len(nodes)) if i != idx[b]]
    v = np.linalg.solve(L[np.ix_(keep, keep)], rhs[keep])
    return float(v[keep.index(idx[a])])


def k_series_oracle(slabs, z0, z1):
    """Series permittivity of the slab stack between heights ``z0`` and ``z1``."""
    thick, acc = 0.0, 0.0
    for s in slabs:
        lo, hi = max(z0, s["bottom_nm"]), min(z1, s["top_nm"])
        if hi > lo:
            thick += hi - lo
            acc += (hi - lo) / s["k"]
    return thick / acc


def sakurai_ground(k, w, t, h, length):
    """Direct evaluation of the isolated-line closed form (µm in, aF out)."""
    return k * 8.854 * (1.15 * w / h + 2.80 * (t / h) ** 0.222) * length


def sakurai_coupling(k, w, t, h, s, length):
    return k * 8.854 * (0.03 * w / h + 0.83 * t / h - 0.07 * (t / h) ** 0.222) * (s / h) ** -1.34 * length
