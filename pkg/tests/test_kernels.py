import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finverify import _accel, kernels

from oracles import rect_gap2

rects_st = st.lists(
    st.tuples(st.integers(0, 200), st.integers(0, 200), st.integers(1, 60), st.integers(1, 60)).map(
        lambda t: (t[0], t[1], t[0] + t[2], t[1] + t[3])
    ),
    min_size=1,
    max_size=30,
)


def arr(r):
    return np.asarray(r, dtype=np.int64).reshape(-1, 4)


@pytest.mark.parametrize("which", [0, 1], ids=["numba", "numpy"])
@given(rects=rects_st, halo=st.integers(-1, 40))
@settings(max_examples=60, deadline=None)
def test_self_pairs_match_brute_force(which, rects, halo):
    r = arr(rects)
    fn = kernels.IMPLEMENTATIONS["self_pairs"][which]
    got = kernels.self_pairs(r, halo, impl=fn).tolist()
    want = []
    for i in range(len(r)):
        for j in range(i + 1, len(r)):
            gx = max(r[j, 0] - r[i, 2], r[i, 0] - r[j, 2])
            gy = max(r[j, 1] - r[i, 3], r[i, 1] - r[j, 3])
            if gx <= halo and gy <= halo:
                want.append([i, j])
    assert got == sorted(want)


@given(a=rects_st, b=rects_st)
@settings(max_examples=60, deadline=None)
def test_gap_kernels_agree_and_match_brute_force(a, b):
    ra, rb = arr(a), arr(b)
    g2 = min(rect_gap2(x, y) for x in a for y in b)
    nb, npy = kernels.IMPLEMENTATIONS["min_gap2"]
    assert nb(ra, rb) == npy(ra, rb) == g2
    cheb = min(max(0, y[0] - x[2], x[0] - y[2], y[1] - x[3], x[1] - y[3]) for x in a for y in b)
    nb, npy = kernels.IMPLEMENTATIONS["min_cheb_gap"]
    assert nb(ra, rb) == npy(ra, rb) == cheb


@given(st.lists(st.tuples(st.integers(0, 9), st.integers(0, 9), st.integers(1, 5), st.integers(1, 5)), max_size=20))
@settings(max_examples=60, deadline=None)
def test_paint_counts_coverage(boxes):
    idx = np.array([(x, y, min(x + w, 12), min(y + h, 12)) for x, y, w, h in boxes], dtype=np.int64).reshape(-1, 4)
    want = np.zeros((12, 12), dtype=np.int32)
    for x0, y0, x1, y1 in idx:
        want[x0:x1, y0:y1] += 1
    nb, npy = kernels.IMPLEMENTATIONS["paint"]
    assert np.array_equal(nb(idx, 12, 12), want)
    assert np.array_equal(npy(idx, 12, 12), want)


@given(st.lists(st.lists(st.booleans(), min_size=6, max_size=6), min_size=6, max_size=6), st.lists(st.integers(1, 9), min_size=7, max_size=7))
@settings(max_examples=80, deadline=None)
def test_min_run_backends_agree(grid, steps):
    g = np.array(grid, dtype=np.int32)
    xs = np.cumsum([0] + steps[:6]).astype(np.int64)
    ys = np.cumsum([0] + steps[1:7]).astype(np.int64)
    nb, npy = kernels.IMPLEMENTATIONS["min_run"]
    assert nb(g, xs, ys) == npy(g, xs, ys)


def test_empty_inputs():
    e = np.empty((0, 4), dtype=np.int64)
    assert kernels.self_pairs(e, 0).shape == (0, 2)
    assert kernels.cross_pairs(e, arr([(0, 0, 1, 1)]), 0).shape == (0, 2)
    assert kernels.IMPLEMENTATIONS["min_gap2"][1](e, e) == -1


def test_backend_flag_is_reported():
    assert _accel.backend_name() in ("numba", "numpy")
