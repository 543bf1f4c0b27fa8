"""The compiled and numpy kernel backends must agree bit-for-bit."""

import numpy as np
import pytest

import semvox._kernels_py as py_kernels
from semvox.labels import REMAP_LUT

compiled = pytest.importorskip("semvox._kernels",
                               reason="compiled extension not built")


@pytest.fixture(scope="module")
def scene(rng=None):
    rng = np.random.default_rng(77)
    n, b = 20000, 50
    origins = np.ascontiguousarray(rng.normal(0, 5, (n, 3)))
    dirs = rng.normal(size=(n, 3))
    dirs = np.ascontiguousarray(dirs / np.linalg.norm(dirs, axis=1, keepdims=True))
    rot = np.stack([np.eye(3)] * b)
    for i in range(0, b, 2):
        a = rng.uniform(0, 2 * np.pi)
        c, s = np.cos(a), np.sin(a)
        rot[i] = [[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]]
    ctr = rng.normal(0, 8, (b, 3))
    he = rng.uniform(0.2, 4.0, (b, 3))
    return dict(
        origins=origins, dirs=dirs,
        rot=np.ascontiguousarray(rot),
        trans=np.ascontiguousarray(rng.normal(0, 10, (b, 3))),
        lo=np.ascontiguousarray(ctr - he), hi=np.ascontiguousarray(ctr + he),
        labels=rng.integers(1, 23, b).astype(np.int32),
        actors=rng.integers(-1, 6, b).astype(np.int32),
        points=np.ascontiguousarray(rng.normal(0, 15, (30000, 3))),
        point_labels=rng.integers(0, 23, 30000).astype(np.uint8),
    )


def test_raycast_bit_identical(scene):
    args = (scene["origins"], scene["dirs"], 50.0, scene["rot"], scene["trans"],
            scene["lo"], scene["hi"], scene["labels"], scene["actors"],
            1, 0.0, 0.5, 4.0, 14, 16)
    dc, lc, ac = compiled.raycast_boxes(*args)
    dp, lp, ap = py_kernels.raycast_boxes(*args)
    np.testing.assert_array_equal(dc, dp)
    np.testing.assert_array_equal(lc, lp)
    np.testing.assert_array_equal(ac, ap)


@pytest.mark.parametrize("r", [0.09, 0.7, 1.5])
def test_trace_expand_bit_identical(scene, r):
    pc, lc, sc = compiled.trace_expand(scene["points"], scene["point_labels"], r)
    pp, lp, sp = py_kernels.trace_expand(scene["points"], scene["point_labels"], r)
    assert sc == sp
    np.testing.assert_array_equal(pc, pp)
    np.testing.assert_array_equal(lc, lp)


def test_trace_accumulate_bit_identical(scene):
    mins = np.array([-25.6, -25.6, -2.0])
    maxs = np.array([25.6, 25.6, 1.0])
    cells = (maxs - mins) / np.array([128, 128, 8])
    rot = np.ascontiguousarray(
        np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]))
    trans = np.array([0.25, -0.5, 1.0])
    cc = np.zeros((128, 128, 8, 11), np.uint32)
    cp = np.zeros_like(cc)
    out_c = compiled.trace_accumulate(scene["points"], scene["point_labels"], 0.4,
                                      rot, trans, cc, mins, maxs, cells, REMAP_LUT)
    out_p = py_kernels.trace_accumulate(scene["points"], scene["point_labels"], 0.4,
                                        rot, trans, cp, mins, maxs, cells, REMAP_LUT)
    assert out_c == out_p
    np.testing.assert_array_equal(cc, cp)


def test_bin_points_bit_identical(scene):
    mins = np.array([-25.6, -25.6, -2.0])
    maxs = np.array([25.6, 25.6, 1.0])
    cells = (maxs - mins) / np.array([128, 128, 8])
    cc = np.zeros((128, 128, 8, 11), np.uint32)
    cp = np.zeros_like(cc)
    out_c = compiled.bin_points(cc, scene["points"], scene["point_labels"],
                                mins, maxs, cells, REMAP_LUT)
    out_p = py_kernels.bin_points(cp, scene["points"], scene["point_labels"],
                                  mins, maxs, cells, REMAP_LUT)
    assert out_c == out_p
    np.testing.assert_array_equal(cc, cp)


def test_backend_module_selection(monkeypatch):
    import importlib

    import semvox.backend as backend

    monkeypatch.setenv("SEMVOX_FORCE_NUMPY", "1")
    forced = importlib.reload(backend)
    assert forced.BACKEND == "numpy"
    monkeypatch.delenv("SEMVOX_FORCE_NUMPY")
    restored = importlib.reload(backend)
    assert restored.BACKEND == "compiled"
