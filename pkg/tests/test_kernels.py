import numpy as np
import pytest

from oridist import _kernels_np, kernels
from oridist import quaternion as quat

try:
    from oridist import _kernels
except ImportError:
    _kernels = None

BACKENDS = [_kernels_np] + ([_kernels] if _kernels is not None else [])


def brute_topk(q, vertices, k):
    d = vertices[:, 0] * q[0]
    for c in (1, 2, 3):
        d = d + vertices[:, c] * q[c]
    d = np.abs(d)
    return sorted(range(len(d)), key=lambda i: (-d[i], i))[:k]


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__)
def test_matches_brute_force(impl, grid_l1, rng):
    qs = quat.random_uniform(rng, 200)
    idx, absdot = impl.topk_abs_dot(qs, grid_l1.vertices, 4)
    for row, q in enumerate(qs):
        assert list(idx[row]) == brute_topk(q, grid_l1.vertices, 4)
    assert np.all(np.diff(absdot, axis=1) <= 0)


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__)
def test_vertex_queries_tie_break(impl, grid_l1):
    # querying at grid vertices exercises exact distance ties
    idx, _ = impl.topk_abs_dot(grid_l1.vertices, grid_l1.vertices, 4)
    for row in range(0, len(grid_l1), 37):
        assert list(idx[row]) == brute_topk(grid_l1.vertices[row],
                                            grid_l1.vertices, 4)


@pytest.mark.skipif(_kernels is None, reason="compiled kernel unavailable")
def test_backends_agree_exactly(grid_l2, rng):
    qs = np.vstack([quat.random_uniform(rng, 3000), grid_l2.vertices[:500]])
    for k in (1, 4, 16):
        i1, d1 = _kernels.topk_abs_dot(qs, grid_l2.vertices, k)
        i2, d2 = _kernels_np.topk_abs_dot(qs, grid_l2.vertices, k)
        np.testing.assert_array_equal(i1, i2)
        np.testing.assert_array_equal(d1, d2)


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__)
def test_k_bounds(impl, grid_l0, rng):
    q = quat.random_uniform(rng, 2)
    with pytest.raises(ValueError):
        impl.topk_abs_dot(q, grid_l0.vertices, 0)
    with pytest.raises(ValueError):
        impl.topk_abs_dot(q, grid_l0.vertices, len(grid_l0) + 1)
    idx, _ = impl.topk_abs_dot(q, grid_l0.vertices, len(grid_l0))
    assert sorted(idx[0]) == list(range(len(grid_l0)))


def test_backend_selected():
    assert kernels.backend_name() in ("compiled", "numpy")
