import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from jitterloss import _fallback, kernels

try:
    from jitterloss import _kernels
except ImportError:  # pragma: no cover
    _kernels = None

BACKENDS = [pytest.param(_fallback, id="python")]
if _kernels is not None:
    BACKENDS.append(pytest.param(_kernels, id="compiled"))


@pytest.mark.parametrize("impl", BACKENDS)
def test_matmul_examples(impl):
    m = np.array([[1.5, -2.0], [0.25, 4.0]])
    np.testing.assert_array_equal(impl.matmul(np.eye(2), m), m)
    np.testing.assert_array_equal(impl.matmul(np.array([[2.0]]), np.array([[3.0]])), [[6.0]])
    got = impl.matmul(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([[5.0], [6.0]]))
    np.testing.assert_array_equal(got, [[17.0], [39.0]])


@pytest.mark.parametrize("impl", BACKENDS)
def test_matmul_shape_error(impl):
    with pytest.raises(ValueError):
        impl.matmul(np.ones((2, 3)), np.ones((2, 3)))


def _naive(a, b):
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            out[i, j] = sum(a[i, k] * b[k, j] for k in range(a.shape[1]))
    return out


dims = st.integers(1, 7)
floats = st.floats(-1e3, 1e3, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_backends_agree_with_naive_product(data):
    n, m, p = data.draw(dims), data.draw(dims), data.draw(dims)
    a = data.draw(hnp.arrays(np.float64, (n, m), elements=floats))
    b = data.draw(hnp.arrays(np.float64, (m, p), elements=floats))
    ref = _naive(a, b)
    for impl, _ in [(_fallback, 0)] + ([(_kernels, 0)] if _kernels else []):
        np.testing.assert_allclose(impl.matmul(a, b), ref, rtol=1e-12, atol=1e-9)


@pytest.mark.parametrize("impl", BACKENDS)
def test_jitter_and_positive_part(impl):
    loss = np.array([0.05, 0.01, 0.0, 0.3])
    alpha = np.array([0.02, 0.02, 0.0, -1.0])
    np.testing.assert_array_equal(impl.jitter_transform_many(loss, alpha), [0.05, 0.03, 0.0, 0.3])
    assert impl.positive_part_mean(np.array([-1.0, 0.5, 1.5, -2.0])) == 0.5
    with pytest.raises(ValueError):
        impl.positive_part_mean(np.array([]))


def test_backend_flag():
    assert kernels.BACKEND in ("compiled", "python")
