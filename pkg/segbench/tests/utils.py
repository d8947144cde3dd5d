import numpy as np


def numerical_gradient(f, x, h=1e-5, indices=None):
    """Central differences of the scalar function ``f`` at ``x`` (flat indices, all by default)."""
    x = np.array(x, dtype=np.float64)
    flat = x.reshape(-1)
    indices = range(flat.size) if indices is None else indices
    grad = np.zeros(flat.size)
    for i in indices:
        saved = flat[i]
        flat[i] = saved + h
        plus = f(x)
        flat[i] = saved - h
        minus = f(x)
        flat[i] = saved
        grad[i] = (plus - minus) / (2 * h)
    return grad.reshape(x.shape)


def assert_gradients_close(testcase, analytic, numeric, rtol, atol=1e-8):
    analytic = np.asarray(analytic).reshape(-1)
    numeric = np.asarray(numeric).reshape(-1)
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    bad = np.flatnonzero(np.abs(analytic - numeric) > np.maximum(rtol * scale, atol))
    testcase.assertEqual(
        bad.size, 0,
        f"gradient mismatch at {bad[:5].tolist()}: analytic {analytic[bad[:5]]} vs numeric {numeric[bad[:5]]}",
    )


def avgpool2x2(input):
    c, h, w = input.shape
    return input.reshape(c, h // 2, 2, w // 2, 2).mean(axis=(2, 4))
