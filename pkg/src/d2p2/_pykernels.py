"""Pure numpy implementations of the hot per-step kernels.

Semantics must match ``_ckernels.pyx``; the two are cross-checked in the
test suite to 1e-12.
"""
import numpy as np

CLIP_OFF = 0
CLIP_AUTO = 1
CLIP_THRESHOLD = 2


def _row_scales(norms, gamma, scale, mode):
    if mode == CLIP_AUTO:
        denom = norms + gamma
        # gamma == 0 and a zero row: the row stays zero
        return np.divide(scale, denom, out=np.zeros_like(denom), where=denom > 0)
    if mode == CLIP_THRESHOLD:
        out = np.ones_like(norms)
        big = norms > scale
        out[big] = scale / norms[big]
        return out
    return np.ones_like(norms)


def clip_rows(grads, gamma, scale, mode):
    grads = np.asarray(grads, dtype=np.float64)
    norms = np.sqrt(np.einsum("ij,ij->i", grads, grads))
    return grads * _row_scales(norms, gamma, scale, mode)[:, None]


def clip_mean(grads, gamma, scale, mode):
    clipped = clip_rows(grads, gamma, scale, mode)
    return clipped.sum(axis=0) / clipped.shape[0]


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_grads(X, y, w):
    r = sigmoid(X @ w) - y
    return r[:, None] * X


def mlp_unpack(theta, m, h, c):
    i = 0
    W1 = theta[i:i + h * m].reshape(h, m)
    i += h * m
    b1 = theta[i:i + h]
    i += h
    W2 = theta[i:i + c * h].reshape(c, h)
    i += c * h
    b2 = theta[i:i + c]
    return W1, b1, W2, b2


def mlp_forward(X, theta, m, h, c):
    W1, b1, W2, b2 = mlp_unpack(theta, m, h, c)
    Z = np.tanh(X @ W1.T + b1)
    return Z, Z @ W2.T + b2


def mlp_grads(X, labels, theta, m, h, c):
    W1, b1, W2, b2 = mlp_unpack(theta, m, h, c)
    Z, O = mlp_forward(X, theta, m, h, c)
    O = O - O.max(axis=1, keepdims=True)
    P = np.exp(O)
    P /= P.sum(axis=1, keepdims=True)
    rows = np.arange(X.shape[0])
    P[rows, labels] -= 1.0
    dA1 = (P @ W2) * (1.0 - Z * Z)
    n = X.shape[0]
    return np.concatenate(
        [
            (dA1[:, :, None] * X[:, None, :]).reshape(n, h * m),
            dA1,
            (P[:, :, None] * Z[:, None, :]).reshape(n, c * h),
            P,
        ],
        axis=1,
    )
