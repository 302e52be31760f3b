# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-step kernels: per-sample gradients and per-sample clipping.

Each kernel walks the minibatch one example at a time and reduces in index
order, so results are deterministic for a fixed input.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt, tanh

cnp.import_array()

DEF CLIP_OFF = 0
DEF CLIP_AUTO = 1
DEF CLIP_THRESHOLD = 2


cdef inline double _row_scale(double norm, double gamma, double scale, int mode) nogil:
    if mode == CLIP_AUTO:
        if norm + gamma > 0:
            return scale / (norm + gamma)
        return 0.0
    if mode == CLIP_THRESHOLD:
        if norm > scale:
            return scale / norm
        return 1.0
    return 1.0


def clip_rows(double[:, ::1] grads, double gamma, double scale, int mode):
    cdef Py_ssize_t b = grads.shape[0], d = grads.shape[1], i, j
    cdef double acc, s
    out = np.empty((b, d), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(b):
            acc = 0.0
            for j in range(d):
                acc = acc + grads[i, j] * grads[i, j]
            s = _row_scale(sqrt(acc), gamma, scale, mode)
            for j in range(d):
                o[i, j] = grads[i, j] * s
    return out


def clip_mean(double[:, ::1] grads, double gamma, double scale, int mode):
    cdef Py_ssize_t b = grads.shape[0], d = grads.shape[1], i, j
    cdef double acc, s
    out = np.zeros(d, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(b):
            acc = 0.0
            for j in range(d):
                acc = acc + grads[i, j] * grads[i, j]
            s = _row_scale(sqrt(acc), gamma, scale, mode)
            for j in range(d):
                o[j] = o[j] + grads[i, j] * s
        for j in range(d):
            o[j] = o[j] / b
    return out


cdef inline double _sigmoid(double z) nogil:
    cdef double ez
    if z >= 0:
        return 1.0 / (1.0 + exp(-z))
    ez = exp(z)
    return ez / (1.0 + ez)


def logistic_grads(double[:, ::1] X, double[::1] y, double[::1] w):
    cdef Py_ssize_t b = X.shape[0], m = X.shape[1], i, j
    cdef double z, r
    out = np.empty((b, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(b):
            z = 0.0
            for j in range(m):
                z = z + X[i, j] * w[j]
            r = _sigmoid(z) - y[i]
            for j in range(m):
                o[i, j] = r * X[i, j]
    return out


def mlp_grads(double[:, ::1] X, long[::1] labels, double[::1] theta,
              Py_ssize_t m, Py_ssize_t h, Py_ssize_t c):
    cdef Py_ssize_t b = X.shape[0], i, j, k
    cdef Py_ssize_t ob1 = h * m, ow2 = ob1 + h, ob2 = ow2 + c * h
    cdef Py_ssize_t d = ob2 + c
    cdef double a, mx, tot
    out = np.empty((b, d), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double[::1] z = np.empty(h, dtype=np.float64)
    cdef double[::1] p = np.empty(c, dtype=np.float64)
    cdef double[::1] da = np.empty(h, dtype=np.float64)
    with nogil:
        for i in range(b):
            for j in range(h):
                a = theta[ob1 + j]
                for k in range(m):
                    a = a + theta[j * m + k] * X[i, k]
                z[j] = tanh(a)
            for j in range(c):
                a = theta[ob2 + j]
                for k in range(h):
                    a = a + theta[ow2 + j * h + k] * z[k]
                p[j] = a
            mx = p[0]
            for j in range(1, c):
                if p[j] > mx:
                    mx = p[j]
            tot = 0.0
            for j in range(c):
                p[j] = exp(p[j] - mx)
                tot = tot + p[j]
            for j in range(c):
                p[j] = p[j] / tot
            p[labels[i]] = p[labels[i]] - 1.0
            for k in range(h):
                a = 0.0
                for j in range(c):
                    a = a + p[j] * theta[ow2 + j * h + k]
                da[k] = a * (1.0 - z[k] * z[k])
            for j in range(h):
                for k in range(m):
                    o[i, j * m + k] = da[j] * X[i, k]
                o[i, ob1 + j] = da[j]
            for j in range(c):
                for k in range(h):
                    o[i, ow2 + j * h + k] = p[j] * z[k]
                o[i, ob2 + j] = p[j]
    return out
