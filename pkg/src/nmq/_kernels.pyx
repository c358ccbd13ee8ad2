# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: radix-4 Hadamard butterflies and the Volterra stepper.

Both functions mirror ``nmq._kernels_py`` exactly; the pure-Python module is
the fallback when this extension is not built.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def fwht4(cnp.ndarray[cnp.float64_t, ndim=2] data, bint inverse=False):
    """Apply H^{(x)N} along the last axis of a (rows, 4**N) array.

    Digit k of the little-endian flat index is processed at stage k with
    stride 4**k. ``inverse`` scales each stage by 1/4.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.array(data, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] v = out
    cdef Py_ssize_t rows = v.shape[0]
    cdef Py_ssize_t length = v.shape[1]
    cdef Py_ssize_t r, stride, block, j, i0, i1, i2, i3
    cdef double x0, x1, x2, x3, s01, d01, s23, d23
    cdef double scale = 0.25 if inverse else 1.0

    for r in range(rows):
        stride = 1
        while stride < length:
            block = 0
            while block < length:
                for j in range(stride):
                    i0 = block + j
                    i1 = i0 + stride
                    i2 = i1 + stride
                    i3 = i2 + stride
                    x0 = v[r, i0]
                    x1 = v[r, i1]
                    x2 = v[r, i2]
                    x3 = v[r, i3]
                    s01 = x0 + x1
                    d01 = x0 - x1
                    s23 = x2 + x3
                    d23 = x2 - x3
                    v[r, i0] = scale * (s01 + s23)
                    v[r, i1] = scale * (s01 - s23)
                    v[r, i2] = scale * (d01 + d23)
                    v[r, i3] = scale * (d01 - d23)
                block += 4 * stride
            stride *= 4
    return out


def volterra_heun(cnp.ndarray[cnp.float64_t, ndim=2] kvals, double dt):
    """Solve dl/dt = int_0^t k(t-s) l(s) ds, l(0) = 1, on a uniform grid.

    ``kvals[b, m]`` is the kernel of row b at lag m*dt; the returned array has
    the same shape and holds l_b(m*dt). Heun predictor-corrector with a
    trapezoidal history sum.
    """
    cdef Py_ssize_t nb = kvals.shape[0]
    cdef Py_ssize_t npts = kvals.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((nb, npts), dtype=np.float64)
    cdef double[:, ::1] lam = out
    cdef double[:, ::1] k = np.ascontiguousarray(kvals)
    cdef Py_ssize_t b, n, j
    cdef double hist, cur, pred, new_hist, acc

    for b in range(nb):
        lam[b, 0] = 1.0
        hist = 0.0
        for n in range(npts - 1):
            acc = 0.5 * k[b, n + 1] * lam[b, 0]
            for j in range(1, n + 1):
                acc += k[b, n + 1 - j] * lam[b, j]
            cur = lam[b, n]
            pred = cur + dt * hist
            new_hist = dt * (acc + 0.5 * k[b, 0] * pred)
            lam[b, n + 1] = cur + 0.5 * dt * (hist + new_hist)
            hist = new_hist + 0.5 * dt * k[b, 0] * (lam[b, n + 1] - pred)
    return out
