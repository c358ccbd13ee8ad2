"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``."""
import numpy as np


def fwht4(data, inverse=False):
    out = np.array(data, dtype=np.float64, order="C", copy=True)
    rows, length = out.shape
    scale = 0.25 if inverse else 1.0
    stride = 1
    while stride < length:
        view = out.reshape(rows, length // (4 * stride), 4, stride)
        x0, x1, x2, x3 = (view[:, :, i, :].copy() for i in range(4))
        s01, d01 = x0 + x1, x0 - x1
        s23, d23 = x2 + x3, x2 - x3
        view[:, :, 0, :] = s01 + s23
        view[:, :, 1, :] = s01 - s23
        view[:, :, 2, :] = d01 + d23
        view[:, :, 3, :] = d01 - d23
        if inverse:
            view *= scale
        stride *= 4
    return out


def volterra_heun(kvals, dt):
    k = np.ascontiguousarray(kvals, dtype=np.float64)
    nb, npts = k.shape
    lam = np.empty((nb, npts))
    lam[:, 0] = 1.0
    hist = np.zeros(nb)
    for n in range(npts - 1):
        # sum_{j=1}^{n} k[n+1-j] lam[j]
        acc = 0.5 * k[:, n + 1] * lam[:, 0]
        if n:
            acc = acc + np.einsum("bj,bj->b", k[:, n:0:-1], lam[:, 1:n + 1])
        cur = lam[:, n]
        pred = cur + dt * hist
        new_hist = dt * (acc + 0.5 * k[:, 0] * pred)
        lam[:, n + 1] = cur + 0.5 * dt * (hist + new_hist)
        hist = new_hist + 0.5 * dt * k[:, 0] * (lam[:, n + 1] - pred)
    return lam
