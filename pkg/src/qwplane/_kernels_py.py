"""Pure numpy versions of the compiled kernels (same signatures, same arithmetic order)."""
import numpy as np

_BLOCK = 1024


def step_float(a, coin, r):
    nx, m2 = a.shape[1], a.shape[2]
    out = np.zeros((4, nx + r + 1, m2 + 2 * (r + 1)), dtype=np.float64)
    oi = (1 + r, 0, 1, 1)
    oj = (2, 2, 2 * (1 + r), 0)
    for c in range(4):
        phi = coin[c, 0] * a[0] + coin[c, 1] * a[1] + coin[c, 2] * a[2] + coin[c, 3] * a[3]
        out[c, oi[c]:oi[c] + nx, oj[c]:oj[c] + m2] = phi
    return out


def origin_series(theta, w, times):
    n, nt = theta.shape[0], times.shape[0]
    wc = np.ascontiguousarray(w).view(np.complex128)  # (n, 4, 4)
    total = np.zeros((nt, 4), dtype=np.complex128)
    for start in range(0, n, _BLOCK):
        th = theta[start:start + _BLOCK]
        wb = wc[start:start + _BLOCK]
        z = np.exp(1j * th * times[0])
        step_cache = {}
        prev = times[0]
        local = np.zeros((nt, 4), dtype=np.complex128)
        for ti in range(nt):
            if ti > 0:
                d = int(times[ti] - prev)
                if d not in step_cache:
                    step_cache = {d: np.exp(1j * th * d)}
                z = z * step_cache[d]
                prev = times[ti]
            local[ti] = np.einsum("nj,njc->c", z, wb)
        total += local
    return total.view(np.float64).reshape(nt, 8)
