"""Inner loops with a numba path and a pure-numpy path.

The numba path is used when numba imports cleanly and the environment
variable ``HALFROBIN_DISABLE_NUMBA`` is unset (or ``0``).  Both paths are
always importable so tests and the benchmark can compare them directly:
``numpy_kernels`` and ``numba_kernels`` are namespaces with identical
signatures, ``active`` is the one the library calls.
"""
import os
from types import SimpleNamespace

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

DISABLE_ENV = "HALFROBIN_DISABLE_NUMBA"


def _numba_requested():
    return os.environ.get(DISABLE_ENV, "0").strip().lower() in ("", "0", "false", "no")


# ---------------------------------------------------------------------------
# circulant expansion: dense[j, l] = kernel[(j - l) mod N, per axis]

def _circulant_numpy(kernel):
    shape = kernel.shape
    ndim = len(shape)
    flat = np.indices(shape).reshape(ndim, -1)
    lin = np.zeros((flat.shape[1], flat.shape[1]), dtype=np.intp)
    for ax, N in enumerate(shape):
        diff = np.subtract.outer(flat[ax], flat[ax]) % N
        lin = lin * N + diff
    return kernel.reshape(-1)[lin]


def _circulant_loops(kernel_flat, shape):
    ndim = shape.shape[0]
    size = kernel_flat.shape[0]
    out = np.empty((size, size), dtype=kernel_flat.dtype)
    jdx = np.empty(ndim, dtype=np.int64)
    ldx = np.empty(ndim, dtype=np.int64)
    for j in range(size):
        r = j
        for ax in range(ndim - 1, -1, -1):
            jdx[ax] = r % shape[ax]
            r //= shape[ax]
        for l in range(size):
            r = l
            for ax in range(ndim - 1, -1, -1):
                ldx[ax] = r % shape[ax]
                r //= shape[ax]
            lin = 0
            for ax in range(ndim):
                lin = lin * shape[ax] + (jdx[ax] - ldx[ax]) % shape[ax]
            out[j, l] = kernel_flat[lin]
    return out


# ---------------------------------------------------------------------------
# 5-point strip stencil, periodic in x, ghost-node Robin at t=0, Neumann at the
# last depth node.  Unknown (ix, it) sits at ix * Nt + it.

def _strip_coo_numpy(alpha, Nt, hx, ht):
    Nx = alpha.shape[0]
    ix, it = np.meshgrid(np.arange(Nx), np.arange(Nt), indexing="ij")
    ix = ix.ravel()
    it = it.ravel()
    me = ix * Nt + it
    cx = 1.0 / hx**2
    ct = 1.0 / ht**2
    diag = np.full(Nx * Nt, 2 * cx + 2 * ct, dtype=np.complex128)
    bottom = it == 0
    diag[bottom] -= 2.0 * alpha[ix[bottom]] / ht
    rows = [me, me, me]
    cols = [((ix - 1) % Nx) * Nt + it, ((ix + 1) % Nx) * Nt + it, me]
    vals = [np.full(me.size, -cx, dtype=np.complex128),
            np.full(me.size, -cx, dtype=np.complex128), diag]
    up = np.where(it == 0, -2 * ct, -ct).astype(np.complex128)
    has_up = it < Nt - 1
    rows.append(me[has_up])
    cols.append(me[has_up] + 1)
    vals.append(up[has_up])
    down = np.where(it == Nt - 1, -2 * ct, -ct).astype(np.complex128)
    has_down = it > 0
    rows.append(me[has_down])
    cols.append(me[has_down] - 1)
    vals.append(down[has_down])
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def _strip_coo_loops(alpha, Nt, hx, ht):
    Nx = alpha.shape[0]
    nnz = Nx * Nt * 5 - 2 * Nx
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.complex128)
    cx = 1.0 / hx**2
    ct = 1.0 / ht**2
    p = 0
    for ix in range(Nx):
        left = ((ix - 1) % Nx) * Nt
        right = ((ix + 1) % Nx) * Nt
        for it in range(Nt):
            me = ix * Nt + it
            d = 2 * cx + 2 * ct + 0j
            if it == 0:
                d -= 2.0 * alpha[ix] / ht
            rows[p] = me; cols[p] = left + it; vals[p] = -cx; p += 1
            rows[p] = me; cols[p] = right + it; vals[p] = -cx; p += 1
            rows[p] = me; cols[p] = me; vals[p] = d; p += 1
            if it < Nt - 1:
                rows[p] = me; cols[p] = me + 1
                vals[p] = -2 * ct if it == 0 else -ct
                p += 1
            if it > 0:
                rows[p] = me; cols[p] = me - 1
                vals[p] = -2 * ct if it == Nt - 1 else -ct
                p += 1
    return rows, cols, vals


# ---------------------------------------------------------------------------
# fiberwise Laplace-type quadrature: out[k] = sum_i w[i] exp(-omega[k] t[i]) u[k, i]

def _laplace_quad_numpy(u, omega, t, w):
    return np.einsum("ki,ki,i->k", np.exp(-np.outer(omega, t)), u, w)


def _laplace_quad_loops(u, omega, t, w):
    K, M = u.shape
    out = np.zeros(K, dtype=np.complex128)
    for k in range(K):
        acc = 0j
        for i in range(M):
            acc += w[i] * np.exp(-omega[k] * t[i]) * u[k, i]
        out[k] = acc
    return out


def _wrap_numpy():
    return SimpleNamespace(
        name="numpy",
        circulant=_circulant_numpy,
        strip_coo=_strip_coo_numpy,
        laplace_quad=lambda u, omega, t, w: _laplace_quad_numpy(
            np.asarray(u, dtype=np.complex128), np.asarray(omega, dtype=np.complex128),
            np.asarray(t, dtype=float), np.asarray(w, dtype=float)),
    )


def _wrap_numba():
    circ = numba.njit(cache=True)(_circulant_loops)
    coo = numba.njit(cache=True)(_strip_coo_loops)
    quad = numba.njit(cache=True)(_laplace_quad_loops)

    def circulant(kernel):
        kernel = np.ascontiguousarray(kernel)
        return circ(kernel.reshape(-1), np.asarray(kernel.shape, dtype=np.int64))

    def strip_coo(alpha, Nt, hx, ht):
        return coo(np.ascontiguousarray(alpha, dtype=np.complex128), int(Nt),
                   float(hx), float(ht))

    def laplace_quad(u, omega, t, w):
        return quad(np.ascontiguousarray(u, dtype=np.complex128),
                    np.ascontiguousarray(omega, dtype=np.complex128),
                    np.ascontiguousarray(t, dtype=float),
                    np.ascontiguousarray(w, dtype=float))

    return SimpleNamespace(name="numba", circulant=circulant, strip_coo=strip_coo,
                           laplace_quad=laplace_quad)


numpy_kernels = _wrap_numpy()
numba_kernels = _wrap_numba() if numba is not None else None
active = numba_kernels if (numba_kernels is not None and _numba_requested()) else numpy_kernels
