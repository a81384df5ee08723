"""Boundary operators of the Robin Laplacian on the half-space R^{n+1}_+.

With Fourier variable ``xi`` on the boundary and ``omega = (|xi|^2 - lam)^{1/2}``
(principal branch), the Neumann-to-Dirichlet map is the multiplier ``1/omega``
and the Poisson operator maps a Neumann datum to ``exp(-omega t) / omega`` in
each fiber.  For real ``lam < 0`` the Gram operator ``gamma* gamma`` is the
multiplier ``1 / (2 omega^3)``; its square root is used to transfer singular
value questions for the resolvent difference from the half-space to the
boundary.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from .grid import (
    BoundaryGrid,
    BoundaryOperator,
    FourierMultiplier,
    GridFunction,
    _same_grid,
)

log = logging.getLogger(__name__)

COND_LIMIT = 1e12


class IllConditionedWarning(RuntimeWarning):
    pass


def _check_resolvent_point(lam) -> complex:
    lam = complex(lam)
    if not np.isfinite(lam):
        raise ValueError(f"spectral parameter must be finite, got {lam}")
    if lam.imag == 0 and lam.real >= 0:
        raise ValueError(f"spectral parameter {lam} lies on [0, inf), the Neumann spectrum")
    return lam


def _check_real_negative(lam) -> float:
    lam = complex(lam)
    if lam.imag != 0 or not lam.real < 0:
        raise ValueError(f"spectral parameter must be real and negative, got {lam}")
    return lam.real


def schatten_threshold(*alphas: GridFunction) -> float:
    """``-max ||alpha_i||_inf^2``: real spectral parameters must lie below it."""
    return -max(a.sup_norm() for a in alphas) ** 2


def _check_below_threshold(lam, *alphas) -> float:
    lam = _check_real_negative(lam)
    bound = schatten_threshold(*alphas)
    if not lam < bound:
        raise ValueError(f"need lam < -max ||alpha||_inf^2 = {bound:.6g}, got {lam}")
    return lam


def _maybe_real(x):
    return x.real if np.iscomplexobj(x) and not np.any(x.imag) else x


# ---------------------------------------------------------------------------
# multipliers

def weyl_multiplier(lam, grid: BoundaryGrid) -> FourierMultiplier:
    """Neumann-to-Dirichlet map ``(|xi|^2 - lam)^(-1/2)`` on ``grid``."""
    lam = _check_resolvent_point(lam)
    sym = 1.0 / np.sqrt(grid.xi2 - lam + 0j)
    return FourierMultiplier(grid, _maybe_real(sym))


def gram_sqrt_multiplier(lam, grid: BoundaryGrid) -> FourierMultiplier:
    """Square root of ``gamma(lam)* gamma(lam)``: ``2^(-1/2) (|xi|^2 - lam)^(-3/4)``."""
    lam = _check_real_negative(lam)
    return FourierMultiplier(grid, 2**-0.5 * (grid.xi2 - lam) ** -0.75)


def cwikel_multiplier(grid: BoundaryGrid) -> FourierMultiplier:
    return FourierMultiplier(grid, (1.0 + grid.xi2) ** -0.75)


def constant_difference_symbol(c1: complex, c2: complex, lam, grid: BoundaryGrid) -> np.ndarray:
    """Symbol of the boundary-reduced difference when both coefficients are constant."""
    lam = _check_real_negative(lam)
    m = (grid.xi2 - lam) ** -0.5
    gram = 0.5 * (grid.xi2 - lam) ** -1.5
    return _maybe_real(gram * (c2 - c1) / ((1 - c1 * m) * (1 - m * c2)) + 0j)


# ---------------------------------------------------------------------------
# dense boundary operators

def _lu_with_rcond(A):
    lu, piv = sla.lu_factor(A, check_finite=False)
    gecon, = sla.get_lapack_funcs(("gecon",), (lu,))
    anorm = np.max(np.sum(np.abs(A), axis=0))
    rcond, info = gecon(lu, anorm, norm="1")
    return (lu, piv), float(rcond)


def boundary_reduced_difference(alpha1: GridFunction, alpha2: GridFunction, lam) -> BoundaryOperator:
    """Dense boundary form of ``(A_alpha2 - lam)^-1 - (A_alpha1 - lam)^-1``.

    Returns ``T = G (I - alpha1 M)^-1 (alpha2 - alpha1) (I - M alpha2)^-1 G``
    with ``M`` the Neumann-to-Dirichlet map and ``G`` the square root of the
    Gram operator of the Poisson operator.  ``T`` has the same singular values
    as the half-space resolvent difference.

    ``flags["rcond"]`` holds the smaller reciprocal 1-norm condition estimate
    of the two solves; ``flags["ill_conditioned"]`` is set (with a warning)
    when it drops below ``1 / COND_LIMIT``.
    """
    grid = _same_grid(alpha1, alpha2)
    lam = _check_below_threshold(lam, alpha1, alpha2)
    diff = alpha2.values - alpha1.values
    if not np.any(diff):
        return BoundaryOperator(grid, np.zeros((grid.size, grid.size)),
                                {"rcond": 1.0, "ill_conditioned": False})
    M = weyl_multiplier(lam, grid).matrix()
    G = gram_sqrt_multiplier(lam, grid).matrix()
    eye = np.eye(grid.size)
    right, rc2 = _lu_with_rcond(eye - M * alpha2.values[None, :])
    left, rc1 = _lu_with_rcond(eye - alpha1.values[:, None] * M)
    del M, eye
    X = sla.lu_solve(right, G, check_finite=False)
    X = sla.lu_solve(left, diff[:, None] * X, check_finite=False)
    T = G @ X
    rcond = min(rc1, rc2)
    bad = rcond < 1.0 / COND_LIMIT
    if bad:
        warnings.warn(f"boundary solve condition estimate {1 / rcond:.3g} exceeds {COND_LIMIT:g}",
                      IllConditionedWarning, stacklevel=2)
    return BoundaryOperator(grid, T, {"rcond": rcond, "ill_conditioned": bad})


def cwikel_matrix(alpha: GridFunction, mode: str = "raw") -> BoundaryOperator:
    """``diag(beta) (I - Laplacian)^(-3/4)`` with ``beta = alpha`` or ``sqrt|alpha|``."""
    if mode == "raw":
        beta = alpha.values
    elif mode == "sqrtabs":
        beta = np.sqrt(np.abs(alpha.values))
    else:
        raise ValueError(f"mode must be 'raw' or 'sqrtabs', got {mode!r}")
    F = cwikel_multiplier(alpha.grid).matrix()
    return BoundaryOperator(alpha.grid, beta[:, None] * F)


def birman_schwinger_matrix(alpha: GridFunction, lam) -> BoundaryOperator:
    """Dense ``diag(alpha) M(lam)``; ``lam`` is an eigenvalue iff 1 is in its spectrum."""
    M = weyl_multiplier(lam, alpha.grid).matrix()
    return BoundaryOperator(alpha.grid, alpha.values[:, None] * M)


def bs_characteristic(alpha: GridFunction, lam) -> float:
    """Smallest singular value of ``I - alpha M(lam)``."""
    K = birman_schwinger_matrix(alpha, lam).entries
    A = np.eye(K.shape[0]) - K
    return float(np.linalg.svd(A, compute_uv=False)[-1])


# ---------------------------------------------------------------------------
# eigenvalue search

@dataclass(frozen=True)
class EigenvalueRecord:
    lam: complex
    residual: float
    status: str = "converged"

    def to_dict(self) -> dict:
        return {"re": self.lam.real, "im": self.lam.imag, "residual": self.residual,
                "status": self.status}


def _golden(fn, lo, hi, xtol, maxiter=200):
    invphi = (np.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(maxiter):
        if b - a <= xtol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    return (c, fc) if fc <= fd else (d, fd)


def _refine(fn, z0: complex, step: float, tol: float, max_cycles: int = 60):
    """Coordinate cycling with golden-section line searches around ``z0``."""
    z, fz = z0, fn(z0)
    width = step
    xtol = max(tol * 1e-3, 1e-14 * max(1.0, abs(z0)))
    for _ in range(max_cycles):
        start = z
        x, fx = _golden(lambda s: fn(complex(s, z.imag)), z.real - width, z.real + width, xtol)
        if fx <= fz:
            z, fz = complex(x, z.imag), fx
        y, fy = _golden(lambda s: fn(complex(z.real, s)), z.imag - width, z.imag + width, xtol)
        if fy <= fz:
            z, fz = complex(z.real, y), fy
        move = abs(z - start)
        if fz < tol and move <= xtol * 10:
            break
        width = max(4 * move, 20 * xtol) if move > 0 else width / 4
        if width < xtol:
            break
    return z, fz


def _local_minima(vals: np.ndarray) -> List[Tuple[int, int]]:
    nr, ni = vals.shape
    padded = np.pad(vals, 1, constant_values=np.inf)
    out = []
    for i in range(nr):
        for j in range(ni):
            v = vals[i, j]
            nb = padded[i:i + 3, j:j + 3].copy()
            nb[1, 1] = np.inf
            if v < nb.min():
                out.append((i, j))
    return out


def find_eigenvalues(
    alpha: GridFunction,
    region: Sequence[float],
    scan: Tuple[int, int] = (24, 12),
    refine: float = 1e-10,
    threshold: float = 0.3,
    margin: float = 1e-8,
) -> List[EigenvalueRecord]:
    """Locate ``lam`` in a rectangle where ``I - alpha M(lam)`` is singular.

    ``region`` is ``(re_min, re_max, im_min, im_max)``.  The smallest singular
    value is scanned on a ``scan[0] x scan[1]`` mesh; strict local minima below
    ``threshold`` seed a golden-section coordinate search.  Points whose final
    residual is not below ``refine`` are dropped; survivors closer than
    ``10 * refine`` (or the line-search resolution) are merged.  Results are
    sorted by real then imaginary part.
    """
    re0, re1, im0, im1 = map(float, region)
    if not (re0 < re1 and im0 <= im1):
        raise ValueError(f"malformed region {region}")
    if refine <= 0:
        raise ValueError("refine tolerance must be positive")
    if re1 > -margin and im0 < margin and im1 > -margin:
        raise ValueError(f"region {region} touches the essential spectrum [0, inf)")
    if not np.any(alpha.values):
        return []
    nr, ni = scan
    res = np.linspace(re0, re1, nr)
    ims = np.linspace(im0, im1, ni) if ni > 1 else np.array([0.5 * (im0 + im1)])
    vals = np.array([[bs_characteristic(alpha, complex(r, i)) for i in ims] for r in res])
    step = max(res[1] - res[0] if nr > 1 else 0.0, ims[1] - ims[0] if ni > 1 else 0.0)

    def fn(z):
        if z.imag == 0 and z.real >= 0:
            return np.inf
        return bs_characteristic(alpha, z)

    found: List[EigenvalueRecord] = []
    for i, j in _local_minima(vals):
        if vals[i, j] >= threshold:
            continue
        z, fz = _refine(fn, complex(res[i], ims[j]), step, refine)
        log.debug("seed (%g, %g) -> %s residual %.3g", res[i], ims[j], z, fz)
        # seeds near the edge may slide to a root outside the rectangle
        if fz < refine and re0 <= z.real <= re1 and im0 <= z.imag <= im1:
            found.append(EigenvalueRecord(z, float(fz)))
    radius = max(10 * refine, 1e-9 * max(1.0, abs(re0), abs(re1)))
    unique: List[EigenvalueRecord] = []
    for rec in sorted(found, key=lambda r: r.residual):
        if all(abs(rec.lam - u.lam) > radius for u in unique):
            unique.append(rec)
    return sorted(unique, key=lambda r: (round(r.lam.real, 12), round(r.lam.imag, 12)))


def hansmann_sum(eigs: Iterable, a: float, p: float) -> float:
    """``sum dist(1/(lam + a), [0, 1/a])^p`` over the given eigenvalues.

    Each distinct eigenvalue is counted once; algebraic multiplicities are
    not available from the singular-value scan.
    """
    if a <= 0:
        raise ValueError(f"a must be positive, got {a}")
    if p <= 0:
        raise ValueError(f"p must be positive, got {p}")
    total = 0.0
    for e in eigs:
        lam = e.lam if isinstance(e, EigenvalueRecord) else complex(e)
        w = 1.0 / (lam + a)
        x = min(max(w.real, 0.0), 1.0 / a)
        total += abs(w - x) ** p
    return float(total)


def essential_bottom(c: float) -> float:
    """Bottom of the essential spectrum of the constant-coefficient Robin Laplacian."""
    c = float(c)
    return -c * c if c > 0 else 0.0
