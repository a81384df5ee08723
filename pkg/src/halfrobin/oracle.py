"""Finite-difference model of the half-space problem on a truncated strip.

The strip is ``[0, L) x [0, T)``: periodic in ``x`` with ``Nx`` points, depth
nodes ``t_i = i * T / Nt``.  At ``t = 0`` the Robin condition
``-du/dt = alpha u`` is imposed through a ghost node
``u_{-1} = u_1 + 2 h_t alpha u_0``; the last depth node carries a Neumann
ghost row.  Unknowns are ordered ``ix * Nt + it``.

The assembled matrix ``A`` is not symmetric as a plain array: the two
boundary rows carry a doubled coupling.  With trapezoid weights
``w = hx * ht * (1/2 on boundary rows, 1 elsewhere)``, ``W^(1/2) A W^(-1/2)``
is exactly symmetric for real ``alpha``; this weighted form is what the
``symmetric()`` accessor returns and what singular values are taken of.
"""
from __future__ import annotations

import logging
import os
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernels
from .grid import BoundaryGrid, GridFunction
from .halfspace import _check_below_threshold, weyl_multiplier
from .schatten import SingularSpectrum

log = logging.getLogger(__name__)

DENSE_LIMIT = 4096
DEPTH_FACTOR = 8.0


class QuadratureDepthWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class StripGrid:
    Nx: int
    Nt: int
    L: float
    T: float

    def __post_init__(self):
        if self.Nx < 8 or self.Nt < 8:
            raise ValueError(f"strip needs Nx, Nt >= 8, got {self.Nx}, {self.Nt}")
        if not (self.L > 0 and self.T > 0):
            raise ValueError("strip lengths must be positive")

    @property
    def hx(self) -> float:
        return self.L / self.Nx

    @property
    def ht(self) -> float:
        return self.T / self.Nt

    @property
    def size(self) -> int:
        return self.Nx * self.Nt

    @cached_property
    def t(self) -> np.ndarray:
        return np.arange(self.Nt) * self.ht

    @cached_property
    def depth_weights(self) -> np.ndarray:
        """Trapezoid weights in ``t`` (end nodes get ``ht / 2``)."""
        w = np.full(self.Nt, self.ht)
        w[0] = w[-1] = self.ht / 2
        return w

    @cached_property
    def weights(self) -> np.ndarray:
        return np.tile(self.depth_weights, self.Nx) * self.hx

    @property
    def boundary(self) -> BoundaryGrid:
        return BoundaryGrid(1, self.Nx, self.L)

    def depth_ok(self, lam: float) -> bool:
        return self.T >= DEPTH_FACTOR / np.sqrt(-lam)

    def refined(self) -> "StripGrid":
        return StripGrid(2 * self.Nx, 2 * self.Nt, self.L, self.T)

    def sample(self, fn) -> np.ndarray:
        """Evaluate ``fn(x, t)`` on the strip nodes, flattened."""
        x = np.arange(self.Nx) * self.hx
        X, Tt = np.meshgrid(x, self.t, indexing="ij")
        return np.asarray(fn(X, Tt), dtype=complex).ravel()

    def norm(self, u: np.ndarray) -> float:
        """Weighted (trapezoid) L^2 norm of strip values."""
        return float(np.sqrt(np.sum(self.weights * np.abs(u) ** 2)))


@dataclass(frozen=True, eq=False)
class SparseOperator:
    strip: StripGrid
    matrix: sp.csc_matrix

    def symmetric(self) -> sp.csc_matrix:
        d = np.sqrt(self.strip.weights)
        return (sp.diags(d) @ self.matrix @ sp.diags(1 / d)).tocsc()

    @cached_property
    def is_real(self) -> bool:
        return not np.any(self.matrix.data.imag)

    def factor(self, lam: complex):
        A = self.matrix - lam * sp.identity(self.strip.size, format="csc")
        if self.is_real and complex(lam).imag == 0:
            A = A.real
        return spla.splu(A.tocsc())


def fd_robin_matrix(alpha: GridFunction, strip: StripGrid) -> SparseOperator:
    """Sparse ``-Laplacian`` on the strip with ``-du/dt = alpha u`` at ``t = 0``."""
    vals = np.asarray(alpha.values)
    if vals.shape != (strip.Nx,):
        raise ValueError(f"alpha has {vals.size} samples but the strip has Nx = {strip.Nx}")
    if alpha.grid.n != 1 or abs(alpha.grid.L - strip.L) > 1e-12 * strip.L:
        raise ValueError("alpha grid and strip disagree on the boundary box")
    rows, cols, data = _kernels.active.strip_coo(vals.astype(complex), strip.Nt, strip.hx, strip.ht)
    A = sp.coo_matrix((data, (rows, cols)), shape=(strip.size, strip.size)).tocsc()
    if not np.any(A.data.imag):
        A = A.real.tocsc()
    A.sum_duplicates()
    return SparseOperator(strip, A)


def fd_neumann_matrix(strip: StripGrid) -> SparseOperator:
    return fd_robin_matrix(GridFunction(strip.boundary, np.zeros(strip.Nx)), strip)


def fd_resolvent_apply(A: SparseOperator, lam, u: np.ndarray, lu=None) -> np.ndarray:
    """Solve ``(A - lam) v = u``; raises if the relative residual exceeds 1e-10."""
    u = np.asarray(u)
    if not np.any(u):
        return np.zeros(A.strip.size, dtype=complex)
    lu = A.factor(lam) if lu is None else lu
    if np.iscomplexobj(u) and not np.iscomplexobj(lu.L.data):
        v = lu.solve(np.ascontiguousarray(u.real)) + 1j * lu.solve(np.ascontiguousarray(u.imag))
    else:
        v = lu.solve(u)
    r = (A.matrix @ v - lam * v) - u
    rel = np.linalg.norm(r) / np.linalg.norm(u)
    if not np.isfinite(rel) or rel > 1e-10:
        raise np.linalg.LinAlgError(f"resolvent solve residual {rel:.3g} (lam near the spectrum?)")
    return v


def _dense_resolvent(A: SparseOperator, lam: float) -> np.ndarray:
    lu = A.factor(lam)
    eye = np.eye(A.strip.size)
    return lu.solve(eye)


def fd_difference_singulars(alpha1: GridFunction, alpha2: GridFunction, lam: float,
                            strip: StripGrid, k_max: Optional[int] = None) -> SingularSpectrum:
    """Top singular values of the dense FD resolvent difference in weighted L^2."""
    if strip.size > DENSE_LIMIT:
        raise ValueError(f"strip has {strip.size} unknowns; dense limit is {DENSE_LIMIT}")
    lam = _check_below_threshold(lam, alpha1, alpha2)
    meta = {"strip": [strip.Nx, strip.Nt, strip.L, strip.T], "lam": lam, "operator": "fd_difference"}
    k_max = strip.size if k_max is None else int(k_max)
    if np.array_equal(alpha1.values, alpha2.values):
        return SingularSpectrum(np.zeros(k_max), meta)
    D = _dense_resolvent(fd_robin_matrix(alpha2, strip), lam)
    D -= _dense_resolvent(fd_robin_matrix(alpha1, strip), lam)
    d = np.sqrt(strip.weights)
    D = d[:, None] * D / d[None, :]
    s = np.linalg.svd(D, compute_uv=False)
    return SingularSpectrum(s[:k_max], meta)


# ---------------------------------------------------------------------------
# Krein-formula resolvent

def _fiber_omega(strip: StripGrid, lam: float) -> np.ndarray:
    xi = strip.boundary.axis_freq
    return np.sqrt(xi**2 - lam)


def gamma_adjoint(u: np.ndarray, lam: float, strip: StripGrid, rule: str = "trapezoid") -> np.ndarray:
    """``gamma(lam)^* u``: per fiber ``int_0^T exp(-omega t) u_hat(xi, t) dt / omega``."""
    omega = _fiber_omega(strip, lam)
    uh = np.fft.fft(np.asarray(u).reshape(strip.Nx, strip.Nt), axis=0)
    if rule == "trapezoid":
        w = strip.depth_weights
    elif rule == "simpson":
        w = _simpson_weights(strip.Nt, strip.ht)
    else:
        raise ValueError(f"unknown quadrature rule {rule!r}")
    q = _kernels.active.laplace_quad(uh, omega, strip.t, w)
    return np.fft.ifft(q / omega)


def _simpson_weights(Nt, h):
    if Nt % 2 == 0:
        # odd node count needed; fall back to trapezoid on the last panel
        w = np.zeros(Nt)
        w[:Nt - 1] = _simpson_weights(Nt - 1, h)
        w[-2] += h / 2
        w[-1] += h / 2
        return w
    w = np.full(Nt, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * h / 3


def gamma_apply(phi: np.ndarray, lam: float, strip: StripGrid) -> np.ndarray:
    """Poisson extension ``exp(-omega t) phi_hat / omega`` sampled on the strip."""
    omega = _fiber_omega(strip, lam)
    ph = np.fft.fft(np.asarray(phi))
    fib = np.exp(-np.outer(omega, strip.t)) * (ph / omega)[:, None]
    return np.fft.ifft(fib, axis=0).ravel()


def krein_resolvent_apply(alpha: GridFunction, lam: float, u: np.ndarray, strip: StripGrid,
                          rule: str = "trapezoid", neumann_lu=None) -> np.ndarray:
    """``(A_alpha - lam)^-1 u`` via the Neumann resolvent plus a boundary correction.

    ``(A_N - lam)^-1 u + gamma alpha (I - M alpha)^-1 gamma^* u`` with the
    Neumann term from the FD solver and the correction evaluated with
    continuum fiber formulas on the strip nodes.
    """
    lam = _check_below_threshold(lam, alpha)
    if not strip.depth_ok(lam):
        warnings.warn(f"strip depth {strip.T} < {DEPTH_FACTOR}/sqrt(-lam); quadrature truncated",
                      QuadratureDepthWarning, stacklevel=2)
    AN = fd_neumann_matrix(strip)
    v = fd_resolvent_apply(AN, lam, u, lu=neumann_lu)
    if not np.any(alpha.values):
        return v
    phi = gamma_adjoint(u, lam, strip, rule)
    M = weyl_multiplier(lam, alpha.grid).matrix()
    A = np.eye(strip.Nx) - M * alpha.values[None, :]
    psi = alpha.values * sla.solve(A, phi)
    return v + gamma_apply(psi, lam, strip)


# ---------------------------------------------------------------------------
# closed-form checks

def green_identity_residual(mode1, mode2) -> float:
    """``|LHS - RHS|`` of the Green identity for ``exp(i xi x - omega t)`` modes.

    Per unit boundary volume, with ``lam = |xi|^2 - omega^2``,
    ``Gamma_0 f = omega e^{i xi x}`` (Neumann trace) and
    ``Gamma_1 f = e^{i xi x}`` (Dirichlet trace).  Distinct lattice
    frequencies are orthogonal, so both sides vanish.
    """
    (xi1, w1), (xi2, w2) = mode1, mode2
    w1, w2 = float(w1), float(w2)
    if not (w1 > 0 and w2 > 0):
        raise ValueError("mode decay rates must be positive")
    xi1 = np.atleast_1d(np.asarray(xi1, dtype=float))
    xi2 = np.atleast_1d(np.asarray(xi2, dtype=float))
    if not np.array_equal(xi1, xi2):
        return 0.0
    lam1 = xi1 @ xi1 - w1**2
    lam2 = xi2 @ xi2 - w2**2
    overlap = 1.0 / (w1 + w2)  # int_0^inf exp(-(w1 + w2) t) dt
    lhs = lam1 * overlap - lam2 * overlap
    rhs = 1.0 * w2 - w1 * 1.0
    return float(abs(lhs - rhs))


@dataclass(frozen=True)
class FiberBoundState:
    fd: float
    analytic: float

    @property
    def rel_error(self) -> float:
        return abs(self.fd - self.analytic) / max(abs(self.analytic), 1e-300)


def fiber_bound_state(c: float, xi: float, Nt: int = 512, T: float = 40.0):
    """Lowest eigenvalue of the FD half-line Robin fiber; ``None`` when ``c <= 0``.

    The fiber operator is ``-d^2/dt^2 + xi^2`` on ``[0, T)`` with
    ``-u'(0) = c u(0)`` and Neumann at the last node; its continuum bound state
    sits at ``xi^2 - c^2``.
    """
    if not c > 0:
        return None
    h = T / Nt
    diag = np.full(Nt, 2.0 / h**2 + xi**2)
    diag[0] -= 2.0 * c / h
    off = np.full(Nt - 1, -1.0 / h**2)
    # weighted-symmetric form of the doubled ghost-row couplings
    off[0] = off[-1] = -np.sqrt(2.0) / h**2
    ev = sla.eigh_tridiagonal(diag, off, select="i", select_range=(0, 0), eigvals_only=True)
    return FiberBoundState(float(ev[0]), float(xi**2 - c**2))


def fd_strip_eigenvalues(alpha: GridFunction, strip: StripGrid, k: int = 6, below: float = 0.0):
    """Lowest eigenvalues of the FD Robin strip that lie below ``below``."""
    A = fd_robin_matrix(alpha, strip)
    S = A.symmetric()
    if A.is_real:
        vals = spla.eigsh(S, k=k, sigma=-2 * np.max(np.abs(alpha.values)) ** 2 - 1, which="LM",
                          return_eigenvectors=False)
    else:
        vals = spla.eigs(S, k=k, sigma=-2 * np.max(np.abs(alpha.values)) ** 2 - 1,
                         return_eigenvectors=False)
    vals = np.sort_complex(np.asarray(vals, dtype=complex))
    return vals[vals.real < below]


def dump_csv(path: str, array: np.ndarray, header: str = "") -> None:
    """Debug dump of a strip field or matrix, enabled by ``HALFROBIN_DUMP=1``."""
    if os.environ.get("HALFROBIN_DUMP", "0") in ("", "0"):
        return
    a = np.asarray(array)
    if np.iscomplexobj(a):
        a = np.column_stack([a.real.ravel(), a.imag.ravel()])
        header = header or "re,im"
    np.savetxt(path, a, delimiter=",", header=header, comments="")
