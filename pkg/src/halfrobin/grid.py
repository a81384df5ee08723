"""Periodic lattice model of the boundary R^n and its discrete Fourier calculus.

Conventions
-----------
* Lattice points are ``x_j = j * L / N`` per axis, ``j = 0..N-1``; arrays of
  grid values are flattened in C (lexicographic) order, last axis fastest.
* Frequencies are stored in FFT order (``numpy.fft.fftfreq``), so a symbol
  array lines up with ``numpy.fft.fftn`` output.  For even ``N`` the Nyquist
  mode carries index ``-N/2``.
* All transforms use the unitary normalization (``norm="ortho"``); operator
  norms of multipliers are then exactly ``max |symbol|``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from . import _kernels


@dataclass(frozen=True)
class BoundaryGrid:
    """Uniform periodic grid with ``N`` points per axis on ``[0, L)^n``."""

    n: int
    N: int
    L: float

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise ValueError(f"dimension n must be 1, 2 or 3, got {self.n}")
        if int(self.N) != self.N or self.N < 4:
            raise ValueError(f"N must be an integer >= 4, got {self.N}")
        if not np.isfinite(self.L) or self.L <= 0:
            raise ValueError(f"box length L must be positive, got {self.L}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "L", float(self.L))

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.n

    @property
    def size(self) -> int:
        return self.N**self.n

    @property
    def spacing(self) -> float:
        return self.L / self.N

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.n

    @cached_property
    def axis(self) -> np.ndarray:
        return np.arange(self.N) * self.spacing

    @cached_property
    def axis_freq(self) -> np.ndarray:
        """Per-axis angular frequencies ``2 pi k / L`` in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.N, d=self.spacing)

    @cached_property
    def points(self) -> np.ndarray:
        """``(size, n)`` array of lattice points, lexicographic order."""
        mesh = np.meshgrid(*([self.axis] * self.n), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @cached_property
    def freqs(self) -> np.ndarray:
        """``(size, n)`` array of frequency vectors, FFT order per axis."""
        mesh = np.meshgrid(*([self.axis_freq] * self.n), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @cached_property
    def xi2(self) -> np.ndarray:
        """``|xi|^2`` over the frequency lattice (flattened)."""
        return np.sum(self.freqs**2, axis=1)

    def frequency_indices(self) -> np.ndarray:
        """Sorted integer frequency indices ``k`` for one axis."""
        return np.sort(np.rint(self.axis_freq * self.L / (2 * np.pi)).astype(int))

    def min_image(self, x0) -> np.ndarray:
        """Per-axis periodic displacement ``x - x0`` wrapped into ``[-L/2, L/2)``."""
        x0 = np.broadcast_to(np.asarray(x0, dtype=float), (self.n,))
        d = self.points - x0
        return (d + self.L / 2) % self.L - self.L / 2

    def describe(self) -> dict:
        return {"n": self.n, "N": self.N, "L": self.L}


def make_grid(n: int, N: int, L: float) -> BoundaryGrid:
    return BoundaryGrid(n, N, L)


def _same_grid(*objs):
    g = objs[0].grid
    for o in objs[1:]:
        if o.grid != g:
            raise ValueError(f"grid mismatch: {g} vs {o.grid}")
    return g


def _checked(values, size, what):
    values = np.asarray(values)
    if values.ndim != 1 or values.shape[0] != size:
        raise ValueError(f"{what} must have length {size}, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{what} has non-finite entries")
    return values


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples on a :class:`BoundaryGrid`; ``values`` is the flattened array."""

    grid: BoundaryGrid
    values: np.ndarray

    def __post_init__(self):
        v = _checked(self.values, self.grid.size, "GridFunction values")
        if not np.iscomplexobj(v):
            v = v.astype(float)
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values) or not np.any(self.values.imag)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def lp_norm(self, p: float) -> float:
        """Lattice ``L^p`` norm scaled by the cell volume."""
        return float((np.sum(np.abs(self.values) ** p) * self.grid.cell_volume) ** (1 / p))

    def l2_norm(self) -> float:
        """Euclidean norm of the samples (the norm the unitary DFT preserves)."""
        return float(np.linalg.norm(self.values))

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _same_grid(self, other)
        return GridFunction(self.grid, self.values - other.values)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _same_grid(self, other)
        return GridFunction(self.grid, self.values + other.values)

    def scaled(self, c) -> "GridFunction":
        return GridFunction(self.grid, c * self.values)

    def map(self, fn) -> "GridFunction":
        return GridFunction(self.grid, fn(self.values))


@dataclass(frozen=True, eq=False)
class FourierMultiplier:
    """Operator diagonal in frequency; ``symbol`` is in FFT order, flattened."""

    grid: BoundaryGrid
    symbol: np.ndarray

    def __post_init__(self):
        s = _checked(self.symbol, self.grid.size, "FourierMultiplier symbol").copy()
        s.flags.writeable = False
        object.__setattr__(self, "symbol", s)

    def norm(self) -> float:
        return float(np.max(np.abs(self.symbol)))

    def __mul__(self, other: "FourierMultiplier") -> "FourierMultiplier":
        _same_grid(self, other)
        return FourierMultiplier(self.grid, self.symbol * other.symbol)

    def kernel(self) -> np.ndarray:
        """Convolution kernel ``k`` with ``(m f)_j = sum_l k[j - l] f_l`` (grid shaped)."""
        k = np.fft.ifftn(self.symbol.reshape(self.grid.shape))
        # even real symbols give real kernels; keep real dtype for them
        if np.isrealobj(self.symbol) and np.max(np.abs(k.imag)) <= 1e-14 * np.max(np.abs(k)):
            return np.ascontiguousarray(k.real)
        return k

    def matrix(self) -> np.ndarray:
        """Dense multilevel-circulant matrix of the multiplier."""
        return _kernels.active.circulant(self.kernel())


@dataclass(frozen=True, eq=False)
class BoundaryOperator:
    """Dense ``size x size`` matrix acting on flattened grid values."""

    grid: BoundaryGrid
    entries: np.ndarray
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        e = np.asarray(self.entries)
        size = self.grid.size
        if e.shape != (size, size):
            raise ValueError(f"operator must be {size}x{size}, got {e.shape}")
        if not np.all(np.isfinite(e)):
            raise ValueError("operator has non-finite entries")
        object.__setattr__(self, "entries", e)

    def apply(self, f: GridFunction) -> GridFunction:
        _same_grid(self, f)
        return GridFunction(self.grid, self.entries @ f.values)

    @property
    def H(self) -> "BoundaryOperator":
        return BoundaryOperator(self.grid, self.entries.conj().T)


# ---------------------------------------------------------------------------
# coefficient families

FAMILIES = ("constant", "gaussian", "box", "powertail")


@dataclass(frozen=True)
class CoefficientSpec:
    """A named coefficient family and its parameters.

    ``constant``  : ``c``
    ``gaussian``  : ``a * exp(-d^2 / (2 sigma^2))``
    ``box``       : ``a`` on the cube ``max_i |d_i| <= halfwidth``, 0 elsewhere
    ``powertail`` : ``a * (1 + d^2)^(-s/2)``

    ``d`` is the periodic minimum-image displacement from ``center`` (which
    defaults to the middle of the box; ``powertail`` is centred at the origin
    unless given).  Amplitudes may be complex.
    """

    family: str
    a: complex = 1.0
    center: Union[float, Sequence[float], None] = None
    sigma: float = 1.0
    halfwidth: float = 1.0
    s: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown coefficient family {self.family!r}; expected one of {FAMILIES}")
        if self.family == "gaussian" and not self.sigma > 0:
            raise ValueError("gaussian sigma must be > 0")
        if self.family == "box" and not self.halfwidth > 0:
            raise ValueError("box halfwidth must be > 0")
        if self.family == "powertail" and not self.s > 0:
            raise ValueError("powertail exponent s must be > 0")

    @classmethod
    def from_dict(cls, d: dict) -> "CoefficientSpec":
        d = dict(d)
        fam = d.pop("family")
        if fam == "constant" and "c" in d:
            d["a"] = d.pop("c")
        for key in ("a",):
            if isinstance(d.get(key), (list, tuple)):
                re, im = d[key]
                d[key] = complex(re, im)
        if isinstance(d.get("center"), list):
            d["center"] = tuple(d["center"])
        unknown = set(d) - {"a", "center", "sigma", "halfwidth", "s"}
        if unknown:
            raise ValueError(f"unknown coefficient fields {sorted(unknown)}")
        return cls(fam, **d)

    def to_dict(self) -> dict:
        a = complex(self.a)
        out = {"family": self.family,
               "a": a.real if a.imag == 0 else [a.real, a.imag]}
        if self.center is not None:
            out["center"] = list(self.center) if isinstance(self.center, tuple) else self.center
        if self.family == "gaussian":
            out["sigma"] = self.sigma
        elif self.family == "box":
            out["halfwidth"] = self.halfwidth
        elif self.family == "powertail":
            out["s"] = self.s
        return out


def sample_coefficient(spec: CoefficientSpec, grid: BoundaryGrid) -> GridFunction:
    a = complex(spec.a)
    if spec.family == "constant":
        vals = np.full(grid.size, a)
    else:
        default = 0.0 if spec.family == "powertail" else grid.L / 2
        center = default if spec.center is None else spec.center
        d = grid.min_image(center)
        if spec.family == "gaussian":
            vals = a * np.exp(-np.sum(d**2, axis=1) / (2 * spec.sigma**2))
        elif spec.family == "box":
            if spec.halfwidth >= grid.L / 2:
                raise ValueError(f"box halfwidth {spec.halfwidth} must be < L/2 = {grid.L / 2}")
            vals = np.where(np.max(np.abs(d), axis=1) <= spec.halfwidth, a, 0)
        else:
            vals = a * (1 + np.sum(d**2, axis=1)) ** (-spec.s / 2)
    if a.imag == 0:
        vals = np.real(vals)
    return GridFunction(grid, vals)


# ---------------------------------------------------------------------------
# transforms and operator assembly

def dft(f: GridFunction) -> np.ndarray:
    return np.fft.fftn(f.values.reshape(f.grid.shape), norm="ortho").ravel()


def idft(grid: BoundaryGrid, coeffs: np.ndarray) -> np.ndarray:
    return np.fft.ifftn(np.asarray(coeffs).reshape(grid.shape), norm="ortho").ravel()


def plane_wave(grid: BoundaryGrid, xi) -> GridFunction:
    xi = np.broadcast_to(np.asarray(xi, dtype=float), (grid.n,))
    return GridFunction(grid, np.exp(1j * grid.points @ xi))


def apply_multiplier(m: FourierMultiplier, f: GridFunction) -> GridFunction:
    _same_grid(m, f)
    return GridFunction(f.grid, idft(f.grid, m.symbol * dft(f)))


def pointwise_multiply(alpha: GridFunction, f: GridFunction) -> GridFunction:
    _same_grid(alpha, f)
    return GridFunction(f.grid, alpha.values * f.values)


Factor = Union[FourierMultiplier, GridFunction]


def _apply_columns(factor: Factor, cols: np.ndarray) -> np.ndarray:
    grid = factor.grid
    if isinstance(factor, GridFunction):
        return factor.values[:, None] * cols
    axes = tuple(range(grid.n))
    block = cols.reshape(grid.shape + (cols.shape[1],))
    block = np.fft.ifftn(factor.symbol.reshape(grid.shape)[..., None]
                         * np.fft.fftn(block, axes=axes, norm="ortho"),
                         axes=axes, norm="ortho")
    return block.reshape(grid.size, -1)


def operator_matrix(factors: Sequence[Factor]) -> BoundaryOperator:
    """Dense matrix of ``factors[0] @ factors[1] @ ... @ factors[-1]``.

    Built by pushing the identity through the chain from the innermost
    (last) factor outward.  ``GridFunction`` factors act pointwise.
    """
    factors = list(factors)
    if not factors:
        raise ValueError("operator_matrix needs at least one factor")
    grid = _same_grid(*factors)
    mat = np.eye(grid.size, dtype=complex)
    for fac in reversed(factors):
        if not isinstance(fac, (FourierMultiplier, GridFunction)):
            raise TypeError(f"unsupported factor type {type(fac).__name__}")
        mat = _apply_columns(fac, mat)
    return BoundaryOperator(grid, mat)
