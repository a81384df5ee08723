"""Singular values and Schatten / weak-Schatten quantities.

Indices ``k`` are 1-based throughout, matching ``s_1 >= s_2 >= ...``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from .grid import BoundaryOperator

ZERO_FLOOR = 1e-13


@dataclass(frozen=True, eq=False)
class SingularSpectrum:
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("singular values must be a 1-d array")
        if np.any(v < 0) or np.any(np.diff(v) > 1e-15 * max(1.0, v[0] if v.size else 1.0)):
            raise ValueError("singular values must be nonnegative and non-increasing")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    @property
    def retained(self) -> int:
        """Number of values above the numerical-zero floor ``1e-13 * s_1``."""
        if self.values.size == 0 or self.values[0] == 0:
            return 0
        return int(np.count_nonzero(self.values > ZERO_FLOOR * self.values[0]))

    @classmethod
    def from_values(cls, values, meta=None) -> "SingularSpectrum":
        v = np.sort(np.abs(np.asarray(values, dtype=float)))[::-1]
        return cls(v, dict(meta or {}))


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    stderr: float
    window: Tuple[int, int]
    r2: float

    def to_dict(self) -> dict:
        return {"exponent": self.exponent, "stderr": self.stderr,
                "window": list(self.window), "r2": self.r2}


@dataclass(frozen=True)
class ClassVerdict:
    """One-sided test of ``s_k = O(k^(-1/p))`` from a fitted exponent."""

    p: float
    weak: bool
    target: float
    exponent: float
    tolerance: float
    deviation: float
    passed: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def singular_values(B, meta: Optional[dict] = None) -> SingularSpectrum:
    """Full SVD of a :class:`BoundaryOperator` (or plain matrix)."""
    if isinstance(B, BoundaryOperator):
        A = B.entries
        meta = {"grid": B.grid.describe(), **(meta or {})}
    else:
        A = np.asarray(B)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    s = np.linalg.svd(A, compute_uv=False)
    return SingularSpectrum(s, dict(meta or {}))


def _check_p(p):
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")


def schatten_norm(S: SingularSpectrum, p: float) -> float:
    _check_p(p)
    s = S.values
    if s.size == 0 or s[0] == 0:
        return 0.0
    # scale by s_1 to keep large p from underflowing
    return float(s[0] * np.sum((s / s[0]) ** p) ** (1.0 / p))


def weak_quasinorm(S: SingularSpectrum, p: float) -> float:
    _check_p(p)
    if S.values.size == 0:
        return 0.0
    k = np.arange(1, S.values.size + 1)
    return float(np.max(k ** (1.0 / p) * S.values))


def default_window(S: SingularSpectrum) -> Tuple[int, int]:
    """``[max(5, k1), min(size/4, last k with s_k > 1e-12 s_1)]``.

    ``k1`` is the first index where ``s_k`` has fallen below half of ``s_1``,
    i.e. past any leading plateau.
    """
    s = S.values
    if s.size == 0 or s[0] == 0:
        raise ValueError("spectrum is identically zero")
    below = np.nonzero(s < 0.5 * s[0])[0]
    k1 = int(below[0]) + 1 if below.size else s.size
    k_hi = int(np.count_nonzero(s > 1e-12 * s[0]))
    k_max = min(s.size // 4, k_hi)
    return max(5, k1), k_max


def fit_decay_exponent(S: SingularSpectrum, window: Optional[Sequence[int]] = None) -> DecayFit:
    """Least-squares slope of ``log s_k`` against ``log k`` over ``window`` (inclusive)."""
    k_min, k_max = default_window(S) if window is None else (int(window[0]), int(window[1]))
    if k_min < 1 or k_max > S.values.size:
        raise ValueError(f"window [{k_min}, {k_max}] outside 1..{S.values.size}")
    if k_max - k_min < 8:
        raise ValueError(f"window [{k_min}, {k_max}] too small (need k_max - k_min >= 8)")
    s = S.values[k_min - 1:k_max]
    if np.any(s <= 0):
        raise ValueError("nonpositive singular values inside fit window")
    k = np.arange(k_min, k_max + 1)
    fit = stats.linregress(np.log(k), np.log(s))
    return DecayFit(float(fit.slope), float(fit.stderr), (k_min, k_max),
                    float(min(1.0, fit.rvalue**2)))


def epsilon_count(S: SingularSpectrum, eps: float) -> int:
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return int(np.count_nonzero(S.values > eps))


ClassClaim = Union[float, Tuple[float, str]]


def _parse_claim(claim) -> Tuple[float, bool]:
    if isinstance(claim, dict):
        return float(claim["p"]), bool(claim.get("weak", True))
    if isinstance(claim, (tuple, list)):
        p, kind = claim
        return float(p), kind in ("weak", "inf", np.inf, float("inf"))
    return float(claim), False


def verdict(S: SingularSpectrum, claim, tolerance: float,
            fit: Optional[DecayFit] = None) -> ClassVerdict:
    """Compare the fitted decay exponent to ``-1/p``.

    ``claim`` is ``p`` (class S_p), ``(p, "weak")`` / ``(p, inf)`` or a dict
    ``{"p": p, "weak": bool}``.  Passes iff ``exponent <= -1/p + tolerance``;
    the finite-window fit cannot distinguish S_p from S_{p,inf}, so both use
    the same exponent target.
    """
    p, weak = _parse_claim(claim)
    _check_p(p)
    fit = fit_decay_exponent(S) if fit is None else fit
    target = -1.0 / p
    dev = fit.exponent - target
    return ClassVerdict(p, weak, target, fit.exponent, float(tolerance), float(dev),
                        bool(fit.exponent <= target + tolerance))
