"""Shared numerical primitives: entropies, capacity assembly, line and decay
fits, bisection root finding, and Perron eigen-analysis of positive matrices.

Conventions used throughout the package:

* probabilities are plain float vectors wrapped in :class:`ProbDist`,
* public capacities are in bits; thermodynamic entropies are kept in nats
  internally and converted with ``log2(e)`` at module boundaries,
* ``0 * log 0 == 0`` by continuity everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

PROB_NEG_TOL = 1e-12
PROB_SUM_TOL = 1e-9

LOG2E = math.log2(math.e)


@dataclass(frozen=True)
class ProbDist:
    """Normalized probability vector over basis strings.

    Entries below zero by at most ``1e-12`` are clipped to zero; the vector
    must sum to 1 within ``1e-9``.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size == 0:
            raise ValueError("empty probability vector")
        if not np.all(np.isfinite(v)):
            raise ValueError("probability vector contains non-finite entries")
        if v.min() < -PROB_NEG_TOL:
            raise ValueError(
                f"negative probability {v.min():.3e} beyond tolerance {-PROB_NEG_TOL:.0e}"
            )
        v = np.where(v < 0.0, 0.0, v)
        total = v.sum()
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1 within {PROB_SUM_TOL:.0e}")
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class FitLine:
    """Least-squares line y = slope * x + intercept over a window of abscissae."""

    slope: float
    intercept: float
    max_abs_residual: float
    window: tuple

    def __post_init__(self):
        if len(set(self.window)) < 2:
            raise ValueError("fit window needs at least 2 distinct points")


@dataclass(frozen=True)
class DecayFit:
    """Fit of y ~ exp(log_amplitude) * s**poly_exponent * exp(rate * s).

    ``poly_exponent`` is None for a plain exponential fit. ``rate`` is per
    unit abscissa and is negative for decaying data.
    """

    log_amplitude: float
    rate: float
    r_squared: float
    poly_exponent: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.r_squared <= 1.0:
            raise ValueError(f"r_squared {self.r_squared!r} outside [0, 1]")


@dataclass(frozen=True)
class RootResult:
    x: float
    residual: float
    iterations: int


def _as_prob(p) -> np.ndarray:
    if isinstance(p, ProbDist):
        return p.values
    return ProbDist(np.asarray(p, dtype=float)).values


def shannon_entropy(p, base=2) -> float:
    """Shannon entropy -sum p_i log p_i of a valid distribution.

    ``base`` is 2 for bits or "e" (alternatively ``math.e``) for nats.
    """
    v = _as_prob(p)
    nz = v[v > 0.0]
    s_nats = float(-(nz * np.log(nz)).sum())
    if base == 2:
        return s_nats * LOG2E
    if base == "e" or base == math.e:
        return s_nats
    raise ValueError(f"base must be 2 or 'e', got {base!r}")


def coherent_info_bits(n: int, d: int, s_diag_bits: float) -> float:
    """Finite-n coherent information n*log2(d) - S_diag for these channels."""
    if n < 1 or d < 2:
        raise ValueError(f"need n >= 1 and d >= 2, got n={n}, d={d}")
    total = n * math.log2(d)
    if not -1e-9 <= s_diag_bits <= total + 1e-9:
        raise ValueError(
            f"diagonal entropy {s_diag_bits!r} outside [0, {total!r}] bits"
        )
    return total - min(max(s_diag_bits, 0.0), total)


def entropy_rate_estimate(points: Iterable[tuple]) -> FitLine:
    """Least-squares line through (n, S_n) points; the slope estimates the
    entropy rate.  Requires at least 3 points with distinct n."""
    pts = [(float(n), float(s)) for n, s in points]
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    if len(set(xs.tolist())) < 3:
        raise ValueError("need at least 3 points with distinct n")
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    return FitLine(
        slope=float(slope),
        intercept=float(intercept),
        max_abs_residual=float(np.abs(resid).max()),
        window=tuple(xs.tolist()),
    )


def _r_squared(y: np.ndarray, pred: np.ndarray) -> float:
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        return 1.0 if ss_res <= 1e-24 else 0.0
    return float(min(max(1.0 - ss_res / ss_tot, 0.0), 1.0))


def fit_exponential_decay(points: Iterable[tuple]) -> DecayFit:
    """Fit y = A * exp(rate * s) by linear regression of ln y against s."""
    pts = [(float(s), float(y)) for s, y in points]
    if len(pts) < 3:
        raise ValueError("need at least 3 points")
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    if np.any(ys <= 0.0):
        raise ValueError("exponential fit requires strictly positive values")
    ly = np.log(ys)
    rate, log_amp = np.polyfit(xs, ly, 1)
    r2 = _r_squared(ly, rate * xs + log_amp)
    return DecayFit(log_amplitude=float(log_amp), rate=float(rate), r_squared=r2)


def fit_poly_exponential_decay(points: Iterable[tuple]) -> DecayFit:
    """Fit y = A * s**E * exp(rate * s); needs positive abscissae and values."""
    pts = [(float(s), float(y)) for s, y in points]
    if len(pts) < 4:
        raise ValueError("need at least 4 points for the three-parameter fit")
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    if np.any(xs <= 0.0) or np.any(ys <= 0.0):
        raise ValueError("poly-exponential fit requires positive abscissae and values")
    ly = np.log(ys)
    design = np.column_stack([np.ones_like(xs), np.log(xs), xs])
    coef, *_ = np.linalg.lstsq(design, ly, rcond=None)
    log_amp, poly_e, rate = coef
    r2 = _r_squared(ly, design @ coef)
    return DecayFit(
        log_amplitude=float(log_amp),
        rate=float(rate),
        r_squared=r2,
        poly_exponent=float(poly_e),
    )


def find_root_bisect(
    f: Callable[[float], float], a: float, b: float, tol: float = 1e-12
) -> RootResult:
    """Bisection root of f on [a, b]; deterministic, requires a sign change.

    Terminates when |f(mid)| <= tol.  For functions with O(1) slope this
    happens within ceil(log2((b - a) / tol)) + 2 halvings.
    """
    if not (b > a):
        raise ValueError("need b > a")
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return RootResult(x=a, residual=0.0, iterations=0)
    if fb == 0.0:
        return RootResult(x=b, residual=0.0, iterations=0)
    if fa * fb > 0.0:
        raise ValueError("no sign change on [a, b]")
    max_iter = max(int(math.ceil(math.log2((b - a) / tol))) + 2, 1) + 64
    mid, fm = a, fa
    for it in range(1, max_iter + 1):
        mid = 0.5 * (a + b)
        fm = f(mid)
        if abs(fm) <= tol:
            return RootResult(x=mid, residual=abs(fm), iterations=it)
        if (fm > 0.0) == (fb > 0.0):
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    raise ValueError(f"bisection did not reach |f| <= {tol!r} in {max_iter} iterations")


def perron_eigen(m) -> tuple[float, np.ndarray, np.ndarray]:
    """Dominant eigenvalue and positive left/right eigenvectors of an
    entrywise-positive matrix, normalized so left . right = 1."""
    mat = np.asarray(m, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("matrix must be square")
    if np.any(mat <= 0.0):
        raise ValueError("all entries must be strictly positive")

    def _dominant(a: np.ndarray) -> tuple[float, np.ndarray]:
        w, v = np.linalg.eig(a)
        i = int(np.argmax(w.real))
        lam = w[i]
        if abs(lam.imag) > 1e-10 * abs(lam.real):
            raise ValueError("dominant eigenvalue is not numerically real")
        vec = v[:, i].real
        if vec.sum() < 0.0:
            vec = -vec
        if vec.min() < -1e-9 * np.abs(vec).max():
            raise ValueError("dominant eigenvector is not entrywise positive")
        return float(lam.real), np.abs(vec)

    lam, right = _dominant(mat)
    _, left = _dominant(mat.T)
    right = right / np.linalg.norm(right)
    left = left / float(left @ right)
    return lam, left, right
