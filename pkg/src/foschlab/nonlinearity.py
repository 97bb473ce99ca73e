"""The nonlinear term f(|u|) u, 2/3-rule dealiasing and a Lipschitz checker."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import NonFiniteError, SpaceError
from .grid import ComplexField, GridSpec

POWER = "power"
CUSTOM = "custom"


@dataclass(frozen=True)
class NonlinearityParams:
    """Power case f(x) = lam*|x|^alpha, or a custom real ``func``.

    ``lam`` may be 0 (free flow) besides the usual +-1.  For the power case
    ``c_f`` defaults to ``|lam|*alpha``, which the mean value theorem
    guarantees.
    """

    lam: float
    alpha: float
    c_f: float | None = None
    kind: str = POWER
    func: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if not self.alpha >= 1:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")
        if self.kind == POWER:
            if self.func is not None:
                raise ValueError("power nonlinearity takes no custom func")
            if self.c_f is None:
                object.__setattr__(self, "c_f", abs(self.lam) * self.alpha)
        elif self.kind == CUSTOM:
            if self.func is None:
                raise ValueError("custom nonlinearity needs func")
            if self.c_f is None or not self.c_f > 0:
                raise ValueError("custom nonlinearity needs a positive c_f")
        else:
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")

    @property
    def is_trivial(self) -> bool:
        return self.kind == POWER and self.lam == 0

    def f(self, x: np.ndarray) -> np.ndarray:
        """Real coefficient f evaluated at the (real) modulus."""
        x = np.asarray(x, dtype=float)
        if self.kind == POWER:
            return self.lam * np.abs(x) ** self.alpha
        return np.asarray(self.func(x), dtype=float)


def apply_nonlinearity(f: ComplexField, params: NonlinearityParams) -> ComplexField:
    """Pointwise f(|u|) u."""
    if not f.is_physical:
        raise SpaceError("apply_nonlinearity expects a physical-space field")
    u = f.samples
    with np.errstate(over="ignore", invalid="ignore"):
        out = params.f(np.abs(u)) * u
    bad = ~np.isfinite(out)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise NonFiniteError(f"non-finite nonlinear term at index {idx}", location=idx)
    return f.with_samples(out)


def dealias_mask(grid: GridSpec, fraction: float = 2.0 / 3.0) -> np.ndarray:
    """Modes kept by the truncation rule |m_j| <= floor(fraction * N_j / 2)."""
    if not 0 < fraction <= 1:
        raise ValueError(f"dealias fraction must lie in (0, 1], got {fraction}")
    keep = np.ones(grid.shape, dtype=bool)
    for axis, (m, n) in enumerate(zip(grid.mode_numbers, grid.points)):
        cut = int(np.floor(fraction * n / 2.0 + 1e-12))
        sl = [np.newaxis] * grid.ndim
        sl[axis] = slice(None)
        keep &= (np.abs(m) <= cut)[tuple(sl)]
    return keep


def dealias(f: ComplexField, fraction: float = 2.0 / 3.0) -> ComplexField:
    if f.is_physical:
        raise SpaceError("dealias expects a spectral-space field")
    return f.with_samples(np.where(dealias_mask(f.grid, fraction), f.samples, 0))


@dataclass
class LipschitzReport:
    max_ratio: float
    worst_pair: tuple[float, float] | None
    n_pairs: int
    c_f: float

    @property
    def passed(self) -> bool:
        return self.max_ratio <= self.c_f


def check_lipschitz(params: NonlinearityParams,
                    samples: Sequence[tuple[float, float]]) -> LipschitzReport:
    """Largest |f(x)-f(y)| / (|x-y| (|x|^(a-1) + |y|^(a-1))) over the pairs.

    Pairs with x == y are skipped.
    """
    pairs = np.asarray(samples, dtype=float).reshape(-1, 2)
    if pairs.size and not np.all(np.isfinite(pairs)):
        raise ValueError("sample pairs must be finite")
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    if pairs.shape[0] == 0:
        return LipschitzReport(0.0, None, 0, params.c_f)
    x, y = pairs[:, 0], pairs[:, 1]
    a1 = params.alpha - 1.0
    denom = np.abs(x - y) * (np.abs(x) ** a1 + np.abs(y) ** a1)
    num = np.abs(params.f(x) - params.f(y))
    # the denominator can underflow to 0 for pairs next to the origin
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(denom > 0, num / np.where(denom > 0, denom, 1.0),
                         np.where(num == 0, 0.0, np.inf))
    k = int(np.argmax(ratio))
    return LipschitzReport(float(ratio[k]), (float(x[k]), float(y[k])), int(pairs.shape[0]), params.c_f)
