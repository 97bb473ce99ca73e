"""Declarative initial data: a small spec that samples itself on any grid."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from ..grid import ComplexField, GridSpec, random_field, sample_function

GAUSSIAN = "gaussian"
HOMOGENEOUS = "homogeneous"
ZERO = "zero"
RANDOM = "random"
KINDS = (GAUSSIAN, HOMOGENEOUS, ZERO, RANDOM)


@dataclass(frozen=True)
class InitialData:
    """Initial profile.

    gaussian:     amplitude * exp(-sum ((x_j - center_j) / width_j)^2)
    homogeneous:  amplitude * |x|^(-power), clamped inside ``mollify``
    zero:         u0 = 0
    random:       complex normal samples drawn from ``seed``

    ``width`` and ``center`` may be scalars or per-axis sequences.
    """

    kind: str = GAUSSIAN
    amplitude: float = 1.0
    width: float | Sequence[float] = 1.0
    center: float | Sequence[float] = 0.0
    power: float = 0.0
    mollify: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown initial data kind {self.kind!r}; expected one of {KINDS}")
        widths = np.atleast_1d(np.asarray(self.width, dtype=float))
        if np.any(widths <= 0):
            raise ValueError("gaussian widths must be positive")
        if self.kind == HOMOGENEOUS and not self.power > 0:
            raise ValueError("homogeneous data needs a positive power")
        if self.mollify is not None and not self.mollify > 0:
            raise ValueError("mollify radius must be positive")

    def _per_axis(self, value, ndim):
        arr = np.atleast_1d(np.asarray(value, dtype=float))
        if arr.size == 1:
            return np.repeat(arr, ndim)
        if arr.size != ndim:
            raise ValueError(f"expected {ndim} per-axis values, got {arr.size}")
        return arr

    @property
    def is_radial(self) -> bool:
        if self.kind in (ZERO,):
            return True
        if self.kind == HOMOGENEOUS:
            return True
        if self.kind == GAUSSIAN:
            w = np.atleast_1d(np.asarray(self.width, dtype=float))
            c = np.atleast_1d(np.asarray(self.center, dtype=float))
            return bool(np.all(w == w[0]) and np.all(c == 0))
        return False

    def build(self, grid: GridSpec) -> ComplexField:
        if self.kind == ZERO:
            return ComplexField(grid, np.zeros(grid.shape, dtype=complex))
        if self.kind == RANDOM:
            return random_field(grid, np.random.default_rng(self.seed))
        if self.kind == GAUSSIAN:
            w = self._per_axis(self.width, grid.ndim)
            c = self._per_axis(self.center, grid.ndim)

            def fn(*xs):
                return self.amplitude * np.exp(-sum(((x - cj) / wj) ** 2 for x, cj, wj in zip(xs, c, w)))

            return sample_function(grid, fn)

        def hom(*xs):
            return self.amplitude * np.sqrt(sum(x * x for x in xs)) ** (-self.power)

        return sample_function(grid, hom, mollify=self.mollify if self.mollify else True)

    def as_dict(self) -> dict:
        d = asdict(self)
        for k in ("width", "center"):
            if isinstance(d[k], (tuple, list, np.ndarray)):
                d[k] = [float(v) for v in d[k]]
        return d
