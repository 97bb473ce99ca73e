"""Uniform periodic grids on [-L, L)^n and complex fields sampled on them.

Spectral coefficients use the unitary DFT (``norm="ortho"``) in FFT index
order, so ``cell_volume * sum(|u|**2)`` is the same number in both spaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft

from .errors import GridError, NonFiniteError, SpaceError

PHYSICAL = "physical"
SPECTRAL = "spectral"


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class GridSpec:
    ndim: int
    points: tuple[int, ...]
    half_width: tuple[float, ...]

    def __post_init__(self):
        if self.ndim not in (1, 2, 3):
            raise GridError(f"ndim must be 1, 2 or 3, got {self.ndim}")
        if len(self.points) != self.ndim or len(self.half_width) != self.ndim:
            raise GridError("points and half_width need one entry per axis")
        for n in self.points:
            if not _is_power_of_two(n):
                raise GridError(f"points per axis must be a power of two, got {n}")
            if n < 8:
                raise GridError(f"points per axis must be >= 8, got {n}")
        for L in self.half_width:
            if not (L > 0 and math.isfinite(L)):
                raise GridError(f"half_width must be positive and finite, got {L}")

    def __eq__(self, other):
        if not isinstance(other, GridSpec):
            return NotImplemented
        return (self.ndim, self.points, self.half_width) == (
            other.ndim, other.points, other.half_width)

    def __hash__(self):
        return hash((self.ndim, self.points, self.half_width))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def size(self) -> int:
        return math.prod(self.points)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(2.0 * L / n for L, n in zip(self.half_width, self.points))

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    @property
    def volume(self) -> float:
        return math.prod(2.0 * L for L in self.half_width)

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        """1-D coordinate arrays ``-L + j*dx``."""
        return tuple(-L + dx * np.arange(n)
                     for L, dx, n in zip(self.half_width, self.spacing, self.points))

    @cached_property
    def mode_numbers(self) -> tuple[np.ndarray, ...]:
        """Integer mode numbers m_j in FFT order, in {-N/2, ..., N/2-1}."""
        return tuple(np.fft.fftfreq(n, d=1.0 / n).astype(np.int64) for n in self.points)

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """1-D wavenumber arrays ``(pi/L) * m`` in FFT order."""
        return tuple((math.pi / L) * m for L, m in zip(self.half_width, self.mode_numbers))

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Broadcastable coordinate arrays (open mesh)."""
        return tuple(np.meshgrid(*self.axes, indexing="ij", sparse=True))

    def wavevector(self) -> tuple[np.ndarray, ...]:
        """Broadcastable wavenumber arrays (open mesh)."""
        return tuple(np.meshgrid(*self.wavenumbers, indexing="ij", sparse=True))

    @cached_property
    def k_squared(self) -> np.ndarray:
        ks = self.wavevector()
        out = np.zeros(self.shape)
        for k in ks:
            out = out + k * k
        return out

    def nyquist_mask(self) -> np.ndarray:
        """Boolean mask of modes that sit on an unpaired Nyquist index."""
        mask = np.zeros(self.shape, dtype=bool)
        for axis, (m, n) in enumerate(zip(self.mode_numbers, self.points)):
            sl = [np.newaxis] * self.ndim
            sl[axis] = slice(None)
            mask |= (m == -n // 2)[tuple(sl)]
        return mask

    def doubled(self) -> "GridSpec":
        """Same spacing, box twice as wide along every axis."""
        return GridSpec(self.ndim, tuple(2 * n for n in self.points),
                        tuple(2.0 * L for L in self.half_width))


def make_grid(ndim: int, points: Sequence[int], half_width: Sequence[float]) -> GridSpec:
    """Build a validated grid; scalars are broadcast to every axis."""
    if isinstance(points, (int, np.integer)):
        points = [points] * ndim
    if isinstance(half_width, (int, float, np.floating)):
        half_width = [half_width] * ndim
    try:
        pts = tuple(int(n) for n in points)
    except (TypeError, ValueError):
        raise GridError(f"points must be integers, got {points!r}") from None
    if any(int(n) != n for n in points):
        raise GridError(f"points must be integers, got {points!r}")
    return GridSpec(int(ndim), pts, tuple(float(L) for L in half_width))


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Immutable complex samples on a grid, tagged with their representation."""

    grid: GridSpec
    samples: np.ndarray = field(repr=False)
    space: str = PHYSICAL

    def __post_init__(self):
        if self.space not in (PHYSICAL, SPECTRAL):
            raise SpaceError(f"unknown space {self.space!r}")
        arr = np.asarray(self.samples)
        if arr.size != self.grid.size:
            raise GridError(
                f"sample count {arr.size} does not match grid size {self.grid.size}")
        arr = np.array(arr, dtype=np.complex128).reshape(self.grid.shape)
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    @property
    def is_physical(self) -> bool:
        return self.space == PHYSICAL

    def flat(self) -> np.ndarray:
        """Row-major flat view (last axis fastest)."""
        return self.samples.reshape(-1)

    def with_samples(self, samples: np.ndarray, space: str | None = None) -> "ComplexField":
        return ComplexField(self.grid, samples, self.space if space is None else space)

    def physical(self) -> "ComplexField":
        return self if self.is_physical else to_physical(self)

    def spectral(self) -> "ComplexField":
        return self if not self.is_physical else to_spectral(self)

    def mass(self) -> float:
        """cell_volume * sum |samples|^2; identical in both spaces."""
        return float(self.grid.cell_volume * np.sum(np.abs(self.samples) ** 2))


def fft(a: np.ndarray) -> np.ndarray:
    return sfft.fftn(a, norm="ortho")


def ifft(a: np.ndarray) -> np.ndarray:
    return sfft.ifftn(a, norm="ortho")


def fft_batch(a: np.ndarray, ndim: int) -> np.ndarray:
    """Transform the trailing ``ndim`` axes of a stacked array."""
    return sfft.fftn(a, axes=tuple(range(-ndim, 0)), norm="ortho")


def ifft_batch(a: np.ndarray, ndim: int) -> np.ndarray:
    return sfft.ifftn(a, axes=tuple(range(-ndim, 0)), norm="ortho")


def to_spectral(f: ComplexField) -> ComplexField:
    if not f.is_physical:
        raise SpaceError("to_spectral expects a physical-space field")
    return ComplexField(f.grid, fft(f.samples), SPECTRAL)


def to_physical(f: ComplexField) -> ComplexField:
    if f.is_physical:
        raise SpaceError("to_physical expects a spectral-space field")
    return ComplexField(f.grid, ifft(f.samples), PHYSICAL)


def mollify_points(grid: GridSpec, radius: float) -> tuple[np.ndarray, ...]:
    """Coordinates with every point inside ``radius`` pushed radially onto it.

    The origin itself is mapped to ``(radius, 0, ...)``.
    """
    xs = [np.broadcast_to(c, grid.shape) for c in grid.coordinates()]
    r = np.sqrt(sum(c * c for c in xs))
    inside = r < radius
    if not inside.any():
        return tuple(xs)
    out = []
    safe_r = np.where(r > 0, r, 1.0)
    for axis, c in enumerate(xs):
        scaled = np.where(r > 0, c * radius / safe_r, radius if axis == 0 else 0.0)
        out.append(np.where(inside, scaled, c))
    return tuple(out)


def sample_function(grid: GridSpec, fn: Callable[..., np.ndarray],
                    mollify: float | bool | None = None) -> ComplexField:
    """Evaluate ``fn(*coords)`` (vectorized) on the grid.

    ``mollify`` clamps singular data: ``True`` uses radius ``2*max(dx)``, a
    float gives the radius explicitly.  Points closer to the origin than the
    radius are evaluated at their radial projection onto the sphere of that
    radius, so radial data become constant there.
    """
    if mollify is True:
        mollify = 2.0 * max(grid.spacing)
    if mollify:
        coords = mollify_points(grid, float(mollify))
    else:
        coords = tuple(np.broadcast_to(c, grid.shape) for c in grid.coordinates())
    with np.errstate(all="ignore"):
        values = np.asarray(fn(*coords), dtype=np.complex128)
    values = np.broadcast_to(values, grid.shape)
    bad = ~np.isfinite(values)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        point = tuple(float(a[i]) for a, i in zip(grid.axes, idx))
        raise NonFiniteError(f"non-finite sample at x={point} (index {idx})", location=point)
    return ComplexField(grid, values, PHYSICAL)


def zero_field(grid: GridSpec, space: str = PHYSICAL) -> ComplexField:
    return ComplexField(grid, np.zeros(grid.shape, dtype=np.complex128), space)


def random_field(grid: GridSpec, rng: np.random.Generator) -> ComplexField:
    """Independent standard complex normal samples."""
    z = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    return ComplexField(grid, z, PHYSICAL)
