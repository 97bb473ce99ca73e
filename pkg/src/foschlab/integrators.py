"""Split-step evolution and the Picard iteration for the mild solution

    u(t) = G(t) u0 + i int_0^t G(t - s) f(|u(s)|) u(s) ds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .dispersion import DispersionParams, free_multiplier, symbol_on_grid
from .errors import AdmissibilityError, DivergenceError, NonFiniteError
from .grid import ComplexField, GridSpec, fft, fft_batch, ifft, ifft_batch
from .nonlinearity import NonlinearityParams, dealias_mask

DEFAULT_DEALIAS = 2.0 / 3.0


def _check_finite(u: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(u)):
        idx = tuple(int(i) for i in np.argwhere(~np.isfinite(u))[0])
        raise NonFiniteError(f"non-finite field at t={t:.17g}, index {idx}", location=idx, time=t)


def _step_count(t_end: float, dt: float) -> int:
    ratio = t_end / dt
    n = int(round(ratio))
    if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, abs(ratio)):
        raise ValueError(f"t_end={t_end} is not a positive multiple of dt={dt}")
    return n


@dataclass(frozen=True)
class EvolveConfig:
    """Split-step run settings.

    ``dt`` and ``t_end`` share a sign; negative values evolve backwards.
    ``dealias`` is the retained fraction of the 2/3 rule (``None`` disables it).
    ``modulus_weight`` multiplies |u| inside f, which lets a radial
    reduction v = r*u reuse the same stepper.
    """

    dispersion: DispersionParams
    nonlinearity: NonlinearityParams
    dt: float
    t_end: float
    snapshot_stride: int = 1
    dealias: float | None = DEFAULT_DEALIAS
    modulus_weight: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt != 0):
            raise ValueError(f"dt must be finite and nonzero, got {self.dt}")
        if not math.isfinite(self.t_end) or self.t_end * self.dt <= 0:
            raise ValueError("t_end must be finite with the sign of dt")
        if abs(self.dt) > abs(self.t_end):
            raise ValueError(f"dt={self.dt} exceeds t_end={self.t_end}")
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be an integer >= 1")
        if self.dealias is not None and not 0 < self.dealias <= 1:
            raise ValueError(f"dealias fraction must lie in (0, 1], got {self.dealias}")
        _step_count(self.t_end, self.dt)

    @property
    def n_steps(self) -> int:
        return _step_count(self.t_end, self.dt)


class _Stepper:
    """Precomputed multiplier and mask for repeated steps on one grid."""

    def __init__(self, grid: GridSpec, config: EvolveConfig):
        config.dispersion.check_grid(grid)
        self.config = config
        self.mult = free_multiplier(grid, config.dt, config.dispersion)
        nl = config.nonlinearity
        self.active = not nl.is_trivial
        self.mask = (dealias_mask(grid, config.dealias)
                     if self.active and config.dealias is not None else None)
        w = config.modulus_weight
        if w is not None:
            w = np.broadcast_to(np.asarray(w, dtype=float), grid.shape)
        self.weight = w

    def _rotate(self, u: np.ndarray) -> np.ndarray:
        m = np.abs(u)
        if self.weight is not None:
            m = m * self.weight
        with np.errstate(over="ignore", invalid="ignore"):
            phase = self.config.nonlinearity.f(m) * (0.5 * self.config.dt)
            return u * np.exp(1j * phase)

    def __call__(self, u: np.ndarray, t_after: float) -> np.ndarray:
        if self.active:
            u = self._rotate(u)
        u = ifft(fft(u) * self.mult)
        if self.active:
            u = self._rotate(u)
            if self.mask is not None:
                u = ifft(np.where(self.mask, fft(u), 0))
        _check_finite(u, t_after)
        return u


def strang_step(f: ComplexField, config: EvolveConfig, t: float = 0.0) -> ComplexField:
    """One Strang step: half nonlinear rotation, exact linear step, half
    rotation, then dealiasing.  ``t`` is only used in error reports."""
    if not f.is_physical:
        raise ValueError("strang_step expects a physical-space field")
    return f.with_samples(_Stepper(f.grid, config)(f.samples, t + config.dt))


def evolve(u0: ComplexField, config: EvolveConfig, *, t0: float = 0.0,
           at_steps=None) -> list[tuple[float, ComplexField]]:
    """Snapshots (t, u) every ``snapshot_stride`` steps, including both ends.

    ``at_steps`` (a set of step indices) replaces the stride when given.
    """
    if not u0.is_physical:
        raise ValueError("evolve expects a physical-space initial field")
    step = _Stepper(u0.grid, config)
    n = config.n_steps
    u = np.array(u0.samples)
    out = [(t0, u0)] if at_steps is None or 0 in at_steps else []
    for k in range(1, n + 1):
        t = t0 + k * config.dt
        u = step(u, t)
        keep = (k in at_steps) if at_steps is not None else (k % config.snapshot_stride == 0 or k == n)
        if keep:
            out.append((t, u0.with_samples(u)))
    return out


# --------------------------------------------------------------------------
# Duhamel quadrature

def _nonlinear_batch(phys: np.ndarray, nl: NonlinearityParams) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        out = nl.f(np.abs(phys)) * phys
    if not np.all(np.isfinite(out)):
        raise NonFiniteError("non-finite nonlinear term in Duhamel quadrature")
    return out


class _Duhamel:
    """Composite Gauss-Legendre quadrature of i int G(-s) N(u(s)) ds with
    u interpolated linearly in the interaction picture v = G(-t) u."""

    def __init__(self, grid: GridSpec, dispersion: DispersionParams,
                 nonlinearity: NonlinearityParams, gauss_order: int,
                 dealias: float | None, chunk: int = 64):
        self.grid = grid
        self.sym = symbol_on_grid(grid, dispersion)
        self.nl = nonlinearity
        self.x, self.w = np.polynomial.legendre.leggauss(int(gauss_order))
        self.mask = dealias_mask(grid, dealias) if dealias is not None else None
        self.chunk = chunk

    def phase(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float).reshape((-1,) + (1,) * self.grid.ndim)
        return np.exp(-1j * t * self.sym)

    def panels(self, a: np.ndarray, b: np.ndarray, va: np.ndarray, vb: np.ndarray) -> np.ndarray:
        """Integral over each panel [a_j, b_j]; va, vb are spectral v at the ends."""
        nd = self.grid.ndim
        out = np.zeros((a.size,) + self.grid.shape, dtype=complex)
        if self.nl.is_trivial:
            return out
        for lo in range(0, a.size, self.chunk):
            sl = slice(lo, lo + self.chunk)
            aa, bb = a[sl], b[sl]
            h = bb - aa
            acc = np.zeros((aa.size,) + self.grid.shape, dtype=complex)
            for x, w in zip(self.x, self.w):
                theta = 0.5 * (1.0 + x)
                s = aa + theta * h
                v = (1.0 - theta) * va[sl] + theta * vb[sl]
                u = ifft_batch(self.phase(s) * v, nd)
                nh = fft_batch(_nonlinear_batch(u, self.nl), nd)
                if self.mask is not None:
                    nh = np.where(self.mask, nh, 0)
                wt = (0.5 * w * h).reshape((-1,) + (1,) * nd)
                acc += wt * np.conj(self.phase(s)) * nh
            out[sl] = 1j * acc
        return out


def duhamel_rhs(trajectory: list[tuple[float, ComplexField]], t: float, config,
                *, u0: ComplexField | None = None, gauss_order: int = 4) -> ComplexField:
    """G(t) u0 + i int_0^t G(t-s) f(|u(s)|) u(s) ds from a sampled trajectory.

    The trajectory must cover [0, t]; its sample times are the quadrature
    panels.  ``config`` is any object with ``dispersion``, ``nonlinearity``
    and ``dealias`` attributes.
    """
    if not trajectory:
        raise ValueError("empty trajectory")
    times = np.array([s for s, _ in trajectory], dtype=float)
    order = np.argsort(times, kind="stable")
    times = times[order]
    fields = [trajectory[i][1] for i in order]
    grid = fields[0].grid
    lo, hi = min(0.0, t), max(0.0, t)
    tol = 1e-12 * max(1.0, abs(t))
    if times[0] > lo + tol or times[-1] < hi - tol or not np.any(np.abs(times) <= tol):
        raise ValueError(f"trajectory covering [{times[0]}, {times[-1]}] does not cover [0, {t}]")
    if u0 is None:
        u0 = fields[int(np.argmin(np.abs(times)))]
    u0h = u0.spectral().samples
    G_t = np.exp(-1j * t * symbol_on_grid(grid, config.dispersion))
    if t == 0:
        return u0.physical()
    quad = _Duhamel(grid, config.dispersion, config.nonlinearity, gauss_order,
                    getattr(config, "dealias", DEFAULT_DEALIAS))
    # panel ends: trajectory nodes inside (lo, hi) plus the end points
    inner = times[(times > lo + tol) & (times < hi - tol)]
    ends = np.concatenate([[lo], inner, [hi]])
    v_nodes = np.stack([quad.phase(-s)[0] * f.spectral().samples for s, f in zip(times, fields)])

    def v_at(s):
        j = int(np.clip(np.searchsorted(times, s, side="right") - 1, 0, times.size - 2))
        if times.size == 1:
            return v_nodes[0]
        th = (s - times[j]) / (times[j + 1] - times[j])
        return (1 - th) * v_nodes[j] + th * v_nodes[j + 1]

    va = np.stack([v_at(s) for s in ends[:-1]])
    vb = np.stack([v_at(s) for s in ends[1:]])
    integral = quad.panels(ends[:-1], ends[1:], va, vb).sum(axis=0)
    if t < 0:
        integral = -integral
    return ComplexField(grid, ifft(G_t * (u0h + integral)))


# --------------------------------------------------------------------------
# Picard iteration

@dataclass(frozen=True)
class PicardConfig:
    """Settings for u_{k+1} = G(t) u0 + F(u_k) on [0, T_star].

    ``quad_nodes`` uniform panels carry ``gauss_order`` Gauss-Legendre nodes
    each.  ``tol`` is an absolute threshold on the weighted-norm difference.
    ``K`` defaults to twice the weighted norm of G(t) u0.
    """

    dispersion: DispersionParams
    nonlinearity: NonlinearityParams
    p: float
    T_star: float
    quad_nodes: int = 256
    max_iters: int = 50
    tol: float = 1e-12
    K: float | None = None
    M: float | None = None
    gauss_order: int = 4
    dealias: float | None = DEFAULT_DEALIAS

    def __post_init__(self):
        if not self.T_star > 0:
            raise ValueError("T_star must be positive")
        if int(self.quad_nodes) != self.quad_nodes or self.quad_nodes < 2:
            raise ValueError("quad_nodes must be an integer >= 2")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.K is not None and not self.K > 0:
            raise ValueError("K must be positive")

    def exponents(self, n: int) -> analysis.ExponentSet:
        return analysis.exponent_set(n, self.dispersion.d, self.nonlinearity.alpha,
                                     self.p, self.dispersion.variant)

    def check_admissible(self, n: int) -> analysis.ExponentSet:
        ex = self.exponents(n)
        problems = analysis.local_hypotheses(ex)
        if problems:
            raise AdmissibilityError("; ".join(problems))
        return ex


@dataclass
class PicardReport:
    iterate_count: int
    difference_norms: list[float]
    contraction_ratios: list[float]
    predicted_bound: float
    converged: bool
    c_tilde: float = float("nan")
    K: float = float("nan")
    beta: float = float("nan")
    free_norm: float = float("nan")
    quadrature_error: float = float("nan")
    weight_t_min: float = float("nan")


def picard_iterate(u0: ComplexField, config: PicardConfig
                   ) -> tuple[list[tuple[float, ComplexField]], PicardReport]:
    """Run the Picard sequence and report measured contraction ratios.

    The weighted norm sup t^beta ||u(t)||_{(p(alpha+1), inf)} is sampled on
    the uniform mesh for t >= t_min = T_star / quad_nodes.
    """
    grid = u0.grid
    config.dispersion.check_grid(grid)
    ex = config.check_admissible(grid.ndim)
    nd = grid.ndim
    m = int(config.quad_nodes)
    tm = config.T_star * np.arange(m + 1) / m
    quad = _Duhamel(grid, config.dispersion, config.nonlinearity, config.gauss_order, config.dealias)
    quad_fine = _Duhamel(grid, config.dispersion, config.nonlinearity, 2 * config.gauss_order, config.dealias)
    G_mesh = quad.phase(tm)
    u0h = u0.spectral().samples
    weight = tm[1:] ** ex.beta

    def physical(v):
        return ifft_batch(G_mesh * v, nd)

    def gnorm(v):
        return float(np.max(weight * analysis.weak_norms_batch(physical(v)[1:], grid.cell_volume, ex.q_local)))

    def iterate(v, q=quad):
        pieces = q.panels(tm[:-1], tm[1:], v[:-1], v[1:])
        cum = np.concatenate([np.zeros((1,) + grid.shape, dtype=complex), np.cumsum(pieces, axis=0)])
        return u0h[None] + cum

    v_free = np.broadcast_to(u0h, (m + 1,) + grid.shape).copy()
    free_norm = gnorm(v_free)
    K = config.K if config.K is not None else 2.0 * free_norm
    span = config.T_star ** (1.0 - ex.beta * (ex.alpha + 1))

    diffs: list[float] = []
    ratios: list[float] = []
    norms = [free_norm]
    c_est = 0.0
    v = v_free
    converged = False
    streak = 0
    for _ in range(config.max_iters):
        v_next = iterate(v)
        if not np.all(np.isfinite(v_next)):
            raise NonFiniteError("non-finite Picard iterate")
        diffs.append(gnorm(v_next - v))
        norms.append(gnorm(v_next))
        if len(diffs) > 1:
            prev = diffs[-2]
            r = diffs[-1] / prev if prev > 0 else 0.0
            ratios.append(r)
            denom = prev * (norms[-2] ** ex.alpha + norms[-3] ** ex.alpha) * span
            if denom > 0:
                c_est = max(c_est, diffs[-1] / denom)
            streak = streak + 1 if r >= 1 else 0
        v = v_next
        if diffs[-1] < config.tol:
            converged = True
            break
        if streak >= 3:
            report = PicardReport(len(diffs), diffs, ratios, 2 * c_est * K ** ex.alpha * span,
                                  False, c_est, K, ex.beta, free_norm, float("nan"), tm[1])
            raise DivergenceError("Picard ratios >= 1 for 3 consecutive iterates", report)

    quad_err = gnorm(iterate(v, quad_fine) - iterate(v)) if not config.nonlinearity.is_trivial else 0.0
    report = PicardReport(
        iterate_count=len(diffs), difference_norms=diffs, contraction_ratios=ratios,
        predicted_bound=2.0 * c_est * K ** ex.alpha * span, converged=converged,
        c_tilde=c_est, K=K, beta=ex.beta, free_norm=free_norm,
        quadrature_error=quad_err, weight_t_min=float(tm[1]))
    phys = physical(v)
    traj = [(float(s), ComplexField(grid, phys[j])) for j, s in enumerate(tm)]
    return traj, report
