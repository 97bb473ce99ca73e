"""Norm toolkit: rearrangements, Lorentz quasinorms, Sobolev norms,
conserved quantities, decay exponents and the admissible exponent region.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special, stats

from .dispersion import ANISOTROPIC, ISOTROPIC, DispersionParams
from .grid import ComplexField, fft
from .nonlinearity import POWER, NonlinearityParams


# --------------------------------------------------------------------------
# decreasing rearrangement and Lorentz quasinorms

@dataclass(frozen=True)
class Rearrangement:
    """Right-continuous step function g* with steps of width ``cell``.

    ``values[k]`` is g* on [k*cell, (k+1)*cell); beyond ``measure`` g* = 0.
    """

    values: np.ndarray
    cell: float

    @property
    def breakpoints(self) -> np.ndarray:
        return self.cell * np.arange(self.values.size + 1)

    @property
    def measure(self) -> float:
        return self.cell * self.values.size

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        k = np.floor(t / self.cell).astype(np.int64)
        inside = (t >= 0) & (k < self.values.size)
        return np.where(inside, self.values[np.clip(k, 0, self.values.size - 1)], 0.0)

    def running_integral(self) -> np.ndarray:
        """int_0^{t_k} g* at every breakpoint t_k (length size+1)."""
        return np.concatenate([[0.0], np.cumsum(self.values) * self.cell])

    def lp_norm(self, p: float) -> float:
        if math.isinf(p):
            return float(self.values[0]) if self.values.size else 0.0
        return float((self.cell * np.sum(self.values ** p)) ** (1.0 / p))


def _modulus(f) -> tuple[np.ndarray, float]:
    if isinstance(f, ComplexField):
        return np.abs(f.physical().samples).ravel(), f.grid.cell_volume
    raise TypeError("expected a ComplexField")


def rearrange_values(values: np.ndarray, cell: float) -> Rearrangement:
    g = np.sort(np.abs(np.asarray(values)).ravel(), kind="stable")[::-1]
    return Rearrangement(np.ascontiguousarray(g), float(cell))


def decreasing_rearrangement(f: ComplexField) -> Rearrangement:
    vals, cell = _modulus(f)
    return rearrange_values(vals, cell)


def _as_rearrangement(f) -> Rearrangement:
    return f if isinstance(f, Rearrangement) else decreasing_rearrangement(f)


def weak_star_sup(f, p: float) -> float:
    """sup_t t^(1/p) g*(t) (the supremum approached at each step's right end)."""
    g = _as_rearrangement(f)
    if g.values.size == 0:
        return 0.0
    t = g.breakpoints[1:]
    return float(np.max(t ** (1.0 / p) * g.values))


def _weak_sup(g: Rearrangement, p: float) -> float:
    # On a step t^(1/p) g** = t^(1/p - 1) (A + g t) has a single stationary
    # point, a minimum, so the supremum sits on a breakpoint.
    if g.values.size == 0 or g.values[0] == 0:
        return 0.0
    t = g.breakpoints[1:]
    S = g.running_integral()[1:]
    phi = t ** (1.0 / p - 1.0) * S
    # interior stationary points, kept as candidates for completeness
    A = g.running_integral()[:-1] - g.values * g.breakpoints[:-1]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ts = (p - 1.0) * A / g.values
    ok = (ts > g.breakpoints[:-1]) & (ts < t)
    best = float(np.max(phi))
    if ok.any():
        tk = ts[ok]
        inner = tk ** (1.0 / p - 1.0) * (A[ok] + g.values[ok] * tk)
        best = max(best, float(np.max(inner)))
    return best


_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _lorentz_finite(g: Rearrangement, p: float, d: float) -> float:
    c = g.cell
    n = g.values.size
    a = 1.0 - 1.0 / p
    t0 = g.breakpoints[:-1]
    S = g.running_integral()
    A = S[:-1] - g.values * t0
    gv = g.values
    total = 0.0
    # first step: A = 0, integrand g^d t^(d/p - 1)
    total += gv[0] ** d * c ** (d / p) / (d / p)
    if n > 1:
        tk0 = t0[1:]
        Ak, gk = A[1:], gv[1:]
        if float(d).is_integer():
            di = int(d)
            acc = np.zeros_like(tk0)
            ratio = c / tk0
            for j in range(di + 1):
                e = j - a * d
                if e == 0:
                    piece = np.log1p(ratio)
                else:
                    piece = tk0 ** e * np.expm1(e * np.log1p(ratio)) / e
                acc += special.comb(di, j) * Ak ** (di - j) * gk ** j * piece
            total += float(np.sum(acc))
        else:
            mid = tk0 + 0.5 * c
            nodes = mid[:, None] + 0.5 * c * _GL_X[None, :]
            vals = nodes ** (-a * d - 1.0) * (Ak[:, None] + gk[:, None] * nodes) ** d
            total += float(np.sum(vals @ _GL_W) * 0.5 * c)
    # tail beyond the support: g* = 0, int_V^inf S^d t^(-ad-1) dt
    V = g.measure
    total += S[-1] ** d * V ** (-a * d) / (a * d)
    return (p / d * total) ** (1.0 / d)


def lorentz_quasinorm(f, p: float, d_index: float = math.inf) -> float:
    """||f||_(p,d) built on g** = (1/t) int_0^t g*.

    ``d_index = inf`` gives the weak-L^p quasinorm sup_t t^(1/p) g**(t).
    """
    if not p > 1:
        raise ValueError(f"Lorentz quasinorm needs p > 1, got {p}")
    if not d_index >= 1:
        raise ValueError(f"Lorentz second index must be >= 1, got {d_index}")
    g = _as_rearrangement(f)
    if g.values.size == 0 or g.values[0] == 0:
        return 0.0
    if math.isinf(p):
        return float(g.values[0])
    if math.isinf(d_index):
        return _weak_sup(g, p)
    return _lorentz_finite(g, p, float(d_index))


def weak_norms_batch(stack: np.ndarray, cell: float, p: float) -> np.ndarray:
    """Weak-L^p quasinorm of every field in a stack (leading axis = time)."""
    m = stack.shape[0]
    flat = np.abs(stack.reshape(m, -1))
    g = -np.sort(-flat, axis=1, kind="stable")
    S = np.cumsum(g, axis=1) * cell
    t = cell * np.arange(1, flat.shape[1] + 1)
    return np.max(t ** (1.0 / p - 1.0) * S, axis=1)


def lp_norm(f: ComplexField, q: float) -> float:
    u = np.abs(f.physical().samples)
    if math.isinf(q):
        return float(u.max())
    return float((f.grid.cell_volume * np.sum(u ** q)) ** (1.0 / q))


# --------------------------------------------------------------------------
# Sobolev norms and conserved quantities

def _spectral(f: ComplexField) -> np.ndarray:
    return f.samples if not f.is_physical else fft(f.samples)


def sobolev_norm(f: ComplexField, s: float) -> float:
    """(sum <xi>^(2s) |u_hat|^2 * cell_volume)^(1/2), <xi>^2 = 1 + |xi|^2."""
    uh = _spectral(f)
    w = (1.0 + f.grid.k_squared) ** s
    return float(np.sqrt(f.grid.cell_volume * np.sum(w * np.abs(uh) ** 2)))


def sobolev_norms_batch(spec_stack: np.ndarray, grid, s: float) -> np.ndarray:
    w = (1.0 + grid.k_squared) ** s
    axes = tuple(range(1, spec_stack.ndim))
    return np.sqrt(grid.cell_volume * np.sum(w * np.abs(spec_stack) ** 2, axis=axes))


def conserved_quantities(f: ComplexField, dispersion: DispersionParams,
                         nonlinearity: NonlinearityParams) -> tuple[float, float]:
    """(mass, energy) with

        E = delta*||Lap u||^2 - eps*||grad u||^2 + 2 lam/(alpha+2) ||u||_{alpha+2}^{alpha+2}

    (anisotropic: delta * sum_{i<=d} ||u_{x_i x_i}||^2 replaces the first term).
    Derivatives are spectral; the Nyquist mode enters with the same symbol
    as in the free group so the linear flow conserves E exactly.
    """
    if nonlinearity.kind != POWER:
        raise ValueError("energy is only defined here for the power nonlinearity")
    grid = f.grid
    dispersion.check_grid(grid)
    uh2 = np.abs(_spectral(f)) ** 2
    cv = grid.cell_volume
    mass = cv * float(np.sum(uh2))
    grad2 = cv * float(np.sum(grid.k_squared * uh2))
    if dispersion.variant == ISOTROPIC:
        quart = cv * float(np.sum(grid.k_squared ** 2 * uh2))
    else:
        xi = grid.wavevector()
        q = sum(np.broadcast_to(xi[j] ** 4, grid.shape) for j in range(dispersion.d))
        quart = cv * float(np.sum(q * uh2))
    a = nonlinearity.alpha
    pot = cv * float(np.sum(np.abs(f.physical().samples) ** (a + 2)))
    energy = dispersion.delta * quart - dispersion.epsilon * grad2 + 2.0 * nonlinearity.lam / (a + 2) * pot
    return mass, energy


def apriori_h2_bound(u0: ComplexField, dispersion: DispersionParams,
                     nonlinearity: NonlinearityParams) -> float:
    """Explicit bound on sup_t ||u(t)||_{H^2} from mass and energy of u0 (1-D).

    Uses ||u'||^2 <= M^(1/2) ||u''||, the periodic Agmon bound
    |u|_inf^2 <= M/(2L) + M^(1/2)||u'|| and ||u||_{a+2}^{a+2} <= |u|_inf^a M,
    then solves X^2 <= delta*E + (...) for the largest admissible X = ||u''||.
    """
    grid = u0.grid
    if grid.ndim != 1 or dispersion.variant != ISOTROPIC:
        raise ValueError("the explicit a-priori bound is implemented for 1-D isotropic runs")
    M, E = conserved_quantities(u0, dispersion, nonlinearity)
    a = nonlinearity.alpha
    if a >= 8:
        raise ValueError("the a-priori bound needs n*alpha < 8")
    delta, eps, lam = dispersion.delta, dispersion.epsilon, nonlinearity.lam
    L = grid.half_width[0]
    sqM = math.sqrt(M)

    def rhs(X):
        r = delta * E
        if delta * eps > 0:
            r += delta * eps * sqM * X
        if delta * lam < 0:
            linf2 = M / (2 * L) + sqM * math.sqrt(sqM * X)
            r += abs(lam) * 2.0 / (a + 2) * linf2 ** (a / 2) * M
        return r

    h = lambda X: X * X - rhs(X)
    hi = 1.0 + math.sqrt(abs(rhs(0.0)) + 1.0)
    while h(hi) <= 0:
        hi *= 2.0
    if h(0.0) >= 0:
        X = 0.0
    else:
        X = optimize.brentq(h, 0.0, hi, xtol=1e-14, rtol=1e-14)
    return sqM + X


# --------------------------------------------------------------------------
# exponents and the admissible region

@dataclass(frozen=True)
class ExponentSet:
    n: int
    d: int | None
    alpha: float
    p: float
    variant: str
    q_local: float
    q_global: float
    beta: float
    sigma: float
    b_l: float
    b_g: float

    @property
    def n_eff(self) -> int:
        return self.n if self.variant == ISOTROPIC else 2 * self.n - self.d

    def b_local(self, q: float) -> float:
        return self.n_eff / 4.0 * (1.0 / self.p - 1.0 / q)


def exponent_set(n: int, d: int | None, alpha: float, p: float,
                 variant: str = ISOTROPIC) -> ExponentSet:
    if not alpha >= 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if variant == ANISOTROPIC:
        if d is None or not 1 <= d < n:
            raise ValueError("anisotropic exponents need 1 <= d < n")
        ne = 2 * n - d
    elif variant == ISOTROPIC:
        ne = n
    else:
        raise ValueError(f"unknown variant {variant!r}")
    q_local = p * (alpha + 1)
    return ExponentSet(
        n=n, d=d if variant == ANISOTROPIC else None, alpha=alpha, p=p, variant=variant,
        q_local=q_local, q_global=alpha + 2,
        beta=ne * alpha / (4.0 * p * (alpha + 1)),
        sigma=1.0 / alpha - ne / (4.0 * (alpha + 2)),
        b_l=ne / 4.0 * (1.0 / p - 1.0 / q_local),
        b_g=ne / 4.0 * (2.0 / p - 1.0),
    )


class Region(enum.Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


XI0_B = (1.0, 0.0)
XI0_P0 = (2.0 / 3.0, 0.0)
XI0_Q0 = (1.0, 1.0 / 3.0)
XI0_R0 = (0.5, 0.5)
# counter-clockwise: R0 -> P0 -> B -> Q0
_XI0_VERTICES = (XI0_R0, XI0_P0, XI0_B, XI0_Q0)
_EXCLUDED_VERTICES = (XI0_P0, XI0_Q0)


def xi0_membership(inv_p: float, inv_q: float, tol: float = 1e-12) -> Region:
    """Classify (1/p, 1/q) against the quadrilateral R0 P0 B Q0.

    Edges and the apices B, R0 belong to the region; P0 and Q0 do not.
    """
    pt = (float(inv_p), float(inv_q))
    for v in _EXCLUDED_VERTICES:
        if math.hypot(pt[0] - v[0], pt[1] - v[1]) <= tol:
            return Region.OUTSIDE
    on_edge = False
    verts = _XI0_VERTICES
    for i in range(4):
        (x0, y0), (x1, y1) = verts[i], verts[(i + 1) % 4]
        ex, ey = x1 - x0, y1 - y0
        cross = (ex * (pt[1] - y0) - ey * (pt[0] - x0)) / math.hypot(ex, ey)
        if cross < -tol:
            return Region.OUTSIDE
        if cross <= tol:
            on_edge = True
    return Region.BOUNDARY if on_edge else Region.INTERIOR


def local_hypotheses(ex: ExponentSet) -> list[str]:
    """Violated hypotheses of the local existence theory (empty when admissible)."""
    problems = []
    region = xi0_membership(1.0 / ex.p, 1.0 / ex.q_local)
    if region is not Region.INTERIOR:
        problems.append(
            f"(1/p, 1/(p(alpha+1))) = ({1 / ex.p:.6g}, {1 / ex.q_local:.6g}) must lie in the "
            f"interior of the quadrilateral R0P0BQ0 (found {region.value}; apices P0, Q0 and "
            f"all edges are not interior)")
    if not ex.beta * (ex.alpha + 1) < 1:
        problems.append(
            f"beta*(alpha+1) = {ex.beta * (ex.alpha + 1):.6g} must be < 1 "
            f"(equivalently n_eff*alpha/(4p) < 1)")
    return problems


def global_hypotheses(ex: ExponentSet) -> list[str]:
    problems = []
    if not (ex.alpha + 1) * ex.sigma < 1:
        problems.append(f"(alpha+1)*sigma = {(ex.alpha + 1) * ex.sigma:.6g} must be < 1")
    if not ex.n_eff * ex.alpha / (4.0 * (ex.alpha + 2)) < 1:
        problems.append("n_eff*alpha/(4(alpha+2)) must be < 1")
    return problems


# --------------------------------------------------------------------------
# time series

@dataclass
class NormSeries:
    times: np.ndarray
    values: np.ndarray
    norm_kind: str
    label: str = ""

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise ValueError("times and values must be 1-D arrays of equal length")
        if np.any(np.diff(self.times) < 0):
            raise ValueError("times must be sorted")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise ValueError("values must be finite and nonnegative")

    def __len__(self):
        return self.times.size

    def window(self, t_lo: float, t_hi: float) -> "NormSeries":
        m = (self.times >= t_lo) & (self.times <= t_hi)
        return NormSeries(self.times[m], self.values[m], self.norm_kind, self.label)


def geometric_times(t_min: float, t_max: float, ratio: float = 2.0 ** 0.25) -> np.ndarray:
    """Geometric mesh from t_min up to and including t_max."""
    if not (0 < t_min <= t_max):
        raise ValueError("need 0 < t_min <= t_max")
    k = int(math.floor(math.log(t_max / t_min) / math.log(ratio) + 1e-9))
    ts = t_min * ratio ** np.arange(k + 1)
    if ts[-1] < t_max * (1 - 1e-12):
        ts = np.append(ts, t_max)
    return ts


def weighted_time_norm(series: NormSeries, weight_exponent: float) -> float:
    """max_k |t_k|^w * v_k."""
    if len(series) == 0:
        return 0.0
    if np.any(series.times == 0):
        raise ValueError("weighted time norm is degenerate at t = 0")
    return float(np.max(np.abs(series.times) ** weight_exponent * series.values))


def xt_norm(series: NormSeries, r: float, mesh: str = "uniform") -> float:
    """(int_0^T v(t)^r dt)^(1/r) by the trapezoidal rule on the series mesh.

    If the first sample is at t0 > 0 the piece [0, t0] is taken as t0*v0^r.
    """
    if not r >= 1:
        raise ValueError(f"time exponent r must be >= 1, got {r}")
    if len(series) == 0:
        raise ValueError("X_T norm of an empty series")
    t, v = series.times, series.values
    if t.size > 2:
        steps = np.diff(t)
        if mesh == "uniform":
            ok = np.allclose(steps, steps[0], rtol=1e-9, atol=0)
        elif mesh == "geometric":
            q = t[2:] / t[1:-1] if t[0] == 0 else t[1:] / t[:-1]
            ok = np.allclose(q[:-1], q[0], rtol=1e-9, atol=0) if q.size > 1 else True
        else:
            raise ValueError(f"unknown mesh {mesh!r}")
        if not ok:
            raise ValueError(f"series times are not a {mesh} mesh")
    vr = v ** r
    total = float(integrate.trapezoid(vr, t)) if t.size > 1 else 0.0
    if t[0] > 0:
        total += t[0] * vr[0]
    return total ** (1.0 / r)


def fit_decay_exponent(series: NormSeries, window: tuple[float, float]) -> tuple[float, float]:
    """Least-squares slope of log(value) against log(t) inside the window."""
    w = series.window(*window)
    if len(w) < 5:
        raise ValueError(f"need at least 5 samples in window {window}, got {len(w)}")
    if np.any(w.values <= 0) or np.any(w.times <= 0):
        raise ValueError("decay fit needs positive times and values")
    x, y = np.log(w.times), np.log(w.values)
    fit = stats.linregress(x, y)
    # stderr from the residuals; linregress derives it from r, which loses
    # all digits on exact power laws
    res = y - (fit.intercept + fit.slope * x)
    err = math.sqrt(float(np.sum(res ** 2)) / (x.size - 2) / float(np.sum((x - x.mean()) ** 2)))
    return float(fit.slope), err
