"""Experiment harnesses: decay, self-similarity, Picard certification,
vanishing-dispersion limits, radial symmetry and plain evolution runs."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Sequence

import numpy as np
from scipy import stats

from .. import analysis
from ..analysis import NormSeries
from ..dispersion import (ISOTROPIC, DispersionParams, apply_free_group,
                          difference_multiplier, group_velocity, scale_transform)
from ..errors import AdmissibilityError, WrapAroundError
from ..grid import ComplexField, GridSpec, make_grid
from ..integrators import EvolveConfig, PicardConfig, evolve, picard_iterate
from ..nonlinearity import NonlinearityParams
from .data import GAUSSIAN, HOMOGENEOUS, InitialData
from .report import ExperimentReport


def _grid_echo(grid: GridSpec) -> dict:
    return {"ndim": grid.ndim, "points": list(grid.points), "half_width": list(grid.half_width)}


def _dispersion_echo(d: DispersionParams) -> dict:
    return {"epsilon": d.epsilon, "delta": d.delta, "variant": d.variant, "d": d.d}


def _nl_echo(nl: NonlinearityParams) -> dict:
    return {"lam": nl.lam, "alpha": nl.alpha, "c_f": nl.c_f, "kind": nl.kind}


def _rel_h2(a: ComplexField, b: ComplexField) -> float:
    diff = analysis.sobolev_norm(a.with_samples(a.samples - b.samples), 2)
    ref = analysis.sobolev_norm(b, 2)
    return diff / ref if ref > 0 else diff


# --------------------------------------------------------------------------
# dispersive decay

def retained_band(u0: ComplexField, band_tol: float = 0.05) -> np.ndarray:
    """Boolean mask of the strongest modes carrying a (1 - band_tol) share of the mass."""
    if not 0 <= band_tol < 1:
        raise ValueError("band_tol must lie in [0, 1)")
    power = np.abs(u0.spectral().samples).ravel() ** 2
    order = np.argsort(-power, kind="stable")
    cum = np.cumsum(power[order])
    if cum[-1] == 0:
        return np.zeros(u0.grid.shape, dtype=bool)
    k = int(np.searchsorted(cum, (1.0 - band_tol) * cum[-1])) + 1
    mask = np.zeros(power.size, dtype=bool)
    mask[order[:k]] = True
    return mask.reshape(u0.grid.shape)


def wrap_time(u0: ComplexField, dispersion: DispersionParams, band_tol: float = 0.05) -> float:
    """2L / v_max with v_max the largest group speed over the retained band."""
    band = retained_band(u0, band_tol)
    if not band.any():
        return math.inf
    vmax = float(group_velocity(u0.grid, dispersion)[band].max())
    if vmax == 0:
        return math.inf
    return 2.0 * min(u0.grid.half_width) / vmax


def _lq(f: ComplexField, q: float) -> float:
    return analysis.lp_norm(f, q)


def _decay_series(u0: ComplexField, dispersion, q, times) -> np.ndarray:
    u0h = u0.spectral()
    return np.array([_lq(apply_free_group(u0h, t, dispersion).physical(), q) for t in times])


def decay_study(u0_spec: InitialData, grid: GridSpec, dispersion: DispersionParams,
                p_values: Sequence[float], t_window: tuple[float, float], *,
                n_times: int = 33, slope_tol: float = 0.05, band_tol: float = 0.05,
                box_check: bool = True, box_tol: float = 0.02) -> ExperimentReport:
    """Fit the free-flow decay of ||G(t) u0||_{p'} against -b_g(p).

    The window must end before the wrap-around time; with ``box_check`` the
    study is repeated on a box twice as wide and the slopes compared.
    """
    t_lo, t_hi = map(float, t_window)
    if not 0 < t_lo < t_hi:
        raise ValueError("decay window needs 0 < t_lo < t_hi")
    dispersion.check_grid(grid)
    u0 = u0_spec.build(grid)
    t_wrap = wrap_time(u0, dispersion, band_tol)
    if t_hi >= t_wrap:
        raise WrapAroundError(
            f"decay window end {t_hi} reaches the wrap-around time; safe horizon is t < {t_wrap:.6g}",
            safe_horizon=t_wrap)
    times = np.geomspace(t_lo, t_hi, n_times)
    report = ExperimentReport(
        "decay",
        config={"grid": _grid_echo(grid), "dispersion": _dispersion_echo(dispersion),
                "initial_data": u0_spec.as_dict(), "p_values": [float(p) for p in p_values],
                "t_window": [t_lo, t_hi], "n_times": n_times, "slope_tol": slope_tol,
                "band_tol": band_tol, "box_check": box_check, "box_tol": box_tol},
        provenance={"grid": _grid_echo(grid), "t_wrap": t_wrap, "seed": u0_spec.seed})
    big = grid.doubled() if box_check else None
    u0_big = u0_spec.build(big) if box_check else None
    for p in p_values:
        if not p >= 1:
            raise ValueError(f"decay study needs p >= 1, got {p}")
        q = math.inf if p == 1 else p / (p - 1.0)
        ex = analysis.exponent_set(grid.ndim, dispersion.d, 1.0, p, dispersion.variant)
        expected = -ex.b_g
        vals = _decay_series(u0, dispersion, q, times)
        kind = f"Lq({q:g})"
        series = NormSeries(times, vals, kind, label=f"p{p:g}")
        report.series.append(series)
        slope, err = analysis.fit_decay_exponent(series, (t_lo, t_hi))
        report.fitted.append((f"slope_p{p:g}", slope, err))
        report.add_verdict(f"decay_slope_p{p:g}", abs(slope - expected) <= slope_tol,
                           slope, slope_tol, f"expected {expected:g}")
        if box_check:
            vb = _decay_series(u0_big, dispersion, q, times)
            sb = NormSeries(times, vb, kind, label=f"p{p:g}_doubled_box")
            report.series.append(sb)
            slope_b, err_b = analysis.fit_decay_exponent(sb, (t_lo, t_hi))
            report.fitted.append((f"slope_p{p:g}_doubled_box", slope_b, err_b))
            report.add_verdict(f"box_doubling_p{p:g}", abs(slope_b - slope) <= box_tol,
                               abs(slope_b - slope), box_tol)
    return report


# --------------------------------------------------------------------------
# self-similarity

@dataclass(frozen=True)
class SelfSimilaritySettings:
    """Numerical settings of the self-similarity study.

    The simulated path evolves v = r*u for radial data in ``radial_dim``
    dimensions on a 1-D periodic grid (odd data), where the radial
    fourth-order operator acts as d^4/dr^4.  The residual is measured on
    |x| <= window_factor * t^(1/4).
    """

    points: int = 2 ** 17
    half_width: float = 16384.0
    dt: float = 1.0 / 16.0
    radial_dim: int = 3
    window_factor: float = 4.0
    threshold: float = 0.05
    synthetic_points: int = 1024
    synthetic_half_width: float = 32.0
    dealias: float | None = 2.0 / 3.0
    negative_control: bool = False


def _synthetic_family(g, alpha):
    def u(x, t):
        return t ** (-1.0 / alpha) * g(x[0] * t ** -0.25)
    return u


def _trig_interp(v: np.ndarray, grid: GridSpec, y: np.ndarray, chunk: int = 16) -> np.ndarray:
    """Trigonometric interpolant of periodic 1-D samples evaluated at y."""
    n = grid.points[0]
    L = grid.half_width[0]
    vh = np.fft.fft(v) / n
    xi = grid.wavenumbers[0]
    out = np.empty(y.size, dtype=complex)
    for lo in range(0, y.size, chunk):
        yy = y[lo:lo + chunk]
        out[lo:lo + chunk] = np.exp(1j * np.outer(yy + L, xi)) @ vh
    return out


def self_similarity_study(alpha: float, profile: InitialData, lambdas: Sequence[float],
                          times: Sequence[float], *, dispersion: DispersionParams | None = None,
                          lam: float = 1.0,
                          settings: SelfSimilaritySettings = SelfSimilaritySettings()) -> ExperimentReport:
    """Residual ||u(t) - lam^(4/alpha) u(lam x, lam^4 t)|| / ||u(t)|| per (lam, t).

    A gaussian ``profile`` g gives the exact family t^(-1/alpha) g(x t^(-1/4));
    a homogeneous profile |x|^(-4/alpha) is simulated.
    """
    dispersion = dispersion or DispersionParams(0.0, 1.0)
    if dispersion.epsilon != 0 and not settings.negative_control:
        raise ValueError("self-similarity needs epsilon = 0 (set negative_control to run it anyway)")
    if dispersion.variant != ISOTROPIC:
        raise ValueError("self-similarity study uses the isotropic operator")
    report = ExperimentReport(
        "selfsim",
        config={"alpha": alpha, "profile": profile.as_dict(), "lambdas": list(map(float, lambdas)),
                "times": list(map(float, times)), "dispersion": _dispersion_echo(dispersion),
                "lam": lam, "settings": asdict(settings)})
    thr = settings.threshold
    if profile.kind == GAUSSIAN:
        grid = make_grid(1, settings.synthetic_points, settings.synthetic_half_width)
        w = float(np.atleast_1d(profile.width)[0])
        g = lambda x: profile.amplitude * np.exp(-(x / w) ** 2)
        u = _synthetic_family(g, alpha)
        x = grid.axes
        for lm in lambdas:
            us = scale_transform(u, lm, alpha)
            for t in times:
                a, b = u(x, t), us(x, t)
                res = float(np.linalg.norm(a - b) / np.linalg.norm(a))
                report.fitted.append((f"residual_lam{lm:g}_t{t:g}", res, 0.0))
                report.add_verdict(f"selfsim_lam{lm:g}_t{t:g}", res < 1e-12, res, 1e-12, "exact family")
        report.provenance = {"grid": _grid_echo(grid), "mode": "synthetic"}
        return report
    if profile.kind != HOMOGENEOUS:
        raise ValueError("self-similarity profile must be gaussian (exact family) or homogeneous")
    if not math.isclose(profile.power, 4.0 / alpha, rel_tol=1e-12):
        raise ValueError(f"homogeneous data must have degree -4/alpha = {-4.0 / alpha:g}")

    n = settings.radial_dim
    ex = analysis.exponent_set(n, None, alpha, 1.0 + 1.0 / alpha, ISOTROPIC)
    problems = analysis.global_hypotheses(ex)
    if problems:
        raise AdmissibilityError("; ".join(problems))
    grid = make_grid(1, settings.points, settings.half_width)
    dt = settings.dt
    r0 = profile.mollify if profile.mollify else 2.0 * grid.spacing[0]
    x = grid.axes[0]
    r = np.abs(x)
    # v = r u for u = c r^(-4/alpha) clamped at r0; odd, zero at x = -L
    v0 = profile.amplitude * x * np.maximum(r, r0) ** (-profile.power)
    v0[0] = 0.0
    weight = np.where(r > 0, 1.0 / np.where(r > 0, r, 1.0), 0.0)
    nl = NonlinearityParams(lam, alpha)

    plan = []
    for t in times:
        k_t = int(round(t / dt))
        if k_t < 1 or not math.isclose(k_t * dt, t, rel_tol=1e-12):
            raise ValueError(f"time {t} is not a multiple of dt={dt}")
        for lm in lambdas:
            k_s = int(round(lm ** 4 * t / dt))
            plan.append((lm, (k_s * dt / t) ** 0.25, t, k_t, k_s))
    steps = {p[3] for p in plan} | {p[4] for p in plan}
    t_end = max(steps) * dt
    cfg = EvolveConfig(dispersion, nl, dt, t_end, dealias=settings.dealias, modulus_weight=weight)
    traj = dict((int(round(s / dt)), f.samples) for s, f in
                evolve(ComplexField(grid, v0), cfg, at_steps=steps))
    power_v = 4.0 / alpha - 1.0
    for lm_req, lm, t, k_t, k_s in plan:
        win = np.abs(x) <= settings.window_factor * t ** 0.25
        vt = traj[k_t][win]
        scaled = lm ** power_v * _trig_interp(traj[k_s], grid, lm * x[win])
        res = float(np.linalg.norm(vt - scaled) / np.linalg.norm(vt))
        report.fitted.append((f"residual_lam{lm_req:g}_t{t:g}", res, 0.0))
        report.add_verdict(f"selfsim_lam{lm_req:g}_t{t:g}", res < thr, res, thr,
                           f"lambda used {lm:.12g}")
        report.series.append(NormSeries(np.array([t]), np.array([res]), "residual", f"lam{lm_req:g}"))
    report.provenance = {"grid": _grid_echo(grid), "dt": dt, "mode": "radial reduction",
                         "radial_dim": n, "mollify_radius": r0, "sigma": ex.sigma,
                         "alpha_plus_one_sigma": (alpha + 1) * ex.sigma}
    return report


# --------------------------------------------------------------------------
# Picard certification

def picard_certify(u0_spec: InitialData, grid: GridSpec, pconfig: PicardConfig, *,
                   ratio_threshold: float = 0.5, agreement_tol: float = 1e-3) -> ExperimentReport:
    pconfig.check_admissible(grid.ndim)
    u0 = u0_spec.build(grid)
    traj, rep = picard_iterate(u0, pconfig)
    report = ExperimentReport(
        "picard",
        config={"grid": _grid_echo(grid), "dispersion": _dispersion_echo(pconfig.dispersion),
                "nonlinearity": _nl_echo(pconfig.nonlinearity), "initial_data": u0_spec.as_dict(),
                "p": pconfig.p, "T_star": pconfig.T_star, "quad_nodes": pconfig.quad_nodes,
                "max_iters": pconfig.max_iters, "tol": pconfig.tol, "gauss_order": pconfig.gauss_order},
        provenance={"grid": _grid_echo(grid), "dt": pconfig.T_star / pconfig.quad_nodes,
                    "seed": u0_spec.seed})
    report.fitted += [("c_tilde", rep.c_tilde, 0.0), ("predicted_bound", rep.predicted_bound, 0.0),
                      ("K", rep.K, 0.0), ("quadrature_error", rep.quadrature_error, 0.0)]
    its = np.arange(1, rep.iterate_count + 1, dtype=float)
    report.series.append(NormSeries(its, np.array(rep.difference_norms), "picard_difference"))
    worst = max(rep.contraction_ratios, default=0.0)
    report.add_verdict("contraction_ratio_below_1", worst < 1, worst, 1.0)
    report.add_verdict("contraction_ratio_proof_threshold", worst <= ratio_threshold, worst, ratio_threshold)
    report.add_verdict("converged", rep.converged, rep.difference_norms[-1], pconfig.tol)
    report.add_verdict("quadrature_error_below_tol", rep.quadrature_error < pconfig.tol,
                       rep.quadrature_error, pconfig.tol)
    ecfg = EvolveConfig(pconfig.dispersion, pconfig.nonlinearity, pconfig.T_star / pconfig.quad_nodes,
                        pconfig.T_star, dealias=pconfig.dealias)
    split = evolve(u0, ecfg)
    agree = max(_rel_h2(a, b) for (_, a), (_, b) in zip(traj, split))
    report.add_verdict("split_step_agreement_h2", agree <= agreement_tol, agree, agreement_tol)
    report.picard = rep
    return report


# --------------------------------------------------------------------------
# vanishing second-order dispersion

H2 = "h2"
WEAK = "weak"


def eps_limit_hypotheses(mode: str, n: int, dispersion: DispersionParams,
                         nonlinearity: NonlinearityParams, p: float = 1.2,
                         r: float | None = None) -> list[str]:
    a = nonlinearity.alpha
    problems = []
    if mode == H2:
        if not (float(a).is_integer() and a > 0 and int(a) % 2 == 0):
            problems.append(f"alpha must be a positive even integer (got {a:g})")
        if dispersion.variant != ISOTROPIC:
            problems.append("the H2 limit is stated for the isotropic operator A = Lap^2")
        if not n < 4:
            problems.append(f"n < 4 required (got n={n})")
        if dispersion.delta * nonlinearity.lam < 0:
            if not n * a < 8:
                problems.append(f"delta*lambda < 0 requires n*alpha < 8 (got {n * a:g})")
            ratio = n * a / (4.0 * (a + 2))
            if n == 2 and not ratio < 1:
                problems.append("delta*lambda < 0, n = 2 requires n*alpha/(4(alpha+2)) < 1")
            if n != 2 and not ratio <= 1:
                problems.append("delta*lambda < 0 requires n*alpha/(4(alpha+2)) <= 1")
    elif mode == WEAK:
        ex = analysis.exponent_set(n, dispersion.d, a, p, dispersion.variant)
        problems += analysis.local_hypotheses(ex)
        if r is None or not r > a / (1.0 - ex.beta):
            problems.append(f"r must exceed alpha/(1-beta) = {a / (1.0 - ex.beta):.6g} (got {r})")
    else:
        raise ValueError(f"unknown eps-limit mode {mode!r}")
    return problems


def eps_limit_study(u0_spec: InitialData, grid: GridSpec, delta: float,
                    nonlinearity: NonlinearityParams, eps_list: Sequence[float], t_eval: float,
                    mode: str = H2, *, dt: float = 1e-3, p: float = 1.2, r: float | None = None,
                    stride: int = 10, min_slope: float = 0.9, weak_factor: float = 10.0,
                    monotone_tol: float = 0.01, oracle_tol: float = 1e-10,
                    dealias: float | None = 2.0 / 3.0) -> ExperimentReport:
    """Distance between the eps > 0 and eps = 0 solutions from common data.

    h2: ||u_eps(t_eval) - u(t_eval)||_{H^2}.  weak: the X_T norm (L^r in time
    of the weak L^{p(alpha+1)} norm) of the difference on [0, t_eval].
    """
    base = DispersionParams(0.0, delta)
    problems = eps_limit_hypotheses(mode, grid.ndim, base, nonlinearity, p, r)
    if problems:
        raise AdmissibilityError("; ".join(problems))
    u0 = u0_spec.build(grid)
    eps_sorted = sorted((float(e) for e in eps_list), reverse=True)
    cfg0 = EvolveConfig(base, nonlinearity, dt, t_eval, snapshot_stride=stride, dealias=dealias)
    ref = evolve(u0, cfg0)
    report = ExperimentReport(
        "eps-limit",
        config={"grid": _grid_echo(grid), "delta": delta, "nonlinearity": _nl_echo(nonlinearity),
                "initial_data": u0_spec.as_dict(), "eps_list": eps_sorted, "t_eval": t_eval,
                "mode": mode, "dt": dt, "p": p, "r": r, "stride": stride},
        provenance={"grid": _grid_echo(grid), "dt": dt, "horizon": t_eval, "seed": u0_spec.seed})
    ex = analysis.exponent_set(grid.ndim, None, nonlinearity.alpha, p, ISOTROPIC)
    errors = []
    for eps in eps_sorted:
        if eps == 0:
            errors.append(0.0)
            continue
        run = evolve(u0, replace(cfg0, dispersion=DispersionParams(eps, delta)))
        if mode == H2:
            a, b = run[-1][1], ref[-1][1]
            errors.append(analysis.sobolev_norm(a.with_samples(a.samples - b.samples), 2))
        else:
            times = np.array([s for s, _ in run])
            diff = np.stack([a.samples - b.samples for (_, a), (_, b) in zip(run, ref)])
            vals = analysis.weak_norms_batch(diff, grid.cell_volume, ex.q_local)
            errors.append(analysis.xt_norm(NormSeries(times, vals, f"weak-Lp({ex.q_local:g})"), r))
    errors = np.array(errors)
    eps_arr = np.array(eps_sorted)
    report.series.append(NormSeries(eps_arr[::-1], errors[::-1], f"{mode}_error_vs_eps"))
    pos = eps_arr > 0
    e_pos = errors[pos]
    if e_pos.size >= 2:
        strict = bool(np.all(np.diff(e_pos) < 0))
        report.add_verdict("strictly_decreasing", strict, float(np.max(np.diff(e_pos))), 0.0)
        worst = float(np.max(e_pos[1:] / e_pos[:-1]))
        report.add_verdict("non_increasing_1pct", worst <= 1.0 + monotone_tol, worst, 1.0 + monotone_tol)
    if np.any(~pos):
        zero_err = float(np.max(errors[~pos]))
        report.add_verdict("eps_zero_identical", zero_err == 0.0, zero_err, 0.0)
    if mode == H2:
        if nonlinearity.is_trivial:
            u0h = u0.spectral().samples
            w = (1.0 + grid.k_squared) ** 2
            oracle = np.array([
                math.sqrt(grid.cell_volume * float(np.sum(
                    w * np.abs(difference_multiplier(grid, t_eval, DispersionParams(e, delta)) * u0h) ** 2)))
                for e in eps_arr])
            rel = float(np.max(np.abs(errors - oracle) / np.where(oracle > 0, oracle, 1.0)))
            report.add_verdict("linear_oracle", rel <= oracle_tol, rel, oracle_tol)
        elif e_pos.size >= 2:
            fit = stats.linregress(np.log(eps_arr[pos]), np.log(e_pos))
            report.fitted.append(("rate_slope", float(fit.slope), float(fit.stderr)))
            report.add_verdict("rate_slope", fit.slope >= min_slope, float(fit.slope), min_slope)
    elif e_pos.size >= 2:
        shrink = float(e_pos[0] / e_pos[-1])
        report.fitted.append(("shrink_factor", shrink, 0.0))
        report.add_verdict("weak_shrink", shrink >= weak_factor, shrink, weak_factor)
    for e, err in zip(eps_arr, errors):
        report.fitted.append((f"error_eps{e:g}", float(err), 0.0))
    return report


# --------------------------------------------------------------------------
# radial symmetry

def ring_labels(grid: GridSpec) -> np.ndarray:
    """Shell index m1^2 + m2^2 for points strictly inside the inscribed disc (-1 outside)."""
    if grid.ndim != 2 or grid.points[0] != grid.points[1] or grid.half_width[0] != grid.half_width[1]:
        raise ValueError("rings need a square 2-D grid")
    n = grid.points[0]
    m = np.arange(n) - n // 2
    r2 = m[:, None] ** 2 + m[None, :] ** 2
    return np.where(r2 < (n // 2) ** 2, r2, -1)


def angular_variance(f: ComplexField, labels: np.ndarray | None = None) -> float:
    """max over rings of var(|u|) on the ring, divided by max |u|^2."""
    labels = ring_labels(f.grid) if labels is None else labels
    mod = np.abs(f.physical().samples).ravel()
    top = float(mod.max())
    if top == 0:
        return 0.0
    lab = labels.ravel()
    keep = lab >= 0
    lab, vals = lab[keep], mod[keep]
    order = np.argsort(lab, kind="stable")
    lab, vals = lab[order], vals[order]
    cuts = np.flatnonzero(np.diff(lab)) + 1
    worst = 0.0
    for ring in np.split(vals, cuts):
        if ring.size >= 2:
            worst = max(worst, float(np.var(ring)))
    return worst / top ** 2


def radial_study(u0_spec: InitialData, grid: GridSpec, config: EvolveConfig, *,
                 threshold: float = 1e-8) -> ExperimentReport:
    if grid.ndim != 2:
        raise ValueError("radial study runs on 2-D grids")
    labels = ring_labels(grid)
    u0 = u0_spec.build(grid)
    traj = evolve(u0, config)
    times = np.array([t for t, _ in traj])
    var = np.array([angular_variance(f, labels) for _, f in traj])
    report = ExperimentReport(
        "radial",
        config={"grid": _grid_echo(grid), "dispersion": _dispersion_echo(config.dispersion),
                "nonlinearity": _nl_echo(config.nonlinearity), "initial_data": u0_spec.as_dict(),
                "dt": config.dt, "t_end": config.t_end, "stride": config.snapshot_stride,
                "threshold": threshold},
        provenance={"grid": _grid_echo(grid), "dt": config.dt, "seed": u0_spec.seed,
                    "radial_by_construction": u0_spec.is_radial})
    report.series.append(NormSeries(times, var, "angular_variance"))
    worst = float(var.max())
    report.add_verdict("radial_preservation", worst < threshold, worst, threshold)
    return report


# --------------------------------------------------------------------------
# plain evolution

def metrics_row(t: float, f: ComplexField, dispersion, nonlinearity, p: float) -> dict:
    mass, energy = analysis.conserved_quantities(f, dispersion, nonlinearity)
    return {"t": t, "mass": mass, "energy": energy, "h2": analysis.sobolev_norm(f, 2),
            "linf": analysis.lp_norm(f, math.inf),
            f"weak_lp_{p:g}": analysis.lorentz_quasinorm(f, p, math.inf)}


def evolve_run(u0_spec: InitialData, grid: GridSpec, config: EvolveConfig, *,
               metrics_p: float = 2.0, mass_tol: float = 1e-8,
               keep_snapshots: bool = True) -> ExperimentReport:
    u0 = u0_spec.build(grid)
    traj = evolve(u0, config)
    report = ExperimentReport(
        "evolve",
        config={"grid": _grid_echo(grid), "dispersion": _dispersion_echo(config.dispersion),
                "nonlinearity": _nl_echo(config.nonlinearity), "initial_data": u0_spec.as_dict(),
                "dt": config.dt, "t_end": config.t_end, "stride": config.snapshot_stride,
                "dealias": config.dealias},
        provenance={"grid": _grid_echo(grid), "dt": config.dt, "seed": u0_spec.seed},
        metrics_p=metrics_p)
    if config.nonlinearity.kind == "power":
        report.metrics = [metrics_row(t, f, config.dispersion, config.nonlinearity, metrics_p)
                          for t, f in traj]
        masses = np.array([m["mass"] for m in report.metrics])
        m0 = masses[0]
        drift = float(np.max(np.abs(masses - m0)) / m0) if m0 > 0 else float(np.max(masses))
        report.add_verdict("mass_conservation", drift <= mass_tol, drift, mass_tol)
    if keep_snapshots:
        report.snapshots = traj
    return report


def norms_report(u0_spec: InitialData, grid: GridSpec, dispersion: DispersionParams,
                 nonlinearity: NonlinearityParams, p: float, d_index: float = math.inf,
                 s_values: Sequence[float] = (0.0, 1.0, 2.0)) -> ExperimentReport:
    u0 = u0_spec.build(grid)
    report = ExperimentReport(
        "norms",
        config={"grid": _grid_echo(grid), "initial_data": u0_spec.as_dict(), "p": p,
                "d_index": d_index, "s_values": list(s_values)},
        provenance={"grid": _grid_echo(grid), "seed": u0_spec.seed}, metrics_p=p)
    report.metrics = [metrics_row(0.0, u0, dispersion, nonlinearity, p)]
    report.fitted.append((f"lorentz_p{p:g}_d{d_index:g}", analysis.lorentz_quasinorm(u0, p, d_index), 0.0))
    for s in s_values:
        report.fitted.append((f"sobolev_s{s:g}", analysis.sobolev_norm(u0, s), 0.0))
    ex = analysis.exponent_set(grid.ndim, dispersion.d, nonlinearity.alpha, p, dispersion.variant)
    for name in ("beta", "sigma", "b_l", "b_g", "q_local", "q_global"):
        report.fitted.append((name, float(getattr(ex, name)), 0.0))
    return report
