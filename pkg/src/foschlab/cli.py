"""Command-line front end.

    foschlab --config run.json [--out DIR] [--dry-run] [--threads K] [--seed S]

Exit status: 0 all verdicts pass, 2 a verdict failed, 3 configuration
error, 4 runtime numeric failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import scipy.fft

from . import analysis
from .dispersion import ISOTROPIC, DispersionParams
from .errors import ConfigError, FoschError, GridError
from .experiments import (InitialData, SelfSimilaritySettings, decay_study, eps_limit_study,
                          evolve_run, norms_report, persist_report, picard_certify,
                          radial_study, self_similarity_study)
from .experiments.report import summary_lines
from .experiments.studies import eps_limit_hypotheses
from .grid import make_grid
from .integrators import EvolveConfig, PicardConfig
from .nonlinearity import NonlinearityParams

EXIT_OK = 0
EXIT_VERDICT = 2
EXIT_CONFIG = 3
EXIT_RUNTIME = 4

COMMANDS = ("evolve", "decay", "picard", "selfsim", "eps-limit", "radial", "norms")
REQUIRED = object()

TOP_KEYS = {"command", "grid", "dispersion", "nonlinearity", "initial_data", "out_dir", "seed",
            *COMMANDS}
GRID_KEYS = {"ndim": REQUIRED, "points": REQUIRED, "half_width": REQUIRED}
DISPERSION_KEYS = {"epsilon": REQUIRED, "delta": REQUIRED, "variant": ISOTROPIC, "d": None}
NONLINEARITY_KEYS = {"lambda": REQUIRED, "alpha": REQUIRED}
DATA_KEYS = {"kind": "gaussian", "amplitude": 1.0, "width": 1.0, "center": 0.0, "power": 0.0,
             "mollify": None}
BLOCK_KEYS = {
    "evolve": {"dt": 1e-3, "t_end": REQUIRED, "snapshot_stride": 1, "dealias": 2.0 / 3.0,
               "metrics_p": 2.0, "mass_tol": 1e-8},
    "decay": {"p_values": [1.0], "t_window": REQUIRED, "n_times": 33, "slope_tol": 0.05,
              "band_tol": 0.05, "box_check": True, "box_tol": 0.02},
    "picard": {"p": REQUIRED, "T_star": REQUIRED, "quad_nodes": 256, "max_iters": 50, "tol": 1e-10,
               "K": None, "gauss_order": 4, "dealias": 2.0 / 3.0, "ratio_threshold": 0.5,
               "agreement_tol": 1e-3},
    "selfsim": {"lambdas": [1.25, 1.5], "times": [16.0], "dt": 1.0 / 16.0, "radial_dim": 3,
                "window_factor": 4.0, "threshold": 0.05, "dealias": 2.0 / 3.0,
                "negative_control": False},
    "eps-limit": {"eps_list": REQUIRED, "t_eval": REQUIRED, "mode": "h2", "dt": 1e-3, "p": 1.2,
                  "r": None, "stride": 10, "min_slope": 0.9, "weak_factor": 10.0,
                  "monotone_tol": 0.01, "dealias": 2.0 / 3.0},
    "radial": {"dt": 1e-3, "t_end": REQUIRED, "snapshot_stride": 10, "threshold": 1e-8,
               "dealias": 2.0 / 3.0},
    "norms": {"p": 2.0, "d_index": "inf", "s_values": [0.0, 1.0, 2.0]},
}


@dataclass
class RunConfig:
    command: str
    resolved: dict
    grid: object = None
    dispersion: DispersionParams | None = None
    nonlinearity: NonlinearityParams | None = None
    initial_data: InitialData | None = None
    block: dict = field(default_factory=dict)
    out_dir: str = "out"
    seed: int = 0


def _fill(section: str, given, schema: dict, problems: list) -> dict:
    if given is None:
        given = {}
    if not isinstance(given, dict):
        problems.append(f"{section}: expected an object")
        return {}
    out = {}
    for key in given:
        if key not in schema:
            problems.append(f"{section}.{key}: unknown key")
    for key, default in schema.items():
        if key in given:
            out[key] = given[key]
        elif default is REQUIRED:
            problems.append(f"{section}.{key}: required")
        else:
            out[key] = copy.deepcopy(default)
    return out


def _num(section, key, value, problems, *, positive=False, integer=False, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        problems.append(f"{section}.{key}: expected a number, got {value!r}")
        return None
    if integer and int(value) != value:
        problems.append(f"{section}.{key}: expected an integer, got {value!r}")
        return None
    if not math.isfinite(value):
        problems.append(f"{section}.{key}: must be finite")
        return None
    if positive and not value > 0:
        problems.append(f"{section}.{key}: must be positive, got {value!r}")
        return None
    return int(value) if integer else float(value)


def _num_list(section, key, value, problems, **kw):
    if not isinstance(value, list) or not value:
        problems.append(f"{section}.{key}: expected a non-empty list of numbers")
        return None
    vals = [_num(section, f"{key}[{i}]", v, problems, **kw) for i, v in enumerate(value)]
    return None if any(v is None for v in vals) else vals


def validate(raw: dict, *, seed: int | None = None, out_dir: str | None = None) -> RunConfig:
    """Schema and hypothesis checks; raises ConfigError listing every problem."""
    problems: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    for key in raw:
        if key not in TOP_KEYS:
            problems.append(f"{key}: unknown key")
    command = raw.get("command")
    if command not in COMMANDS:
        problems.append(f"command: must be one of {', '.join(COMMANDS)} (got {command!r})")
        raise ConfigError(problems)
    for other in COMMANDS:
        if other != command and other in raw:
            problems.append(f"{other}: block does not belong to command {command!r}")

    resolved = {"command": command}
    resolved["grid"] = _fill("grid", raw.get("grid"), GRID_KEYS, problems)
    resolved["dispersion"] = _fill("dispersion", raw.get("dispersion"), DISPERSION_KEYS, problems)
    if command == "decay" and "nonlinearity" not in raw:
        resolved["nonlinearity"] = {"lambda": 0.0, "alpha": 1.0}
    else:
        resolved["nonlinearity"] = _fill("nonlinearity", raw.get("nonlinearity"), NONLINEARITY_KEYS, problems)
    resolved["initial_data"] = _fill("initial_data", raw.get("initial_data"), DATA_KEYS, problems)
    resolved[command] = _fill(command, raw.get(command), BLOCK_KEYS[command], problems)
    resolved["out_dir"] = out_dir if out_dir is not None else raw.get("out_dir", "out")
    s = seed if seed is not None else raw.get("seed", 0)
    if isinstance(s, bool) or not isinstance(s, int) or not 0 <= s < 2 ** 64:
        problems.append(f"seed: expected an unsigned 64-bit integer, got {s!r}")
        s = 0
    resolved["seed"] = s
    if not isinstance(resolved["out_dir"], str):
        problems.append("out_dir: expected a string")
    if problems:
        raise ConfigError(problems)

    cfg = RunConfig(command=command, resolved=resolved, out_dir=resolved["out_dir"], seed=s)

    g = resolved["grid"]
    ndim = _num("grid", "ndim", g["ndim"], problems, integer=True)
    try:
        if ndim is not None:
            cfg.grid = make_grid(ndim, g["points"], g["half_width"])
    except (GridError, TypeError, ValueError) as exc:
        problems.append(f"grid: {exc}")

    dsp = resolved["dispersion"]
    eps = _num("dispersion", "epsilon", dsp["epsilon"], problems)
    delta = _num("dispersion", "delta", dsp["delta"], problems)
    try:
        if eps is not None and delta is not None:
            cfg.dispersion = DispersionParams(eps, delta, dsp["variant"], dsp["d"])
            if cfg.grid is not None:
                cfg.dispersion.check_grid(cfg.grid)
    except (GridError, ValueError, TypeError) as exc:
        problems.append(f"dispersion: {exc}")

    nlb = resolved["nonlinearity"]
    lam = _num("nonlinearity", "lambda", nlb["lambda"], problems)
    alpha = _num("nonlinearity", "alpha", nlb["alpha"], problems)
    try:
        if lam is not None and alpha is not None:
            cfg.nonlinearity = NonlinearityParams(lam, alpha)
    except ValueError as exc:
        problems.append(f"nonlinearity: {exc}")

    try:
        cfg.initial_data = InitialData(seed=s, **resolved["initial_data"])
    except (ValueError, TypeError) as exc:
        problems.append(f"initial_data: {exc}")

    block = resolved[command]
    cfg.block = block
    if not problems:
        _check_block(cfg, block, problems)
    if problems:
        raise ConfigError(problems)
    return cfg


def _check_block(cfg: RunConfig, b: dict, problems: list) -> None:
    c = cfg.command
    n = cfg.grid.ndim
    nl = cfg.nonlinearity
    disp = cfg.dispersion
    for key in ("dt", "t_end", "t_eval", "T_star", "threshold", "tol", "slope_tol", "box_tol",
                "agreement_tol", "ratio_threshold"):
        if key in b:
            b[key] = _num(c, key, b[key], problems, positive=True)
    for key in ("snapshot_stride", "quad_nodes", "max_iters", "gauss_order", "n_times", "stride",
                "radial_dim"):
        if key in b:
            b[key] = _num(c, key, b[key], problems, positive=True, integer=True)
    if "dealias" in b and b["dealias"] is not None:
        v = _num(c, "dealias", b["dealias"], problems, positive=True)
        if v is not None and v > 1:
            problems.append(f"{c}.dealias: fraction must lie in (0, 1]")
        b["dealias"] = v
    if problems:
        return
    if c in ("evolve", "radial"):
        try:
            EvolveConfig(disp, nl, b["dt"], b["t_end"], b["snapshot_stride"], b["dealias"])
        except ValueError as exc:
            problems.append(f"{c}: {exc}")
        if c == "radial":
            if n != 2:
                problems.append("radial: needs a 2-D grid")
            if disp.variant != ISOTROPIC:
                problems.append("radial: radial symmetry is preserved by the isotropic operator only")
    elif c == "decay":
        if nl.lam != 0:
            problems.append("decay: the decay study is a free-flow study and needs lambda = 0")
        pv = _num_list(c, "p_values", b["p_values"], problems)
        if pv is not None and any(p < 1 for p in pv):
            problems.append("decay.p_values: every p must be >= 1")
        tw = _num_list(c, "t_window", b["t_window"], problems, positive=True)
        if tw is not None and (len(tw) != 2 or not tw[0] < tw[1]):
            problems.append("decay.t_window: expected [t_lo, t_hi] with t_lo < t_hi")
    elif c == "picard":
        p = _num(c, "p", b["p"], problems)
        if p is not None:
            if not p >= 1:
                problems.append("picard.p: must be >= 1")
            else:
                ex = analysis.exponent_set(n, disp.d, nl.alpha, p, disp.variant)
                problems.extend(f"picard: {msg}" for msg in analysis.local_hypotheses(ex))
        if b["K"] is not None:
            _num(c, "K", b["K"], problems, positive=True)
    elif c == "selfsim":
        if n != 1:
            problems.append("selfsim: the radial reduction runs on a 1-D grid")
        if disp.epsilon != 0 and not b["negative_control"]:
            problems.append("selfsim: scaling invariance requires epsilon = 0")
        if disp.variant != ISOTROPIC:
            problems.append("selfsim: needs the isotropic operator")
        _num_list(c, "lambdas", b["lambdas"], problems, positive=True)
        _num_list(c, "times", b["times"], problems, positive=True)
        if cfg.initial_data.kind not in ("gaussian", "homogeneous"):
            problems.append("selfsim: initial_data.kind must be gaussian (exact family) or homogeneous")
        if cfg.initial_data.kind == "homogeneous":
            if not math.isclose(cfg.initial_data.power, 4.0 / nl.alpha, rel_tol=1e-12):
                problems.append("selfsim: homogeneous data must have power 4/alpha")
            ex = analysis.exponent_set(b["radial_dim"], None, nl.alpha, 2.0, ISOTROPIC)
            problems.extend(f"selfsim: {msg}" for msg in analysis.global_hypotheses(ex))
    elif c == "eps-limit":
        eps_list = _num_list(c, "eps_list", b["eps_list"], problems)
        if eps_list is not None and any(e < 0 for e in eps_list):
            problems.append("eps-limit.eps_list: values must be >= 0")
        if b["mode"] not in ("h2", "weak"):
            problems.append("eps-limit.mode: must be 'h2' or 'weak'")
            return
        if disp.epsilon != 0:
            problems.append("eps-limit: dispersion.epsilon must be 0 (the sweep sets it)")
        if b["r"] is not None:
            b["r"] = _num(c, "r", b["r"], problems, positive=True)
        p = _num(c, "p", b["p"], problems)
        if p is not None and p > 1:
            problems.extend(f"eps-limit: {msg}" for msg in
                            eps_limit_hypotheses(b["mode"], n, disp, nl, p, b["r"]))
        elif p is not None:
            problems.append("eps-limit.p: must exceed 1")
    elif c == "norms":
        p = _num(c, "p", b["p"], problems)
        if p is not None and not p > 1:
            problems.append("norms.p: must exceed 1")
        d = b["d_index"]
        if d != "inf":
            d = _num(c, "d_index", d, problems)
            if d is not None and d < 1:
                problems.append("norms.d_index: must be >= 1 or \"inf\"")


def parse_config(path, *, seed: int | None = None, out_dir: str | None = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return validate(raw, seed=seed, out_dir=out_dir)


def execute(cfg: RunConfig):
    """Run the configured experiment and return its report."""
    c, b = cfg.command, cfg.block
    grid, disp, nl, data = cfg.grid, cfg.dispersion, cfg.nonlinearity, cfg.initial_data
    if c == "evolve":
        ec = EvolveConfig(disp, nl, b["dt"], b["t_end"], b["snapshot_stride"], b["dealias"])
        return evolve_run(data, grid, ec, metrics_p=b["metrics_p"], mass_tol=b["mass_tol"])
    if c == "decay":
        return decay_study(data, grid, disp, b["p_values"], tuple(b["t_window"]),
                           n_times=b["n_times"], slope_tol=b["slope_tol"], band_tol=b["band_tol"],
                           box_check=b["box_check"], box_tol=b["box_tol"])
    if c == "picard":
        pc = PicardConfig(disp, nl, b["p"], b["T_star"], b["quad_nodes"], b["max_iters"], b["tol"],
                          b["K"], None, b["gauss_order"], b["dealias"])
        return picard_certify(data, grid, pc, ratio_threshold=b["ratio_threshold"],
                              agreement_tol=b["agreement_tol"])
    if c == "selfsim":
        st = SelfSimilaritySettings(points=grid.points[0], half_width=grid.half_width[0], dt=b["dt"],
                                    radial_dim=b["radial_dim"], window_factor=b["window_factor"],
                                    threshold=b["threshold"], dealias=b["dealias"],
                                    negative_control=b["negative_control"],
                                    synthetic_points=grid.points[0],
                                    synthetic_half_width=grid.half_width[0])
        return self_similarity_study(nl.alpha, data, b["lambdas"], b["times"], dispersion=disp,
                                     lam=nl.lam, settings=st)
    if c == "eps-limit":
        return eps_limit_study(data, grid, disp.delta, nl, b["eps_list"], b["t_eval"], b["mode"],
                               dt=b["dt"], p=b["p"], r=b["r"], stride=b["stride"],
                               min_slope=b["min_slope"], weak_factor=b["weak_factor"],
                               monotone_tol=b["monotone_tol"], dealias=b["dealias"])
    if c == "radial":
        ec = EvolveConfig(disp, nl, b["dt"], b["t_end"], b["snapshot_stride"], b["dealias"])
        return radial_study(data, grid, ec, threshold=b["threshold"])
    d = math.inf if b["d_index"] == "inf" else b["d_index"]
    return norms_report(data, grid, disp, nl, b["p"], d, b["s_values"])


def run(cfg: RunConfig, *, stream=None) -> int:
    stream = stream or sys.stdout
    try:
        report = execute(cfg)
        persist_report(report, cfg.out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FoschError, OSError, FloatingPointError) as exc:
        print(f"runtime error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for line in summary_lines(report):
        print(line, file=stream)
    return EXIT_OK if report.passed else EXIT_VERDICT


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="foschlab", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", help="output directory (overrides out_dir)")
    ap.add_argument("--dry-run", action="store_true", help="validate and echo the resolved config")
    ap.add_argument("--threads", type=int, default=1, help="FFT worker threads")
    ap.add_argument("--seed", type=int, help="seed for random initial data (overrides config)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("config error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(args.config, seed=args.seed, out_dir=args.out)
    except ConfigError as exc:
        print("config error:", file=sys.stderr)
        for p in exc.problems:
            print(f"  - {p}", file=sys.stderr)
        return EXIT_CONFIG
    if args.dry_run:
        print(json.dumps(cfg.resolved, indent=2, sort_keys=True))
        return EXIT_OK
    with scipy.fft.set_workers(args.threads):
        return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
