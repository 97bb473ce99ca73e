import math

import numpy as np
import pytest

from foschlab.analysis import NormSeries
from foschlab.dispersion import DispersionParams
from foschlab.errors import AdmissibilityError, WrapAroundError
from foschlab.experiments import (ExperimentReport, InitialData, SelfSimilaritySettings,
                                  angular_variance, decay_study, eps_limit_study, evolve_run,
                                  norms_report, persist_report, picard_certify, radial_study,
                                  read_csv, read_snapshot, retained_band, self_similarity_study,
                                  wrap_time, write_snapshot)
from foschlab.experiments.report import summary_lines
from foschlab.grid import make_grid, random_field
from foschlab.integrators import EvolveConfig, PicardConfig
from foschlab.nonlinearity import NonlinearityParams

from oracles import gaussian_linear_eps_error

GAUSS = InitialData("gaussian")
FREE4 = DispersionParams(0.0, 1.0)


# ---- initial data ----------------------------------------------------------

def test_initial_data_kinds(grid1, grid2):
    assert np.all(InitialData("zero").build(grid2).samples == 0)
    g = GAUSS.build(grid1)
    assert g.samples[grid1.points[0] // 2] == 1.0
    r1 = InitialData("random", seed=5).build(grid2)
    r2 = InitialData("random", seed=5).build(grid2)
    assert np.array_equal(r1.samples, r2.samples)
    assert GAUSS.is_radial and not InitialData("gaussian", width=(1.0, 2.0)).is_radial
    with pytest.raises(ValueError):
        InitialData("bogus")
    with pytest.raises(ValueError):
        InitialData("homogeneous", power=0.0)


# ---- decay -----------------------------------------------------------------

def test_decay_isotropic_slope():
    grid = make_grid(1, 4096, 200.0)
    rep = decay_study(GAUSS, grid, FREE4, [1.0], (1.0, 10.0))
    slope, _ = rep.fit("slope_p1")
    assert abs(slope + 0.25) <= 0.05
    assert rep.passed
    assert rep.provenance["t_wrap"] > 10


def test_decay_series_count():
    grid = make_grid(1, 1024, 100.0)
    rep = decay_study(GAUSS, grid, FREE4, [1.0, 1.5], (1.0, 4.0), n_times=9, box_check=False)
    assert len(rep.series) == 2 and all(s.times.size == 9 for s in rep.series)
    assert rep.verdict("decay_slope_p1.5").note == "expected -0.0833333"


def test_decay_wrap_error():
    grid = make_grid(1, 512, 10.0)
    with pytest.raises(WrapAroundError) as exc:
        decay_study(GAUSS, grid, FREE4, [1.0], (1.0, 1000.0))
    t_wrap = wrap_time(GAUSS.build(grid), FREE4)
    assert exc.value.safe_horizon == pytest.approx(t_wrap)
    assert f"{t_wrap:.6g}" in str(exc.value)


def test_retained_band_share(grid1):
    u = GAUSS.build(grid1)
    band = retained_band(u, 0.05)
    p = np.abs(u.spectral().samples) ** 2
    assert p[band].sum() >= 0.95 * p.sum()
    assert wrap_time(InitialData("zero").build(grid1), FREE4) == math.inf


def test_decay_rejects_bad_window(grid1):
    with pytest.raises(ValueError):
        decay_study(GAUSS, grid1, FREE4, [1.0], (2.0, 1.0))


# ---- self-similarity -------------------------------------------------------

def test_selfsim_synthetic_family():
    rep = self_similarity_study(2.0, GAUSS, [1.0, 1.1, 1.5], [0.5, 1.0, 3.0])
    assert rep.passed
    assert max(v.measured for v in rep.verdicts) < 1e-12
    assert all(v.measured == 0 for v in rep.verdicts if v.criterion.startswith("selfsim_lam1_"))


def test_selfsim_rejects_eps():
    with pytest.raises(ValueError, match="epsilon"):
        self_similarity_study(2.0, GAUSS, [1.0], [1.0], dispersion=DispersionParams(1.0, 1.0))


def test_selfsim_rejects_wrong_power():
    with pytest.raises(ValueError, match="degree"):
        self_similarity_study(2.0, InitialData("homogeneous", power=1.0), [1.0], [1.0])


SMALL = dict(points=2 ** 15, half_width=4096.0)
HOMOG = InitialData("homogeneous", amplitude=0.1, power=2.0, mollify=0.5)


def test_selfsim_simulated_small_box():
    rep = self_similarity_study(2.0, HOMOG, [1.0, 1.25, 1.5], [4.0],
                                settings=SelfSimilaritySettings(**SMALL))
    assert rep.verdict("selfsim_lam1_t4").measured < 1e-12
    assert rep.passed


@pytest.mark.parametrize("eps", [1.0, -1.0])
def test_selfsim_negative_control_fails(eps):
    rep = self_similarity_study(2.0, HOMOG, [1.25, 1.5], [4.0], dispersion=DispersionParams(eps, 1.0),
                                settings=SelfSimilaritySettings(negative_control=True, **SMALL))
    assert not rep.passed


# ---- Picard certification ----------------------------------------------------

def _pc(**kw):
    base = dict(dispersion=DispersionParams(1.0, 1.0), nonlinearity=NonlinearityParams(1.0, 2.0),
                p=1.2, T_star=0.5, tol=1e-10)
    base.update(kw)
    return PicardConfig(**base)


@pytest.mark.parametrize("p", [1.0, 2.0])
def test_picard_certify_rejects_region(p):
    with pytest.raises(AdmissibilityError, match="R0P0BQ0"):
        picard_certify(GAUSS, make_grid(1, 64, 8.0), _pc(p=p))


def test_picard_certify_zero_data():
    rep = picard_certify(InitialData("zero"), make_grid(1, 64, 8.0), _pc())
    assert rep.passed and rep.picard.iterate_count == 1


def test_picard_certify_small_gaussian():
    rep = picard_certify(InitialData("gaussian", amplitude=0.05), make_grid(1, 256, 16.0), _pc())
    assert rep.passed, [v for v in rep.verdicts if not v.passed]
    assert rep.verdict("contraction_ratio_proof_threshold").measured <= 0.5


# ---- eps limit ---------------------------------------------------------------

EPS = [0.1, 0.05, 0.025, 0.0125]


def test_eps_limit_linear_oracle():
    grid = make_grid(1, 256, 16.0)
    nl = NonlinearityParams(0.0, 2.0)
    rep = eps_limit_study(GAUSS, grid, 1.0, nl, EPS + [0.0], 0.5)
    assert rep.verdict("eps_zero_identical").measured == 0.0
    assert rep.verdict("linear_oracle").passed
    for e in EPS:
        err, _ = rep.fit(f"error_eps{e:g}")
        assert err == pytest.approx(gaussian_linear_eps_error(16.0, 256, 0.5, e), rel=1e-10)


@pytest.mark.parametrize("lam", [1.0, -1.0])
def test_eps_limit_nonlinear(lam):
    grid = make_grid(1, 256, 16.0)
    rep = eps_limit_study(GAUSS, grid, 1.0, NonlinearityParams(lam, 2.0), EPS, 0.5)
    assert rep.verdict("strictly_decreasing").passed
    assert rep.verdict("non_increasing_1pct").passed
    assert rep.fit("rate_slope")[0] >= 0.9


def test_eps_limit_rejects_odd_alpha():
    with pytest.raises(AdmissibilityError, match="positive even integer"):
        eps_limit_study(GAUSS, make_grid(1, 64, 8.0), 1.0, NonlinearityParams(1.0, 3.0), EPS, 0.5)


def test_eps_limit_rejects_small_r():
    with pytest.raises(AdmissibilityError, match="alpha/\\(1-beta\\)"):
        eps_limit_study(GAUSS, make_grid(1, 64, 8.0), 1.0, NonlinearityParams(1.0, 2.0), EPS, 0.5,
                        mode="weak", r=2.0)


def test_eps_limit_focusing_constraint():
    nl = NonlinearityParams(-1.0, 4.0)
    with pytest.raises(AdmissibilityError, match="n\\*alpha < 8"):
        eps_limit_study(GAUSS, make_grid(2, 16, 4.0), 1.0, nl, EPS, 0.1)


# ---- radial ------------------------------------------------------------------

RGRID = make_grid(2, 128, 24.0)
RGAUSS = InitialData("gaussian", width=2.0)


@pytest.mark.parametrize("lam,tol", [(0.0, 1e-14), (1.0, 1e-8), (-1.0, 1e-8)])
def test_radial_preservation(lam, tol):
    cfg = EvolveConfig(DispersionParams(1.0, 1.0), NonlinearityParams(lam, 2.0), 1e-3, 0.1,
                       snapshot_stride=20)
    rep = radial_study(RGAUSS, RGRID, cfg)
    assert rep.passed
    assert rep.verdict("radial_preservation").measured < tol


def test_radial_negative_control():
    cfg = EvolveConfig(DispersionParams(1.0, 1.0), NonlinearityParams(1.0, 2.0), 1e-3, 0.01)
    rep = radial_study(InitialData("gaussian", width=(1.0, 2.0)), RGRID, cfg)
    assert not rep.passed


def test_angular_variance_zero(grid2):
    assert angular_variance(InitialData("zero").build(make_grid(2, 16, 2.0))) == 0.0


# ---- persistence -------------------------------------------------------------

def test_empty_report_header_only(tmp_path):
    persist_report(ExperimentReport("evolve"), tmp_path)
    header, rows = read_csv(tmp_path / "metrics.csv")
    assert header == ["t", "mass", "energy", "h2", "linf", "weak_lp_2"]
    assert rows.shape == (0, 6)
    assert (tmp_path / "metrics.csv").read_text().count("\n") == 1


def test_series_file_rows(tmp_path):
    rep = ExperimentReport("x", series=[NormSeries(np.arange(1, 8.0), np.random.default_rng(1).random(7),
                                                   "Lq(inf)", "p1")])
    paths = persist_report(rep, tmp_path)
    series = [p for p in paths if p.name.startswith("series_")]
    assert len(series) == 1
    _, rows = read_csv(series[0])
    assert rows.shape == (7, 2)
    assert np.array_equal(rows[:, 1], rep.series[0].values)


def test_snapshot_roundtrip(tmp_path, rng):
    for g in (make_grid(1, 32, 3.0), make_grid(2, 8, (1.0, 2.5))):
        f = random_field(g, rng)
        write_snapshot(tmp_path / "s.f4ns", 0.1 + 0.2, f)
        t, h = read_snapshot(tmp_path / "s.f4ns")
        assert t == 0.1 + 0.2 and h.grid == g
        assert h.samples.tobytes() == f.samples.tobytes()
    raw = (tmp_path / "s.f4ns").read_bytes()
    assert raw[:4] == b"F4NS"


def test_snapshot_bad_magic(tmp_path):
    (tmp_path / "x").write_bytes(b"NOPE" + bytes(40))
    with pytest.raises(ValueError):
        read_snapshot(tmp_path / "x")


def test_persist_bad_dir(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="file"):
        persist_report(ExperimentReport("x"), blocker / "sub")


def test_evolve_run_deterministic(tmp_path):
    grid = make_grid(1, 128, 8.0)
    cfg = EvolveConfig(DispersionParams(1.0, 1.0), NonlinearityParams(1.0, 2.0), 0.01, 0.1,
                       snapshot_stride=5)
    outs = []
    for k in range(2):
        rep = evolve_run(GAUSS, grid, cfg)
        persist_report(rep, tmp_path / str(k))
        outs.append(rep)
    assert outs[0].passed
    for name in ("metrics.csv", "snapshot_00000.f4ns", "snapshot_00002.f4ns"):
        assert (tmp_path / "0" / name).read_bytes() == (tmp_path / "1" / name).read_bytes()
    strip = lambda p: [l for l in p.read_text().splitlines() if not l.startswith("timestamp")]
    assert strip(tmp_path / "0" / "summary.txt") == strip(tmp_path / "1" / "summary.txt")
    _, rows = read_csv(tmp_path / "0" / "metrics.csv")
    assert rows.shape == (3, 6)
    assert np.array_equal(rows[:, 1], [m["mass"] for m in outs[0].metrics])


def test_summary_lines_format():
    rep = ExperimentReport("decay", config={"a": 1.5})
    rep.add_verdict("c", True, 0.1, 0.2)
    lines = summary_lines(rep, "T")
    assert lines[0] == "experiment_kind: decay"
    assert "config.a: 1.5" in lines
    assert lines[-1] == "timestamp (nondeterministic): T"
    assert all(": " in l for l in lines)


def test_norms_report():
    rep = norms_report(InitialData("gaussian"), make_grid(1, 256, 8.0), FREE4,
                       NonlinearityParams(1.0, 2.0), 1.2)
    assert rep.fit("beta")[0] == pytest.approx(2 / 14.4)
    assert rep.fit("sobolev_s0")[0] == pytest.approx(math.sqrt(math.sqrt(math.pi / 2)), rel=1e-12)
