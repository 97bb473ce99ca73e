import math

import numpy as np
import pytest

from foschlab import analysis
from foschlab.dispersion import DispersionParams, apply_free_group
from foschlab.errors import AdmissibilityError, DivergenceError, NonFiniteError
from foschlab.grid import make_grid, random_field, sample_function, zero_field
from foschlab.integrators import (EvolveConfig, PicardConfig, duhamel_rhs, evolve,
                                  picard_iterate, strang_step)
from foschlab.nonlinearity import NonlinearityParams

DISP = DispersionParams(1.0, 1.0)
FOCUS = NonlinearityParams(-1.0, 2.0)
FREE = NonlinearityParams(0.0, 2.0)


@pytest.fixture
def gauss(grid1):
    return sample_function(grid1, lambda x: np.exp(-x ** 2))


def _rel(a, b, s=2.0):
    return analysis.sobolev_norm(a.with_samples(a.samples - b.samples), s) / analysis.sobolev_norm(b, s)


# ---- config ----------------------------------------------------------------

def test_evolve_config_validation():
    with pytest.raises(ValueError):
        EvolveConfig(DISP, FREE, 0.1, 0.05)
    with pytest.raises(ValueError):
        EvolveConfig(DISP, FREE, 0.1, 0.25)
    with pytest.raises(ValueError):
        EvolveConfig(DISP, FREE, 0.1, -1.0)
    with pytest.raises(ValueError):
        EvolveConfig(DISP, FREE, 0.1, 1.0, snapshot_stride=0)
    assert EvolveConfig(DISP, FREE, 0.1, 1.0).n_steps == 10
    assert EvolveConfig(DISP, FREE, -0.1, -1.0).n_steps == 10


# ---- strang_step / evolve --------------------------------------------------

def test_free_step_is_group(grid1, rng):
    f = random_field(grid1, rng)
    out = strang_step(f, EvolveConfig(DISP, FREE, 0.01, 0.01))
    ref = apply_free_group(f, 0.01, DISP)
    assert np.max(np.abs(out.samples - ref.samples)) < 1e-13


def test_two_snapshots(gauss):
    tr = evolve(gauss, EvolveConfig(DISP, FOCUS, 0.01, 0.01))
    assert [t for t, _ in tr] == [0.0, 0.01]


def test_snapshot_times_are_multiples(gauss):
    tr = evolve(gauss, EvolveConfig(DISP, FOCUS, 0.01, 0.1, snapshot_stride=3))
    ts = np.array([t for t, _ in tr])
    assert np.allclose(ts, [0, 0.03, 0.06, 0.09, 0.1])


def test_free_evolve_matches_group(grid2, rng):
    f = random_field(grid2, rng)
    d = DispersionParams(0.7, -1.0)
    tr = evolve(f, EvolveConfig(d, FREE, 0.01, 1.0, snapshot_stride=1000))
    ref = apply_free_group(f, 1.0, d)
    assert np.max(np.abs(tr[-1][1].samples - ref.samples)) / np.max(np.abs(ref.samples)) < 1e-12


def test_modulus_preserved_by_rotation(gauss):
    cfg = EvolveConfig(DISP, FOCUS, 0.01, 0.01, dealias=None)
    st = strang_step(gauss, cfg)
    assert st.mass() == pytest.approx(gauss.mass(), rel=1e-13)


def test_mass_invariance_random_fields():
    g = make_grid(1, 64, 8.0)
    rng = np.random.default_rng(11)
    cfg = EvolveConfig(DispersionParams(1.0, 1.0), NonlinearityParams(1.0, 2.0), 1e-3, 1e-3, dealias=None)
    worst = 0.0
    for _ in range(1000):
        f = random_field(g, rng)
        worst = max(worst, abs(strang_step(f, cfg).mass() / f.mass() - 1))
    assert worst < 1e-12


def test_mass_drift_long_run(gauss):
    tr = evolve(gauss, EvolveConfig(DISP, FOCUS, 1e-3, 1.0, snapshot_stride=1000))
    assert abs(tr[-1][1].mass() / gauss.mass() - 1) < 1e-10


def test_strang_order(grid1):
    gauss = sample_function(grid1, lambda x: np.exp(-x ** 2 / 4))
    T = 1.0
    disp, nl = DispersionParams(0.0, 1.0), NonlinearityParams(1.0, 2.0)
    ref = evolve(gauss, EvolveConfig(disp, nl, 0.005 / 16, T, snapshot_stride=10 ** 9))[-1][1]
    errs = []
    for dt in (0.02, 0.01, 0.005):
        u = evolve(gauss, EvolveConfig(disp, nl, dt, T, snapshot_stride=10 ** 9))[-1][1]
        errs.append(analysis.lp_norm(u.with_samples(u.samples - ref.samples), 2))
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(1.8 <= o <= 2.2 for o in orders), orders


def test_energy_drift_scaling(gauss):
    E0 = analysis.conserved_quantities(gauss, DISP, FOCUS)[1]
    drift = []
    for dt in (0.01, 0.005):
        u = evolve(gauss, EvolveConfig(DISP, FOCUS, dt, 1.0, snapshot_stride=10 ** 9))[-1][1]
        drift.append(abs(analysis.conserved_quantities(u, DISP, FOCUS)[1] - E0))
    assert 3.5 <= drift[0] / drift[1] <= 4.5


@pytest.mark.parametrize("nl,tol", [(FREE, 1e-12), (FOCUS, 1e-8)])
def test_time_reversal(gauss, nl, tol):
    fwd = evolve(gauss, EvolveConfig(DISP, nl, 1e-3, 0.5, snapshot_stride=10 ** 9, dealias=None))[-1]
    back = evolve(fwd[1], EvolveConfig(DISP, nl, -1e-3, -0.5, snapshot_stride=10 ** 9, dealias=None),
                  t0=fwd[0])[-1]
    assert back[0] == pytest.approx(0.0, abs=1e-12)
    err = np.max(np.abs(back[1].samples - gauss.samples))
    assert err < tol


def test_non_finite_reported(grid1):
    nl = NonlinearityParams(1.0, 2.0)
    f = sample_function(grid1, lambda x: np.where(np.abs(x) < 0.1, 1e200, 0.0))
    with pytest.raises(NonFiniteError) as exc:
        evolve(f, EvolveConfig(DISP, nl, 0.01, 0.05))
    assert exc.value.time is not None


def test_apriori_h2_bound(gauss):
    d = DispersionParams(0.0, 1.0)
    bound = analysis.apriori_h2_bound(gauss, d, FOCUS)
    tr = evolve(gauss, EvolveConfig(d, FOCUS, 1e-3, 2.0, snapshot_stride=20))
    h2 = max(analysis.sobolev_norm(u, 2) for _, u in tr)
    assert h2 < bound


# ---- Duhamel ---------------------------------------------------------------

def test_duhamel_zero_trajectory(grid1, gauss):
    z = zero_field(grid1)
    tr = [(0.0, z), (0.5, z), (1.0, z)]
    out = duhamel_rhs(tr, 1.0, EvolveConfig(DISP, FOCUS, 0.5, 1.0), u0=gauss)
    ref = apply_free_group(gauss, 1.0, DISP)
    assert np.max(np.abs(out.samples - ref.samples)) < 1e-13


def test_duhamel_t_zero(gauss):
    tr = [(0.0, gauss), (0.1, gauss)]
    out = duhamel_rhs(tr, 0.0, EvolveConfig(DISP, FOCUS, 0.1, 0.1))
    assert np.array_equal(out.samples, gauss.samples)


def test_duhamel_coverage_error(gauss):
    with pytest.raises(ValueError):
        duhamel_rhs([(0.0, gauss), (0.1, gauss)], 0.2, EvolveConfig(DISP, FOCUS, 0.1, 0.1))


def test_duhamel_fixed_point(gauss):
    cfg = EvolveConfig(DISP, FOCUS, 1e-3, 0.5)
    tr = evolve(gauss, cfg)
    out = duhamel_rhs(tr, 0.5, cfg)
    assert _rel(out, tr[-1][1]) < 1e-4


# ---- Picard ----------------------------------------------------------------

def _pconfig(**kw):
    base = dict(dispersion=DispersionParams(1.0, 1.0), nonlinearity=NonlinearityParams(1.0, 2.0),
                p=1.2, T_star=0.5, tol=1e-10)
    base.update(kw)
    return PicardConfig(**base)


def test_picard_config_rejects_region():
    with pytest.raises(AdmissibilityError):
        _pconfig(p=1.0).check_admissible(1)
    with pytest.raises(AdmissibilityError):
        _pconfig(p=2.0).check_admissible(1)
    assert _pconfig().check_admissible(1).beta == pytest.approx(2 / 14.4)


def test_picard_zero_data(grid1):
    traj, rep = picard_iterate(zero_field(grid1), _pconfig())
    assert rep.converged and rep.iterate_count == 1
    assert rep.contraction_ratios == []
    assert all(np.all(u.samples == 0) for _, u in traj)


def test_picard_first_iterate_is_free(gauss):
    traj, rep = picard_iterate(gauss, _pconfig(max_iters=1, nonlinearity=FREE))
    for t, u in traj[:: 32]:
        ref = apply_free_group(gauss, t, DISP)
        assert np.max(np.abs(u.samples - ref.samples)) < 1e-13


def test_picard_small_data_contracts():
    g = make_grid(1, 256, 16.0)
    u0 = sample_function(g, lambda x: 0.05 * np.exp(-x ** 2))
    cfg = _pconfig()
    traj, rep = picard_iterate(u0, cfg)
    assert rep.converged
    assert len(rep.contraction_ratios) == rep.iterate_count - 1
    assert max(rep.contraction_ratios) <= 0.5
    assert rep.quadrature_error < cfg.tol
    ref = evolve(u0, EvolveConfig(cfg.dispersion, cfg.nonlinearity, 1e-3, 0.5, snapshot_stride=125))
    pic = dict((round(t, 9), u) for t, u in traj)
    for t, u in ref:
        assert _rel(pic[round(t, 9)], u) < 1e-3


def test_picard_large_data_diverges():
    g = make_grid(1, 256, 16.0)
    u0 = sample_function(g, lambda x: 5.0 * np.exp(-x ** 2))
    with pytest.raises(DivergenceError) as exc:
        picard_iterate(u0, _pconfig())
    rep = exc.value.report
    assert not rep.converged and all(r >= 1 for r in rep.contraction_ratios[-3:])
