import math

import numpy as np
import pytest

from pitchtrack.config import load_config
from pitchtrack.harness import (CSV_COLUMNS, EXTRA_COLUMNS, METRIC_NAMES, Dispersion, FlightLog,
                                compute_metrics, draw_dispersions, rms, run_flight,
                                run_monte_carlo, summarize)

NO_GUSTS = ("wind.gusts_enabled=false",)
SCEN_II = ('mission.scenario="II"', "wind.gusts_enabled=false")


def _log(**cols):
    n = len(next(iter(cols.values())))
    base = {name: np.zeros(n) for name in CSV_COLUMNS + EXTRA_COLUMNS}
    base["t"] = np.arange(n) * 0.002
    base.update({k: np.asarray(v, dtype=float) for k, v in cols.items()})
    return FlightLog(base, True, "", False, float(base["t"][-1]))


def test_metrics_constant_and_zero_error():
    m = compute_metrics(_log(e_x=np.full(100, -0.3), e_z=np.zeros(100)))
    assert m.rmse_x_m == pytest.approx(0.3, rel=1e-15)
    assert m.rmse_z_m == 0.0 and m.rmse_theta_deg == 0.0


def test_rms_of_sine():
    t = np.linspace(0.0, 10.0, 100001)[:-1]
    assert rms(2.0 * np.sin(2 * math.pi * t)) == pytest.approx(2.0 / math.sqrt(2), abs=1e-6)


def test_percent_rmse_definition():
    true = np.array([1.0, -1.0, 1.0, -1.0])
    m = compute_metrics(_log(fax_true=true, fax_hat=true * 1.1, tau_true=np.zeros(4), tau_hat=np.ones(4)))
    assert m.pct_rmse_fax == pytest.approx(10.0)
    assert m.rmse_tau_Nm == 1.0 and math.isnan(m.pct_rmse_tau)
    assert all(getattr(m, n) >= 0 for n in METRIC_NAMES if not math.isnan(getattr(m, n)))


def test_metrics_reject_empty_log():
    with pytest.raises(ValueError):
        compute_metrics(FlightLog({name: np.array([]) for name in CSV_COLUMNS}, True, "", False, 0.0))


def test_log_sampling_and_rate_contract():
    cfg = load_config(None, ["sim.t_max=2.0", "sim.record_physics=true"])
    log, _ = run_flight(cfg)
    t = log["t"]
    assert len(log) == 1000
    np.testing.assert_allclose(np.diff(t), 0.002, rtol=1e-9)
    phys = log.physics
    nsub = cfg.sim.controller_substeps
    T, mu = phys["T"], phys["mu"]
    assert len(T) == 2000
    for k in range(len(T)):
        if k % nsub:
            assert T[k] == T[k - 1] and mu[k] == mu[k - 1]
    np.testing.assert_array_equal(T[::nsub], log["T"])
    np.testing.assert_array_equal(mu[::nsub], log["mu"])


def test_identical_config_gives_identical_log():
    cfg = load_config(None, ["sim.t_max=3.0", "sim.seed=5"])
    a, ma = run_flight(cfg)
    b, mb = run_flight(cfg)
    for name in a.columns:
        np.testing.assert_array_equal(a[name], b[name])
    assert ma == mb
    c, _ = run_flight(load_config(None, ["sim.t_max=3.0", "sim.seed=6"]))
    assert not np.array_equal(a["e_z"], c["e_z"])


def test_runaway_is_recorded_not_raised():
    log, m = run_flight(load_config(None, ["sim.t_max=2.0", "sim.max_downrange_error_m=1e-9"]))
    assert not log.stable and not m.stable and "downrange" in log.reason
    log, m = run_flight(load_config(None, ["sim.t_max=20.0", "outer.gains=[-2.0, -2.0, 0.0]"]))
    assert not log.stable and log.reason


def test_feedforward_only_tracks_exactly_without_aero(flight_cache):
    log, m = flight_cache("aero.enabled=false", "inner.k1x=0", "inner.k2x=0", "inner.k1theta=0",
                          "inner.k2theta=0", "inner.gamma_x=0", "inner.gamma_theta=0",
                          "outer.gains=[0.0, 0.0, 0.0]")
    assert log.stable and log.burnout
    assert np.all(log["theta"] == 0.0) and np.all(log["z"] == 0.0)
    # the residual comes only from holding thrust for one controller period while mass and gravity drift
    assert np.max(np.abs(log["e_x"])) < 1e-3


@pytest.mark.slow
def test_scenario_two_peak_downrange_tracked(flight_cache):
    log, m = flight_cache(*SCEN_II)
    assert log.stable
    peak_d = np.max(np.abs(log["z_d"]))
    assert np.max(np.abs(log["z"])) == pytest.approx(peak_d, rel=0.02)


@pytest.mark.slow
def test_pitch_coupling_term_vanishes_in_steady_state(flight_cache):
    log, _ = flight_cache(*NO_GUSTS)
    assert log.stable
    t, delta = log["t"], np.abs(log["delta"])
    tail = t >= t[-1] - 10.0
    ratio = np.mean(delta[tail]) / np.max(delta)
    assert ratio < 1e-3, f"tail-mean/peak = {ratio:.4g} (peak {np.max(delta):.4g})"


@pytest.mark.slow
def test_estimates_settle_within_adaptation_window():
    cfg = load_config(None, ['mission.scenario="custom"', "mission.t_f=60",
                             'mission.segments=[{axis="x",t_start=0.0,t_end=60.0,value=0.0}]',
                             "sim.freeze_mass=true", "sim.t_max=60", "wind.gusts_enabled=false",
                             "wind.constant_wind_i=[-30.0, 10.0]"])
    log, _ = run_flight(cfg)
    g = cfg.inner
    t = log["t"]
    for name, window in (("fax", 20 / min(g.k1x, g.k2x, g.gamma_x)),
                         ("tau", 20 / min(g.k1theta, g.k2theta, g.gamma_theta))):
        after = t >= window
        rel = np.abs(log[f"{name}_hat"][after] - log[f"{name}_true"][after]) / np.abs(log[f"{name}_true"][after])
        assert np.max(rel) < 0.01, f"{name}: max relative error {np.max(rel):.4g} after {window:g} s"


def test_dispersion_draws():
    sig = {"m": 0.05, "j_y": 0.1, "x_cm": 0.1, "x_cp": 0.2, "cd": 0.2, "cl": 0.2}
    d = draw_dispersions(sig, 4000, seed=1)
    for name, s3 in sig.items():
        v = np.array([getattr(x, name) for x in d])
        assert np.all(np.abs(v - 1.0) <= s3 + 1e-12)
        assert np.mean(v) == pytest.approx(1.0, abs=3 * s3 / 3 / math.sqrt(4000) * 3)
        assert np.std(v) == pytest.approx(s3 / 3, rel=0.06)
    assert draw_dispersions(sig, 5, 3) == draw_dispersions(sig, 5, 3)
    assert len({x.gust_seed for x in d}) > 3990
    zero = draw_dispersions({}, 3, 0)
    assert all((x.m, x.j_y, x.x_cm, x.x_cp, x.cd, x.cl) == (1.0,) * 6 for x in zero)


def test_zero_dispersion_campaign_has_zero_spread():
    cfg = load_config(None, ["sim.t_max=3.0", "wind.gusts_enabled=false"])
    zero = {k: 0.0 for k in ("m", "j_y", "x_cm", "x_cp", "cd", "cl")}
    s = run_monte_carlo(cfg, n_runs=3, sigma3=zero, seed=2)
    assert s.n_runs == 3 and s.n_stable == 3
    nominal = run_flight(cfg)[1]
    for name in METRIC_NAMES:
        assert s.std[name] == 0.0
        assert s.mean[name] == pytest.approx(getattr(nominal, name), rel=1e-12, nan_ok=True)


def test_seeded_campaign_rerun_is_identical(tmp_path):
    cfg = load_config(None, ["sim.t_max=2.0"])
    a = run_monte_carlo(cfg, n_runs=2, seed=9)
    b = run_monte_carlo(cfg, n_runs=2, seed=9, workers=2)
    assert a.runs == b.runs and a.mean == b.mean and a.std == b.std
    a.to_csv(tmp_path / "a.csv")
    b.to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    table = a.format_table()
    assert "2/2 stable" in table and "f_az" in table


def test_summary_skips_unstable_runs():
    good = compute_metrics(_log(e_x=np.ones(4)))
    bad = compute_metrics(FlightLog(_log(e_x=np.full(4, 100.0)).columns, False, "x", False, 0.0))
    s = summarize([good, bad], [Dispersion(), Dispersion()])
    assert s.n_stable == 1 and s.mean["rmse_x_m"] == 1.0 and s.std["rmse_x_m"] == 0.0


def test_csv_column_order(tmp_path):
    log, _ = run_flight(load_config(None, ["sim.t_max=0.1"]))
    log.to_csv(tmp_path / "f.csv")
    header = (tmp_path / "f.csv").read_text().splitlines()[0].split(",")
    assert tuple(header) == CSV_COLUMNS
    log.to_csv(tmp_path / "g.csv", extras=True)
    assert tuple((tmp_path / "g.csv").read_text().splitlines()[0].split(",")) == CSV_COLUMNS + EXTRA_COLUMNS
