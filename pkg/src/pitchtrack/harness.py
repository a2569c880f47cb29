"""
Closed-loop flight orchestration, performance metrics and Monte Carlo campaigns.

The physics runs at ``sim.dt`` and the controller at ``sim.controller_rate_hz``
with zero-order-held commands in between. The controller sees the true
rigid-body state and air data, but only nominal vehicle parameters and
nominal aerodynamic tables.
"""

from __future__ import annotations

import csv
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .aero import AeroTables, default_aero_tables, load_aero_csv, xcp_lookup
from .config import SimConfig
from .dynamics import ControlCommand, FlightModel, NumericalDivergence, RigidBodyState
from .environment import WindModel, gravity, load_wind_profile, sample_atmosphere
from .inner import (AdaptiveState, InnerReference, SingularityError, ThrustEnvelopeError,
                    inner_step)
from .mission import (ReferenceSeries, custom_profile, integrate_profile, sample_reference,
                      scenario_I, scenario_II)
from .outer import OuterGains, OuterState, PitchDerivativeFilter, lqr_design, outer_step
from .vehicle import initial_mass_state, mass_flow_rate, scale_mass_state, update_mass_state

CSV_COLUMNS = (
    "t", "x", "xdot", "z", "zdot", "theta", "q", "T", "mu", "x_d", "z_d", "theta_d",
    "e_x", "e_z", "e_theta", "fax_true", "fax_hat", "tau_true", "tau_hat", "faz_true",
    "faz_hat", "delta", "alpha", "mach", "qbar",
)
EXTRA_COLUMNS = (
    "xdot_d", "zdot_d", "thetadot_d", "thetaddot_d", "m", "propellant", "SM", "SM_hat",
    "u_out", "saturated", "theta_d_raw",
)


@dataclass(frozen=True)
class Dispersion:
    """Multiplicative parameter dispersions applied to the true plant only."""

    m: float = 1.0
    j_y: float = 1.0
    x_cm: float = 1.0
    x_cp: float = 1.0
    cd: float = 1.0
    cl: float = 1.0
    gust_seed: int | None = None


@dataclass
class FlightLog:
    columns: dict
    stable: bool
    reason: str
    burnout: bool
    t_end: float
    physics: dict | None = None

    @property
    def numeric_failure(self) -> bool:
        """The run ended on a non-finite state rather than a loss of control."""
        return self.reason.startswith("NumericalDivergence")

    def __getitem__(self, name) -> np.ndarray:
        return self.columns[name]

    def __len__(self):
        return len(self.columns["t"])

    def to_csv(self, path, extras: bool = False) -> None:
        names = CSV_COLUMNS + (EXTRA_COLUMNS if extras else ())
        cols = [self.columns[n] for n in names]
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names)
            for row in zip(*cols):
                w.writerow(["%.9g" % v for v in row])


@dataclass(frozen=True)
class RunMetrics:
    rmse_x_m: float
    rmse_theta_deg: float
    rmse_z_m: float
    rms_T_N: float
    rms_mu_deg: float
    rmse_fax_N: float
    pct_rmse_fax: float
    rmse_tau_Nm: float
    pct_rmse_tau: float
    rmse_faz_N: float
    pct_rmse_faz: float
    stable: bool
    burnout: bool
    t_end_s: float
    reason: str = ""


METRIC_NAMES = ("rmse_x_m", "rmse_theta_deg", "rmse_z_m", "rms_T_N", "rms_mu_deg",
                "rmse_fax_N", "pct_rmse_fax", "rmse_tau_Nm", "pct_rmse_tau",
                "rmse_faz_N", "pct_rmse_faz")


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

def build_reference(cfg: SimConfig) -> ReferenceSeries:
    mc = cfg.mission
    if mc.scenario == "I":
        profile = scenario_I(mc.t_f)
    elif mc.scenario == "II":
        profile = scenario_II(mc.t_f)
    else:
        profile = custom_profile(list(mc.segments), mc.t_f)
    return integrate_profile(profile, 0.1)


def build_aero(cfg: SimConfig) -> AeroTables:
    if cfg.aero.table_path:
        return load_aero_csv(cfg.aero.table_path)
    return default_aero_tables()


def build_wind(cfg: SimConfig, seed: int | None = None) -> WindModel:
    w = cfg.wind
    alt, wind = w.profile_alt_m, w.profile_wind_mps
    if w.profile_path:
        alt, wind = load_wind_profile(w.profile_path)
    return WindModel(
        alt, wind,
        gusts_enabled=w.gusts_enabled,
        gust_length_m=w.gust_length_m,
        gust_sigma_mps=w.gust_sigma_mps,
        gust_ceiling_m=w.gust_ceiling_m,
        reference_airspeed_mps=w.reference_airspeed_mps,
        seed=cfg.sim.seed if seed is None else seed,
        dt=cfg.sim.dt,
        constant_wind_i=w.constant_wind_i,
    )


def build_outer_gains(cfg: SimConfig) -> OuterGains:
    if cfg.outer.gains is not None:
        return OuterGains(*(float(k) for k in cfg.outer.gains))
    return lqr_design(np.diag(cfg.outer.Q_diag), cfg.outer.R)


# ---------------------------------------------------------------------------
# Single flight
# ---------------------------------------------------------------------------

def run_flight(cfg: SimConfig, dispersion: Dispersion | None = None,
               aero: AeroTables | None = None, gains: OuterGains | None = None):
    """Simulate one closed-loop flight from ignition to burnout or ``sim.t_max``.

    Returns ``(FlightLog, RunMetrics)``. Loss of control (pitch singularity,
    retro-thrust demand, runaway downrange error, non-finite state) ends the
    run early with ``stable=False`` instead of raising.
    """
    disp = dispersion or Dispersion()
    s = cfg.sim
    vm = cfg.vehicle
    dt = s.dt
    nsub = s.controller_substeps
    dt_ctrl = nsub * dt
    margin = math.radians(s.singularity_margin_deg)
    d_ref = vm.max_diameter_m

    nominal_aero = aero if aero is not None else build_aero(cfg)
    true_aero = nominal_aero.scaled(cl=disp.cl, cd=disp.cd, xcp=disp.x_cp)
    wind = build_wind(cfg, disp.gust_seed)
    model = FlightModel(vm, true_aero, wind, aero_enabled=cfg.aero.enabled,
                        g0=s.g0, r_earth=s.r_earth_m)
    ref_series = build_reference(cfg)
    outer_gains = gains if gains is not None else build_outer_gains(cfg)
    inner_gains = cfg.inner
    envelope = cfg.envelope if cfg.envelope.enabled else None

    def plant_mass(ms):
        return scale_mass_state(ms, disp.m, disp.j_y, disp.x_cm, vm.gimbal_station_m)

    ms_nom = initial_mass_state(vm)
    ms_true = plant_mass(ms_nom)
    y = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    ad = AdaptiveState()
    os_ = OuterState(filt=PitchDerivativeFilter(cfg.outer.filter_cutoff1_hz, cfg.outer.filter_cutoff2_hz))
    cmd = ControlCommand(0.0, 0.0)

    log = {name: [] for name in CSV_COLUMNS + EXTRA_COLUMNS}
    phys = {"t": [], "T": [], "mu": []} if s.record_physics else None
    n_steps = int(math.floor(s.t_max / dt + 1e-9))
    stable, reason, burnout = True, "", False
    t = 0.0
    k = 0
    try:
        while k < n_steps:
            t = k * dt
            if k % nsub == 0:
                state = RigidBodyState(t, *y)
                fm, env = model.forces(state, ms_true)
                ref = sample_reference(ref_series, t)
                g_now = gravity(state.x_m, s.g0, s.r_earth_m)
                alpha, mach = (fm.alpha_rad, fm.mach) if fm.qbar_Pa > 0 else (0.0, 0.0)
                sm_hat = (xcp_lookup(alpha, mach, nominal_aero) - ms_nom.x_cm_m) / d_ref
                pitch, os_, odiag = outer_step(state, ms_nom, ad, ref, os_, outer_gains, g_now,
                                               sm_hat, d_ref, dt_ctrl, cfg.outer.sm_min, margin)
                iref = InnerReference(ref.x_d, ref.xdot_d, ref.xddot_d,
                                      pitch.theta_d, pitch.thetadot_d, pitch.thetaddot_d)
                cmd, ad_next, idiag = inner_step(state, ms_nom, ad, iref, inner_gains, g_now,
                                                 dt_ctrl, margin, envelope, cmd)
                fax, faz = fm.f_a_i
                tau = fm.tau_a_Nm
                m_t, j_t, l_t = ms_true.m_kg, ms_true.j_y_kgm2, ms_true.l_m
                a_true = -env.g_mps2 + fax / m_t - ref.xddot_d
                b_true = (j_t * pitch.thetaddot_d - tau) / (m_t * l_t)
                th = state.theta_rad
                delta = a_true * math.tan(th) + b_true / math.cos(th) - odiag.u_out
                row = (
                    t, *y, cmd.T_N, cmd.mu_rad, ref.x_d, ref.z_d, pitch.theta_d,
                    idiag.e_x, odiag.e_z, idiag.e_theta, fax, ad.fax_hat_N, tau,
                    ad.tau_a_hat_Nm, faz, odiag.faz_hat_N, delta,
                    fm.alpha_rad, fm.mach, fm.qbar_Pa,
                    ref.xdot_d, ref.zdot_d, pitch.thetadot_d, pitch.thetaddot_d,
                    m_t, ms_nom.propellant_kg, fm.SM, sm_hat, odiag.u_out, float(odiag.saturated),
                    pitch.theta_raw,
                )
                for name, v in zip(CSV_COLUMNS + EXTRA_COLUMNS, row):
                    log[name].append(v)
                ad = ad_next
                if abs(odiag.e_z) > s.max_downrange_error_m:
                    stable, reason = False, f"downrange error {odiag.e_z:.0f} m exceeds limit"
                    break
            if phys is not None:
                phys["t"].append(t)
                phys["T"].append(cmd.T_N)
                phys["mu"].append(cmd.mu_rad)
            u1, u2 = cmd.u_in
            x_prev = y[0]
            y = model.rk4(t, y, u1, u2, ms_true, dt)
            k += 1
            t = k * dt
            if not s.freeze_mass:
                mdot = mass_flow_rate(cmd.T_N, sample_atmosphere(x_prev)[0], vm)
                ms_nom = update_mass_state(ms_nom, mdot, dt, vm)
                ms_true = plant_mass(ms_nom)
                if ms_nom.burnout:
                    burnout = True
                    break
    except (SingularityError, ThrustEnvelopeError, NumericalDivergence) as exc:
        stable, reason = False, f"{type(exc).__name__}: {exc}"
    except ValueError as exc:  # e.g. the vehicle fell below the atmosphere floor
        stable, reason = False, f"ValueError: {exc}"

    columns = {name: np.asarray(v, dtype=float) for name, v in log.items()}
    if phys is not None:
        phys = {kk: np.asarray(v) for kk, v in phys.items()}
    flight = FlightLog(columns, stable, reason, burnout, t, phys)
    return flight, compute_metrics(flight)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def rms(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sqrt(np.mean(x * x))) if x.size else float("nan")


def _est(true, hat) -> tuple[float, float]:
    err = rms(np.asarray(hat) - np.asarray(true))
    ref = rms(true)
    return err, (100.0 * err / ref if ref > 0 else float("nan"))


def compute_metrics(log: FlightLog) -> RunMetrics:
    """Tracking RMSE, actuation RMS and estimation (%)RMSE over the logged powered phase."""
    if len(log) == 0:
        raise ValueError("empty flight log")
    c = log.columns
    fax = _est(c["fax_true"], c["fax_hat"])
    tau = _est(c["tau_true"], c["tau_hat"])
    faz = _est(c["faz_true"], c["faz_hat"])
    return RunMetrics(
        rmse_x_m=rms(c["e_x"]),
        rmse_theta_deg=math.degrees(rms(c["e_theta"])),
        rmse_z_m=rms(c["e_z"]),
        rms_T_N=rms(c["T"]),
        rms_mu_deg=math.degrees(rms(c["mu"])),
        rmse_fax_N=fax[0], pct_rmse_fax=fax[1],
        rmse_tau_Nm=tau[0], pct_rmse_tau=tau[1],
        rmse_faz_N=faz[0], pct_rmse_faz=faz[1],
        stable=log.stable, burnout=log.burnout, t_end_s=log.t_end, reason=log.reason,
    )


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

DISPERSED = ("m", "j_y", "x_cm", "x_cp", "cd", "cl")


def draw_dispersions(sigma3: dict, n_runs: int, seed: int) -> list[Dispersion]:
    """Unit-mean Gaussian multipliers (sigma = 3-sigma value / 3), truncated at 3 sigma."""
    out = []
    for child in np.random.SeedSequence(seed).spawn(n_runs):
        rng = np.random.default_rng(child)
        mult = {}
        for name in DISPERSED:
            sig = sigma3.get(name, 0.0) / 3.0
            z = rng.standard_normal()
            while abs(z) > 3.0:
                z = rng.standard_normal()
            mult[name] = 1.0 + sig * z if sig > 0 else 1.0
        out.append(Dispersion(**mult, gust_seed=int(rng.integers(2**31 - 1))))
    return out


@dataclass
class CampaignSummary:
    runs: list
    dispersions: list
    mean: dict = field(default_factory=dict)
    std: dict = field(default_factory=dict)

    @property
    def n_runs(self) -> int:
        return len(self.runs)

    @property
    def n_stable(self) -> int:
        return sum(1 for r in self.runs if r.stable)

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["metric", "mean", "std"])
            for name in METRIC_NAMES:
                w.writerow([name, "%.9g" % self.mean[name], "%.9g" % self.std[name]])
            w.writerow(["stable_runs", self.n_stable, ""])
            w.writerow(["n_runs", self.n_runs, ""])

    def runs_to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["run", *DISPERSED, "gust_seed", *METRIC_NAMES, "stable", "reason"])
            for i, (d, r) in enumerate(zip(self.dispersions, self.runs)):
                w.writerow([i, *("%.9g" % getattr(d, p) for p in DISPERSED), d.gust_seed,
                            *("%.9g" % getattr(r, n) for n in METRIC_NAMES), int(r.stable), r.reason])

    def format_table(self) -> str:
        m, s = self.mean, self.std
        lines = [
            f"Monte Carlo campaign: {self.n_stable}/{self.n_runs} stable runs",
            "",
            "Tracking performance and control effort",
            f"{'y':<8}{'Average RMSE':>16}{'STD':>14}",
            f"{'x':<8}{m['rmse_x_m']:>14.4f} m{s['rmse_x_m']:>12.4f} m",
            f"{'theta':<8}{m['rmse_theta_deg']:>12.4f} deg{s['rmse_theta_deg']:>10.4f} deg",
            f"{'z':<8}{m['rmse_z_m']:>14.4f} m{s['rmse_z_m']:>12.4f} m",
            f"{'u':<8}{'Average RMS':>16}{'STD':>14}",
            f"{'T':<8}{m['rms_T_N'] / 1e3:>13.2f} kN{s['rms_T_N'] / 1e3:>11.2f} kN",
            f"{'mu':<8}{m['rms_mu_deg']:>12.3f} deg{s['rms_mu_deg']:>10.3f} deg",
            "",
            "Aerodynamic estimation performance",
            f"{'param':<8}{'Average %RMSE':>16}{'STD':>14}",
            f"{'f_ax':<8}{m['pct_rmse_fax']:>14.1f} %{s['pct_rmse_fax']:>12.1f} %",
            f"{'tau_a':<8}{m['pct_rmse_tau']:>14.1f} %{s['pct_rmse_tau']:>12.1f} %",
            f"{'f_az':<8}{m['pct_rmse_faz']:>14.1f} %{s['pct_rmse_faz']:>12.1f} %",
        ]
        return "\n".join(lines)


def _mc_job(args):
    cfg, disp, aero, gains = args
    return run_flight(cfg, disp, aero, gains)[1]


def summarize(runs, dispersions) -> CampaignSummary:
    summary = CampaignSummary(list(runs), list(dispersions))
    for name in METRIC_NAMES:
        vals = [getattr(r, name) for r in runs if r.stable]
        vals = [v for v in vals if math.isfinite(v)]
        summary.mean[name] = statistics.fmean(vals) if vals else float("nan")
        summary.std[name] = statistics.stdev(vals) if len(vals) > 1 else 0.0
    return summary


def run_monte_carlo(base: SimConfig, n_runs: int | None = None, sigma3: dict | None = None,
                    seed: int | None = None, workers: int | None = None,
                    progress=None) -> CampaignSummary:
    """Dispersed-parameter campaign; results are merged in run-index order.

    Statistics are taken over stable runs; unstable runs are counted and kept
    in ``runs`` with their failure reason.
    """
    mc = base.mc
    n_runs = mc.n_runs if n_runs is None else n_runs
    sigma3 = mc.sigma3 if sigma3 is None else sigma3
    seed = mc.seed if seed is None else seed
    workers = mc.workers if workers is None else workers
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    dispersions = draw_dispersions(sigma3, n_runs, seed)
    aero = build_aero(base)
    gains = build_outer_gains(base)
    jobs = [(base, d, aero, gains) for d in dispersions]
    runs = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, r in enumerate(pool.map(_mc_job, jobs)):
                runs.append(r)
                if progress:
                    progress(i, r)
    else:
        for i, job in enumerate(jobs):
            r = _mc_job(job)
            runs.append(r)
            if progress:
                progress(i, r)
    return summarize(runs, dispersions)


def metrics_dict(m: RunMetrics) -> dict:
    return asdict(m)
