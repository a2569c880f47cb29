"""
Reference vehicle and its mass, centre-of-mass and inertia (MCI) evolution.

Positions along the longitudinal axis are measured from the nose tip, positive
towards the base. The engine gimbals at the base, so the control moment arm is
``l = gimbal_station - x_cm``.

Propellant is modelled as two uniform cylinders (oxidizer above fuel) whose
contents thin out evenly along their length as propellant is consumed; the
tank centroids therefore stay fixed and only their masses change.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

G0 = 9.80665  # m/s^2


@dataclass(frozen=True)
class VehicleModel:
    length_m: float = 8.0
    max_diameter_m: float = 0.5
    liftoff_mass_kg: float = 1250.0
    dry_mass_kg: float = 600.0
    dry_inertia_kgm2: float = 3100.0
    dry_xcm_m: float = 4.18
    propellant_mass_kg: float = 650.0
    isp_vac_s: float = 300.0
    ox_fuel_ratio: float = 2.5
    lox_density_kgpm3: float = 1141.0
    rp1_density_kgpm3: float = 800.0
    ox_tank_volume_m3: float = 0.41
    fuel_tank_volume_m3: float = 0.23
    nozzle_exit_area_m2: float = 0.02
    tank_radius_m: float = 0.24
    ox_tank_top_m: float = 1.9
    fuel_tank_top_m: float = 4.3
    gimbal_station_m: float | None = None  # None -> vehicle base
    ref_area_m2: float | None = None  # None -> fuselage cross-section
    g0: float = G0

    def __post_init__(self):
        if self.gimbal_station_m is None:
            object.__setattr__(self, "gimbal_station_m", self.length_m)
        if self.ref_area_m2 is None:
            object.__setattr__(self, "ref_area_m2", math.pi * self.max_diameter_m**2 / 4.0)
        positive = (
            "length_m", "max_diameter_m", "liftoff_mass_kg", "dry_mass_kg",
            "dry_inertia_kgm2", "propellant_mass_kg", "isp_vac_s", "ox_fuel_ratio",
            "ox_tank_volume_m3", "fuel_tank_volume_m3", "nozzle_exit_area_m2",
            "tank_radius_m", "ref_area_m2",
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"vehicle.{name} must be > 0, got {getattr(self, name)}")
        if not math.isclose(self.dry_mass_kg + self.propellant_mass_kg, self.liftoff_mass_kg,
                            rel_tol=1e-9):
            raise ValueError("dry_mass + propellant_mass must equal liftoff_mass")
        if not 0.0 < self.dry_xcm_m < self.length_m:
            raise ValueError("dry_xcm must lie inside the vehicle")

    @property
    def ox_tank_length_m(self) -> float:
        return self.ox_tank_volume_m3 / (math.pi * self.tank_radius_m**2)

    @property
    def fuel_tank_length_m(self) -> float:
        return self.fuel_tank_volume_m3 / (math.pi * self.tank_radius_m**2)

    @property
    def ox_fraction(self) -> float:
        return self.ox_fuel_ratio / (1.0 + self.ox_fuel_ratio)


@dataclass(frozen=True)
class MassState:
    m_kg: float
    j_y_kgm2: float
    x_cm_m: float
    l_m: float
    propellant_kg: float
    burnout: bool = False


def mass_flow_rate(thrust: float, pressure: float, vm: VehicleModel) -> float:
    """Propellant depletion rate (kg/s, negative) including the back-pressure term."""
    if thrust < 0:
        raise ValueError("thrust must be non-negative")
    c = vm.isp_vac_s * vm.g0
    return -thrust / c - pressure * vm.nozzle_exit_area_m2 / c


def mass_properties(propellant_kg: float, vm: VehicleModel) -> MassState:
    """Composite MCI properties with ``propellant_kg`` left in the tanks."""
    prop = min(max(propellant_kg, 0.0), vm.propellant_mass_kg)
    r2 = vm.tank_radius_m**2
    parts = [(vm.dry_mass_kg, vm.dry_xcm_m, vm.dry_inertia_kgm2)]
    if prop > 0.0:
        for mass, top, length in (
            (prop * vm.ox_fraction, vm.ox_tank_top_m, vm.ox_tank_length_m),
            (prop * (1.0 - vm.ox_fraction), vm.fuel_tank_top_m, vm.fuel_tank_length_m),
        ):
            # solid cylinder about its own transverse centroidal axis
            parts.append((mass, top + 0.5 * length, mass * (3.0 * r2 + length**2) / 12.0))
    m = sum(p[0] for p in parts)
    x_cm = sum(p[0] * p[1] for p in parts) / m
    j_y = sum(p[2] + p[0] * (p[1] - x_cm) ** 2 for p in parts)
    return MassState(
        m_kg=m,
        j_y_kgm2=j_y,
        x_cm_m=x_cm,
        l_m=vm.gimbal_station_m - x_cm,
        propellant_kg=prop,
        burnout=prop <= 0.0,
    )


def initial_mass_state(vm: VehicleModel) -> MassState:
    return mass_properties(vm.propellant_mass_kg, vm)


def update_mass_state(ms: MassState, mdot: float, dt: float, vm: VehicleModel) -> MassState:
    """Advance the propellant load by one explicit-Euler step of ``mdot``."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if mdot == 0.0:
        return ms
    return mass_properties(ms.propellant_kg - abs(mdot) * dt, vm)


def scale_mass_state(ms: MassState, m: float = 1.0, j_y: float = 1.0, x_cm: float = 1.0,
                     gimbal_station_m: float | None = None) -> MassState:
    """Apply multiplicative dispersions to a mass state (the moment arm follows x_cm)."""
    if m == 1.0 and j_y == 1.0 and x_cm == 1.0:
        return ms
    xc = ms.x_cm_m * x_cm
    gimbal = ms.x_cm_m + ms.l_m if gimbal_station_m is None else gimbal_station_m
    return replace(ms, m_kg=ms.m_kg * m, j_y_kgm2=ms.j_y_kgm2 * j_y, x_cm_m=xc, l_m=gimbal - xc)
