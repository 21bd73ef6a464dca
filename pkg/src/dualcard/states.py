"""Physical interventions on a card antenna and the resulting readability."""

from __future__ import annotations

import dataclasses
import enum
import io
import math
from dataclasses import dataclass

from .circuit import (
    EquivalentCircuit,
    ProbeSetup,
    calibrate_chip_capacitance,
    coupled_resonances,
    delivered_power_ratio,
    detect_resonance,
    loop_inductance,
    s11_sweep,
)
from .geometry import AntennaGeometry
from .params import DEFAULTS, F_OPERATING, ModelParams


class InvalidStateError(ValueError):
    pass


class SeriesSwitch(str, enum.Enum):
    ABSENT = "absent"
    OPEN = "open"
    CLOSED_METAL = "closed_metal"
    FINGER_BRIDGE = "finger_bridge"


class ShuntSwitch(str, enum.Enum):
    ABSENT = "absent"
    OPEN = "open"
    CLOSED = "closed"


class Verdict(str, enum.Enum):
    READABLE = "readable"
    UNREADABLE = "unreadable"


@dataclass(frozen=True)
class PhysicalState:
    cuts: int = 0
    series_switch: SeriesSwitch = SeriesSwitch.ABSENT
    shunt_switch: ShuntSwitch = ShuntSwitch.ABSENT
    module_antenna: bool = False
    hardware_pin_enabled: bool = True

    def __post_init__(self):
        if isinstance(self.cuts, bool) or int(self.cuts) != self.cuts or self.cuts < 0:
            raise InvalidStateError(f"cuts must be a non-negative integer, got {self.cuts!r}")
        # accept plain strings from config files
        object.__setattr__(self, "series_switch", SeriesSwitch(self.series_switch))
        object.__setattr__(self, "shunt_switch", ShuntSwitch(self.shunt_switch))

    def replace(self, **changes) -> "PhysicalState":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "cuts": self.cuts,
            "series_switch": self.series_switch.value,
            "shunt_switch": self.shunt_switch.value,
            "module_antenna": self.module_antenna,
            "hardware_pin_enabled": self.hardware_pin_enabled,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PhysicalState":
        fields = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - fields
        if unknown:
            raise InvalidStateError(f"unknown physical-state field(s): {', '.join(sorted(unknown))}")
        try:
            return cls(**d)
        except ValueError as exc:
            raise InvalidStateError(str(exc)) from exc


INTACT = PhysicalState()


@dataclass(frozen=True)
class ChipProfile:
    name: str
    min_power_ratio: float
    dual_interface: bool

    def __post_init__(self):
        if not 0 < self.min_power_ratio <= 1:
            raise ValueError("min_power_ratio must lie in (0, 1]")


@dataclass(frozen=True)
class ReaderClass:
    name: str
    min_power_ratio: float
    f_op: float = F_OPERATING
    # reader loop sized to the chip module rather than the card outline
    module_matched: bool = False


# Calibrated so the prototype outcomes come out right; not physics.
CHIP_PROFILES = {
    "mifare_classic": ChipProfile("mifare_classic", 0.01, dual_interface=False),
    "dual_interface": ChipProfile("dual_interface", 0.2, dual_interface=True),
}

READER_CLASSES = {
    "standard_reader": ReaderClass("standard_reader", 0.05),
    "smartphone": ReaderClass("smartphone", 0.05),
    "special_hardware": ReaderClass("special_hardware", 0.001, module_matched=True),
}

READER_ALIASES = {"standard": "standard_reader", "phone": "smartphone", "special": "special_hardware"}


def reader_class(name: str) -> ReaderClass:
    return READER_CLASSES[READER_ALIASES.get(name, name)]


def _series(*caps: float) -> float:
    return 1 / sum(1 / c for c in caps)


def apply_state(c: EquivalentCircuit, s: PhysicalState,
                params: ModelParams = DEFAULTS) -> EquivalentCircuit:
    """Fold a physical state into the equivalent circuit.

    While at least one winding stays intact, each severed winding closes
    capacitively through its neighbours (``c_cut`` per cut, in series). Once
    every winding is severed only the slit itself (``c_slit``) remains.
    """
    if c.turns is not None and s.cuts > c.turns:
        raise InvalidStateError(f"{s.cuts} cuts on a {c.turns}-turn antenna")

    gap_caps = []
    if s.cuts:
        if c.turns is not None and s.cuts == c.turns:
            gap_caps.append(params.c_slit)
        else:
            gap_caps.append(params.c_cut / s.cuts)

    changes = {}
    sw = s.series_switch
    if sw is SeriesSwitch.OPEN:
        gap_caps.append(params.c_switch_gap)
    elif sw is SeriesSwitch.CLOSED_METAL:
        changes["R_series_extra"] = c.R_series_extra + params.r_metal_bridge
    elif sw is SeriesSwitch.FINGER_BRIDGE:
        changes["R_series_extra"] = c.R_series_extra + params.r_finger
        changes["C_bridge"] = params.c_finger

    if gap_caps:
        if c.C_cut_total is not None:
            gap_caps.append(c.C_cut_total)
        changes["C_cut_total"] = _series(*gap_caps)
    if s.shunt_switch is ShuntSwitch.CLOSED:
        changes["R_shunt"] = params.r_shunt

    if not changes:
        return c
    return c.replace(**changes)


def current_path_exists(c: EquivalentCircuit, s: PhysicalState) -> bool:
    """False once every winding of the card antenna is severed."""
    return not (c.turns is not None and s.cuts >= c.turns)


def module_circuit(params: ModelParams = DEFAULTS) -> tuple[AntennaGeometry, EquivalentCircuit]:
    g = AntennaGeometry(params.module_width, params.module_height, params.module_turns,
                        params.module_pitch, params.module_wire_radius)
    L = loop_inductance(g)
    c = EquivalentCircuit(L=L, C_chip=calibrate_chip_capacitance(L, params.module_f0),
                          R_ant=params.r_ant, R_chip=params.r_chip, turns=g.turns)
    return g, c


def module_power_ratio(c: EquivalentCircuit, s: PhysicalState, f_op: float = F_OPERATING,
                       params: ModelParams = DEFAULTS, module_matched: bool = False) -> float:
    """Power reaching the chip through its own module coil.

    The booster antenna in its present state pulls the module resonance to the
    nearest coupled normal mode; the module is evaluated at that resonance.
    A card-sized reader loop couples to the module in proportion to its flux
    area relative to the card antenna, so its EMF is scaled by that ratio. A
    module-matched reader loop sits on the module and suffers no such loss.
    """
    g_mod, mod = module_circuit(params)
    booster = apply_state(c, s.replace(module_antenna=False), params)
    booster_lc = EquivalentCircuit(L=booster.L, C_chip=booster.series_capacitance,
                                   R_ant=booster.R_ant, R_chip=booster.R_chip)
    f_mod = 1 / (2 * math.pi * math.sqrt(mod.L * mod.C_chip))
    modes = coupled_resonances(booster_lc, mod, params.k_module)
    f_eff = min(modes, key=lambda f: abs(f - f_mod))
    tuned = mod.replace(C_chip=calibrate_chip_capacitance(mod.L, f_eff))
    rho = delivered_power_ratio(tuned, f_op)
    if module_matched:
        return rho
    flux_ratio = g_mod.turn_area_sum / c.flux_area
    return flux_ratio ** 2 * rho


def power_ratio(c: EquivalentCircuit, s: PhysicalState, f_op: float = F_OPERATING,
                params: ModelParams = DEFAULTS, module_matched: bool = False) -> float:
    """Best available chip power ratio for the given state."""
    if c.turns is not None and s.cuts > c.turns:
        raise InvalidStateError(f"{s.cuts} cuts on a {c.turns}-turn antenna")
    rho = delivered_power_ratio(apply_state(c, s, params), f_op) if current_path_exists(c, s) else 0.0
    if s.module_antenna:
        if c.flux_area is None:
            raise InvalidStateError("coil-on-module evaluation needs the antenna's flux area")
        rho = max(rho, module_power_ratio(c, s, f_op, params, module_matched))
    return rho


def readability(c: EquivalentCircuit, s: PhysicalState, chip: ChipProfile, reader: ReaderClass,
                params: ModelParams = DEFAULTS) -> Verdict:
    """Whether the reader can power and talk to the chip over the air.

    With ``s.module_antenna`` set the chip may also be fed through its own
    module coil, which survives cuts to the card antenna. Whether the chip's
    contactless logic is enabled (hardware pin) is a card-runtime concern.
    """
    threshold = max(chip.min_power_ratio, reader.min_power_ratio)
    rho = power_ratio(c, s, reader.f_op, params, reader.module_matched)
    return Verdict.READABLE if rho >= threshold else Verdict.UNREADABLE


def cut_sweeps(c: EquivalentCircuit, geometry_turns: int, probe: ProbeSetup | None = None,
               params: ModelParams = DEFAULTS, base: PhysicalState = INTACT):
    """Probe sweeps after cutting 0, 1, ..., all windings."""
    if geometry_turns < 1:
        raise InvalidStateError("geometry_turns must be at least 1")
    probe = probe or ProbeSetup.from_params(params)
    c = c.replace(turns=geometry_turns)
    return [s11_sweep(probe, apply_state(c, base.replace(cuts=n), params),
                      params.f_start, params.f_stop, params.n_points)
            for n in range(geometry_turns + 1)]


def cut_progression(c: EquivalentCircuit, geometry_turns: int, probe: ProbeSetup | None = None,
                    params: ModelParams = DEFAULTS, base: PhysicalState = INTACT
                    ) -> list[tuple[int, float | None]]:
    """Detected resonance after cutting 0, 1, ..., all windings."""
    sweeps = cut_sweeps(c, geometry_turns, probe, params, base)
    return [(n, detect_resonance(sw, params.noise_floor)) for n, sw in enumerate(sweeps)]


def cut_progression_csv(rows: list[tuple[int, float | None]]) -> str:
    buf = io.StringIO()
    buf.write("cuts,f_detected_hz\n")
    for n, f in rows:
        buf.write(f"{n},{'' if f is None else format(f, '.8e')}\n")
    return buf.getvalue()


# -- reference prototypes ------------------------------------------------------

@dataclass(frozen=True)
class PrototypeCard:
    id: str
    description: str
    geometry: AntennaGeometry
    nominal_f0: float
    chip: str


PROTOTYPES = {
    # chip and antenna recovered from a MIFARE Classic card: 5 windings, ~77 x 47 mm
    "proto-mifare": PrototypeCard("proto-mifare", "cardboard prototype with MIFARE Classic chip",
                                  AntennaGeometry(77e-3, 47e-3, 5), 17.5e6, "mifare_classic"),
    # dual-interface chip with an antenna shaped like the donor payment card
    "proto-dual": PrototypeCard("proto-dual", "cardboard prototype with dual-interface chip",
                                AntennaGeometry(74e-3, 22e-3, 4), 14.49e6, "dual_interface"),
}
