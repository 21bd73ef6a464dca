"""Lumped-element model of a card antenna loaded by its chip.

Topology seen by an EMF induced in the loop::

    R_ant -- L -- [gap] --+-- R_chip --+
                          |-- C_chip --|
                          |-- R_shunt -|   (optional)

``[gap]`` is the optional series capacitance left by cut windings or an open
switch, in series with the bridge element ``R_series_extra`` (shunted by
``C_bridge`` when a finger bridges the pads).
"""

from __future__ import annotations

import dataclasses
import io
import math
from dataclasses import dataclass

import numpy as np

from .geometry import AntennaGeometry, InvalidGeometryError, segment_decomposition
from .params import DEFAULTS, F_OPERATING, ModelParams

MU0 = 4e-7 * math.pi


class UnsupportedTopologyError(ValueError):
    pass


@dataclass(frozen=True)
class EquivalentCircuit:
    L: float
    C_chip: float
    R_ant: float = DEFAULTS.r_ant
    R_chip: float = DEFAULTS.r_chip
    C_cut_total: float | None = None
    R_series_extra: float = 0.0
    C_bridge: float | None = None
    R_shunt: float | None = None
    # antenna metadata: winding count (validates cuts) and summed turn area
    turns: int | None = None
    flux_area: float | None = None

    def __post_init__(self):
        if not (self.L > 0 and self.C_chip > 0 and self.R_chip > 0):
            raise ValueError("L, C_chip and R_chip must be positive")
        if self.R_ant < 0 or self.R_series_extra < 0:
            raise ValueError("resistances must be non-negative")
        for name in ("C_cut_total", "C_bridge", "R_shunt"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be positive when present")
        if self.C_bridge is not None and self.R_series_extra == 0:
            raise ValueError("C_bridge needs a bridge resistance to sit across")

    def replace(self, **changes) -> "EquivalentCircuit":
        return dataclasses.replace(self, **changes)

    def intact(self) -> "EquivalentCircuit":
        """Same antenna and chip with every intervention removed."""
        return self.replace(C_cut_total=None, R_series_extra=0.0, C_bridge=None, R_shunt=None)

    @property
    def series_capacitance(self) -> float:
        """Effective series capacitance seen by the loop inductance."""
        inv = 1 / self.C_chip
        if self.C_cut_total is not None:
            inv += 1 / self.C_cut_total
        if self.C_bridge is not None:
            inv += 1 / self.C_bridge
        return 1 / inv


@dataclass(frozen=True)
class ProbeSetup:
    L_probe: float = DEFAULTS.l_probe
    k: float = DEFAULTS.k_probe
    Z0: float = DEFAULTS.z0

    def __post_init__(self):
        if not 0 <= self.k < 1:
            raise ValueError("coupling coefficient must lie in [0, 1)")
        if not (self.Z0 > 0 and self.L_probe > 0):
            raise ValueError("Z0 and L_probe must be positive")

    @classmethod
    def from_params(cls, p: ModelParams) -> "ProbeSetup":
        return cls(p.l_probe, p.k_probe, p.z0)


@dataclass(frozen=True, eq=False)
class FrequencySweep:
    freqs: np.ndarray
    s11: np.ndarray
    probe: ProbeSetup

    @property
    def points(self) -> list[tuple[float, complex]]:
        return list(zip(self.freqs.tolist(), self.s11.tolist()))

    @property
    def f_start(self) -> float:
        return float(self.freqs[0])

    @property
    def f_stop(self) -> float:
        return float(self.freqs[-1])

    @property
    def n_points(self) -> int:
        return len(self.freqs)

    def baseline(self) -> np.ndarray:
        """S11 of the same probe with the card removed."""
        return bare_probe_s11(self.probe, self.freqs)

    def deviation(self) -> np.ndarray:
        return np.abs(self.s11 - self.baseline())

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("freq_hz,s11_re,s11_im,s11_mag\n")
        for f, s in zip(self.freqs, self.s11):
            buf.write(f"{f:.8e},{s.real:.8e},{s.imag:.8e},{abs(s):.8e}\n")
        return buf.getvalue()


# -- inductance -------------------------------------------------------------

def _self_inductance(length: float, radius: float) -> float:
    # straight round wire, uniform current
    return MU0 * length / (2 * math.pi) * (math.log(2 * length / radius) - 0.75)


def _parallel_mutual(a0: float, a1: float, b0: float, b1: float, d: float) -> float:
    """Mutual inductance of two parallel filaments at spacing ``d``.

    Filament A spans [a0, a1] and B spans [b0, b1] along the shared axis.
    """
    def F(z):
        return z * math.asinh(z / d) - math.sqrt(z * z + d * d)

    return MU0 / (4 * math.pi) * (F(a1 - b0) - F(a1 - b1) - F(a0 - b0) + F(a0 - b1))


def loop_inductance(g: AntennaGeometry) -> float:
    """Greenhouse sum of segment self-inductances and signed parallel mutuals."""
    if not isinstance(g, AntennaGeometry):
        raise InvalidGeometryError(f"expected AntennaGeometry, got {type(g).__name__}")
    segs = segment_decomposition(g)
    total = sum(_self_inductance(s.length, g.wire_radius) for s in segs)
    for i, si in enumerate(segs):
        ui = si.vector / si.length
        for sj in segs[i + 1:]:
            uj = sj.vector / sj.length
            cos = float(ui @ uj)
            if abs(cos) < 0.5:
                continue  # orthogonal segments do not couple
            # coordinates along si's axis and perpendicular spacing
            origin = np.asarray(si.start)
            b0 = float((np.asarray(sj.start) - origin) @ ui)
            b1 = float((np.asarray(sj.end) - origin) @ ui)
            perp = (np.asarray(sj.start) - origin) - b0 * ui
            d = float(np.hypot(*perp))
            m = _parallel_mutual(0.0, si.length, min(b0, b1), max(b0, b1), d)
            total += 2 * math.copysign(m, cos)
    if total <= 0:
        raise InvalidGeometryError("geometry yields non-positive inductance")
    return total


# -- resonance and calibration ----------------------------------------------

def resonant_frequency_closed_form(c: EquivalentCircuit) -> float:
    if c.R_shunt is not None:
        raise UnsupportedTopologyError(
            "shunted antenna has no closed-form resonance; use a sweep")
    return 1 / (2 * math.pi * math.sqrt(c.L * c.series_capacitance))


def calibrate_chip_capacitance(L: float, f_measured: float) -> float:
    if not (L > 0 and f_measured > 0):
        raise ValueError("L and f_measured must be positive")
    return 1 / ((2 * math.pi * f_measured) ** 2 * L)


def calibrate_cut_capacitance(L: float, C_chip: float, f_one_cut: float) -> float:
    """Per-cut gap capacitance that puts the one-cut resonance at ``f_one_cut``."""
    c_eff = calibrate_chip_capacitance(L, f_one_cut)
    if c_eff >= C_chip:
        raise ValueError("a series gap can only raise the resonant frequency")
    return 1 / (1 / c_eff - 1 / C_chip)


def circuit_from_geometry(g: AntennaGeometry, f0: float,
                          params: ModelParams = DEFAULTS) -> EquivalentCircuit:
    """Intact circuit for ``g`` with the chip capacitance calibrated to ``f0``."""
    L = loop_inductance(g)
    return EquivalentCircuit(L=L, C_chip=calibrate_chip_capacitance(L, f0),
                             R_ant=params.r_ant, R_chip=params.r_chip, turns=g.turns,
                             flux_area=g.turn_area_sum)


# -- impedances -------------------------------------------------------------

def load_impedance(c: EquivalentCircuit, f):
    """Impedance across the chip's antenna terminals."""
    w = 2 * np.pi * np.asarray(f, dtype=float)
    y = 1 / c.R_chip + 1j * w * c.C_chip
    if c.R_shunt is not None:
        y = y + 1 / c.R_shunt
    return 1 / y


def gap_impedance(c: EquivalentCircuit, f):
    w = 2 * np.pi * np.asarray(f, dtype=float)
    z = np.zeros_like(w, dtype=complex)
    if c.C_cut_total is not None:
        z = z + 1 / (1j * w * c.C_cut_total)
    if c.C_bridge is not None:
        z = z + 1 / (1 / c.R_series_extra + 1j * w * c.C_bridge)
    else:
        z = z + c.R_series_extra
    return z


def input_impedance(c: EquivalentCircuit, f):
    """Total loop impedance seen by an EMF induced in series with the antenna."""
    w = 2 * np.pi * np.asarray(f, dtype=float)
    return c.R_ant + 1j * w * c.L + gap_impedance(c, f) + load_impedance(c, f)


# -- probe-coupled sweep ----------------------------------------------------

def bare_probe_s11(p: ProbeSetup, f):
    z = 1j * 2 * np.pi * np.asarray(f, dtype=float) * p.L_probe
    return (z - p.Z0) / (z + p.Z0)


def s11(p: ProbeSetup, c: EquivalentCircuit, f):
    f = np.asarray(f, dtype=float)
    w = 2 * np.pi * f
    M = p.k * math.sqrt(p.L_probe * c.L)
    z_in = 1j * w * p.L_probe + (w * M) ** 2 / input_impedance(c, f)
    return (z_in - p.Z0) / (z_in + p.Z0)


def s11_sweep(p: ProbeSetup, c: EquivalentCircuit, f_start: float = DEFAULTS.f_start,
              f_stop: float = DEFAULTS.f_stop, n_points: int = DEFAULTS.n_points) -> FrequencySweep:
    if not (0 < f_start < f_stop) or int(n_points) != n_points or n_points < 2:
        raise ValueError("sweep needs 0 < f_start < f_stop and n_points >= 2")
    freqs = np.linspace(f_start, f_stop, int(n_points))
    return FrequencySweep(freqs, s11(p, c, freqs), p)


def detect_resonance(s: FrequencySweep, noise_floor: float = DEFAULTS.noise_floor) -> float | None:
    """Frequency of the largest deviation from the bare-probe trace, if any.

    Returns ``None`` when the deviation never exceeds ``noise_floor``.
    """
    if s.n_points == 0:
        raise ValueError("empty sweep")
    if not 0 < noise_floor < 1:
        raise ValueError("noise_floor must lie in (0, 1)")
    dev = s.deviation()
    i = int(np.argmax(dev))
    if dev[i] <= noise_floor:
        return None
    return float(s.freqs[i])


# -- coupled resonators -----------------------------------------------------

def coupled_resonances(c1: EquivalentCircuit, c2: EquivalentCircuit, k: float) -> tuple[float, float]:
    """Normal-mode frequencies of two magnetically coupled LC resonators.

    With x = w^2 the loop equations give
    (1 - k^2) x^2 - (w1^2 + w2^2) x + w1^2 w2^2 = 0.
    """
    if not 0 <= k < 1:
        raise ValueError("coupling must lie in [0, 1)")
    for c in (c1, c2):
        if c.R_shunt is not None or c.C_cut_total is not None:
            raise UnsupportedTopologyError("coupled resonances need uncut, unshunted circuits")
    w1 = 1 / (c1.L * c1.series_capacitance)
    w2 = 1 / (c2.L * c2.series_capacitance)
    a = 1 - k * k
    b = w1 + w2
    disc = math.sqrt((w1 - w2) ** 2 + 4 * k * k * w1 * w2)
    # numerically stable pair of roots
    x_hi = (b + disc) / (2 * a)
    x_lo = w1 * w2 / (a * x_hi)
    to_hz = lambda x: math.sqrt(x) / (2 * math.pi)  # noqa: E731
    return to_hz(x_lo), to_hz(x_hi)


# -- power transfer ---------------------------------------------------------

def _chip_power(c: EquivalentCircuit, f: float) -> float:
    # unit EMF in series with the loop
    v_chip = load_impedance(c, f) / input_impedance(c, f)
    return float(abs(v_chip) ** 2 / c.R_chip)


def delivered_power_ratio(c: EquivalentCircuit, f_op: float = F_OPERATING) -> float:
    """Chip power relative to the intact antenna retuned to resonate at ``f_op``."""
    if not f_op > 0:
        raise ValueError("f_op must be positive")
    ref = c.intact().replace(C_chip=calibrate_chip_capacitance(c.L, f_op))
    return _chip_power(c, f_op) / _chip_power(ref, f_op)
