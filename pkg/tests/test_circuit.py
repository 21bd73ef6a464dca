import math
import random

import numpy as np
import oracles
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualcard.circuit import (
    EquivalentCircuit,
    FrequencySweep,
    ProbeSetup,
    UnsupportedTopologyError,
    calibrate_chip_capacitance,
    calibrate_cut_capacitance,
    circuit_from_geometry,
    coupled_resonances,
    delivered_power_ratio,
    detect_resonance,
    input_impedance,
    loop_inductance,
    resonant_frequency_closed_form,
    s11,
    s11_sweep,
)
from dualcard.geometry import AntennaGeometry, lookup
from dualcard.params import F_OPERATING

# frozen oracle values (uH), computed once with the Neumann integral in oracles.py
NEUMANN_UH = {
    (80, 34, 1): 0.28447,
    (80, 34, 4): 2.88811,
    (74, 22, 4): 2.21111,
    (80, 49, 5): 5.04566,
}


@pytest.mark.parametrize("key, expected", sorted(NEUMANN_UH.items()))
def test_inductance_against_frozen_oracle(key, expected):
    w, h, n = key
    assert loop_inductance(AntennaGeometry.from_mm(w, h, n)) * 1e6 == pytest.approx(expected, rel=2e-3)


def test_frozen_oracle_values_still_reproduce():
    g = AntennaGeometry.from_mm(80, 34, 1)
    assert oracles.neumann_inductance(g.width, g.height, 1, g.pitch, g.wire_radius) * 1e6 == \
        pytest.approx(NEUMANN_UH[(80, 34, 1)], rel=1e-4)


def test_inductance_grows_with_turns_and_area():
    small = loop_inductance(AntennaGeometry.from_mm(60, 30, 3))
    assert loop_inductance(AntennaGeometry.from_mm(60, 30, 4)) > small
    assert loop_inductance(AntennaGeometry.from_mm(80, 40, 3)) > small


def test_calibration_round_trip():
    L = 2.5e-6
    for f in (13.56e6, 17.98e6, 76.49e6):
        c = EquivalentCircuit(L=L, C_chip=calibrate_chip_capacitance(L, f))
        assert resonant_frequency_closed_form(c) == pytest.approx(f, rel=1e-12)


@given(st.floats(1e-7, 1e-5), st.floats(1e6, 3e8))
def test_calibration_reciprocity(L, f):
    C = calibrate_chip_capacitance(L, f)
    assert calibrate_chip_capacitance(L, resonant_frequency_closed_form(EquivalentCircuit(L=L, C_chip=C))) == \
        pytest.approx(C, rel=1e-9)


def test_calibration_rejects_non_positive():
    with pytest.raises(ValueError):
        calibrate_chip_capacitance(0, 1e6)
    with pytest.raises(ValueError):
        calibrate_chip_capacitance(1e-6, -1)


def test_cut_calibration_hits_target():
    c = EquivalentCircuit(L=2.2e-6, C_chip=calibrate_chip_capacitance(2.2e-6, 15e6))
    c_cut = calibrate_cut_capacitance(c.L, c.C_chip, 71e6)
    assert resonant_frequency_closed_form(c.replace(C_cut_total=c_cut)) == pytest.approx(71e6, rel=1e-12)
    with pytest.raises(ValueError):
        calibrate_cut_capacitance(c.L, c.C_chip, 10e6)


def test_equal_gap_sqrt_n_law():
    L = 2.2e-6
    c = EquivalentCircuit(L=L, C_chip=1e-9)  # C_cut << C_chip
    f1 = resonant_frequency_closed_form(c.replace(C_cut_total=1e-13))
    for n in (2, 3, 4):
        fn = resonant_frequency_closed_form(c.replace(C_cut_total=1e-13 / n))
        assert fn / f1 == pytest.approx(math.sqrt(n), rel=0.01)


def test_shunted_circuit_has_no_closed_form():
    with pytest.raises(UnsupportedTopologyError):
        resonant_frequency_closed_form(EquivalentCircuit(L=1e-6, C_chip=1e-11, R_shunt=1e-3))


@pytest.mark.parametrize("kw", [
    dict(L=0, C_chip=1e-11),
    dict(L=1e-6, C_chip=-1e-11),
    dict(L=1e-6, C_chip=1e-11, R_ant=-1),
    dict(L=1e-6, C_chip=1e-11, C_cut_total=0),
    dict(L=1e-6, C_chip=1e-11, C_bridge=1e-12),
])
def test_circuit_validation(kw):
    with pytest.raises(ValueError):
        EquivalentCircuit(**kw)


def _random_circuit(rng):
    kw = dict(L=10 ** rng.uniform(-7, -5), C_chip=10 ** rng.uniform(-12, -10),
              R_ant=rng.uniform(0, 5), R_chip=10 ** rng.uniform(2, 4))
    if rng.random() < 0.5:
        kw["C_cut_total"] = 10 ** rng.uniform(-13, -11)
    if rng.random() < 0.5:
        kw["R_series_extra"] = 10 ** rng.uniform(-2, 5)
        if rng.random() < 0.5:
            kw["C_bridge"] = 10 ** rng.uniform(-12, -10)
    if rng.random() < 0.3:
        kw["R_shunt"] = 10 ** rng.uniform(-3, 2)
    return EquivalentCircuit(**kw)


def test_impedance_matches_element_oracle():
    rng = random.Random(1)
    for _ in range(30):
        c = _random_circuit(rng)
        for f in (5e6, 13.56e6, 90e6):
            ref = oracles.loop_impedance(f, c.L, c.C_chip, c.R_ant, c.R_chip, c.C_cut_total,
                                         c.R_series_extra, c.C_bridge, c.R_shunt)
            assert complex(input_impedance(c, f)) == pytest.approx(ref, rel=1e-10)


def test_s11_matches_mesh_oracle():
    rng = random.Random(2)
    for _ in range(30):
        c = _random_circuit(rng)
        p = ProbeSetup(10 ** rng.uniform(-7, -5), rng.uniform(0, 0.9), 50.0)
        for f in (5e6, 13.56e6, 90e6):
            z = oracles.loop_impedance(f, c.L, c.C_chip, c.R_ant, c.R_chip, c.C_cut_total,
                                       c.R_series_extra, c.C_bridge, c.R_shunt)
            ref = oracles.probe_s11(f, p.L_probe, p.k, p.Z0, c.L, z)
            assert complex(s11(p, c, f)) == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_sweep_shape_and_csv():
    c = EquivalentCircuit(L=2.2e-6, C_chip=calibrate_chip_capacitance(2.2e-6, 15e6))
    s = s11_sweep(ProbeSetup(), c, 10e6, 20e6, 11)
    assert s.n_points == 11 and s.f_start == 10e6 and s.f_stop == 20e6
    assert len(s.points) == 11
    lines = s.to_csv().splitlines()
    assert lines[0] == "freq_hz,s11_re,s11_im,s11_mag"
    assert len(lines) == 12


@pytest.mark.parametrize("args", [(20e6, 10e6, 11), (10e6, 20e6, 1), (0, 20e6, 11)])
def test_sweep_rejects_bad_range(args):
    c = EquivalentCircuit(L=1e-6, C_chip=1e-11)
    with pytest.raises(ValueError):
        s11_sweep(ProbeSetup(), c, *args)


def test_detect_resonance_finds_calibrated_peak():
    e = lookup("card-a")
    c = circuit_from_geometry(e.geometry, e.measured_f0)
    f = detect_resonance(s11_sweep(ProbeSetup(), c))
    assert f == pytest.approx(e.measured_f0, rel=0.02)


def test_detect_resonance_none_without_coupling():
    c = EquivalentCircuit(L=1e-6, C_chip=1e-10)
    assert detect_resonance(s11_sweep(ProbeSetup(k=0.0), c)) is None


def test_detect_resonance_validates_floor():
    sweep = s11_sweep(ProbeSetup(), EquivalentCircuit(L=1e-6, C_chip=1e-10))
    with pytest.raises(ValueError):
        detect_resonance(sweep, 1.5)


def test_deviation_is_zero_for_uncoupled_probe():
    sweep = s11_sweep(ProbeSetup(k=0.0), EquivalentCircuit(L=1e-6, C_chip=1e-10))
    assert isinstance(sweep, FrequencySweep)
    assert np.max(sweep.deviation()) == 0.0


def test_coupled_resonances_match_polynomial_roots():
    rng = random.Random(3)
    for _ in range(100):
        c1, c2 = (EquivalentCircuit(L=10 ** rng.uniform(-7, -5), C_chip=10 ** rng.uniform(-12, -10))
                  for _ in range(2))
        k = rng.uniform(0, 0.95)
        ref = oracles.coupled_modes(resonant_frequency_closed_form(c1), resonant_frequency_closed_form(c2), k)
        assert coupled_resonances(c1, c2, k) == pytest.approx(ref, rel=1e-9)


def test_coupled_resonances_split_symmetrically_for_identical_tanks():
    c = EquivalentCircuit(L=1e-6, C_chip=1e-10)
    f0 = resonant_frequency_closed_form(c)
    lo, hi = coupled_resonances(c, c, 0.2)
    assert lo == pytest.approx(f0 / math.sqrt(1.2))
    assert hi == pytest.approx(f0 / math.sqrt(0.8))


def test_coupled_resonances_reject_bad_input():
    c = EquivalentCircuit(L=1e-6, C_chip=1e-10)
    with pytest.raises(ValueError):
        coupled_resonances(c, c, 1.0)
    with pytest.raises(UnsupportedTopologyError):
        coupled_resonances(c.replace(C_cut_total=1e-12), c, 0.1)


def test_power_ratio_is_one_when_tuned_to_operating_frequency():
    L = 2e-6
    c = EquivalentCircuit(L=L, C_chip=calibrate_chip_capacitance(L, F_OPERATING))
    assert delivered_power_ratio(c) == pytest.approx(1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(8e6, 80e6))
def test_detuning_never_beats_tuned_antenna(f0):
    L = 2e-6
    c = EquivalentCircuit(L=L, C_chip=calibrate_chip_capacitance(L, f0))
    assert 0 < delivered_power_ratio(c) <= 1 + 1e-12


def test_power_ratio_rejects_bad_frequency():
    with pytest.raises(ValueError):
        delivered_power_ratio(EquivalentCircuit(L=1e-6, C_chip=1e-10), 0)


def test_circuit_from_geometry_carries_metadata():
    e = lookup("card-d")
    c = circuit_from_geometry(e.geometry, e.measured_f0)
    assert c.turns == 4
    assert c.flux_area == pytest.approx(e.geometry.turn_area_sum)
    assert c.intact() == c
