from dualcard.circuit import ProbeSetup, circuit_from_geometry, s11_sweep
from dualcard.geometry import lookup
from dualcard.plotting import plot_cut_progression, plot_sweep
from dualcard.states import cut_progression, cut_sweeps


def test_figures_written(tmp_path):
    e = lookup("card-d")
    c = circuit_from_geometry(e.geometry, e.measured_f0)
    sweep = s11_sweep(ProbeSetup(), c, n_points=101)
    p = plot_sweep(sweep, tmp_path / "sub" / "sweep.png", "card-d", 14.5e6)
    assert p.stat().st_size > 1000
    sweeps = cut_sweeps(c, 4)
    rows = cut_progression(c, 4)
    q = plot_cut_progression(sweeps, rows, tmp_path / "cut.png", "card-d", 0.02)
    assert q.read_bytes()[:4] == b"\x89PNG"
