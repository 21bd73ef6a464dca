"""Independent reference computations used to check the library.

Nothing here imports the library's numerical routines; only plain geometry
and circuit descriptions cross the boundary.
"""

import math

import numpy as np
from scipy import integrate

MU0 = 4e-7 * math.pi


def _rectangles(width, height, turns, pitch):
    """Closed concentric rectangles as (start, end) 3D point pairs."""
    segs = []
    for i in range(turns):
        w, h = width - 2 * i * pitch, height - 2 * i * pitch
        c = [(-w / 2, -h / 2), (w / 2, -h / 2), (w / 2, h / 2), (-w / 2, h / 2)]
        for a, b in zip(c, c[1:] + c[:1]):
            segs.append((np.array([*a, 0.0]), np.array([*b, 0.0])))
    return segs


def _inv_distance_along(p, a, b):
    """Integral of 1/|p - x| for x running over segment a -> b."""
    d = b - a
    length = np.linalg.norm(d)
    u = d / length
    t = np.dot(p - a, u)
    rho = np.linalg.norm((p - a) - t * u)
    return math.asinh((length - t) / rho) + math.asinh(t / rho)


def neumann_inductance(width, height, turns, pitch, wire_radius):
    """Neumann double integral between the loop and a copy displaced by the GMD.

    A round wire's self-inductance equals the mutual inductance of two
    filaments separated by its geometric mean distance r * exp(-1/4).
    """
    gmd = wire_radius * math.exp(-0.25)
    segs = _rectangles(width, height, turns, pitch)
    lift = np.array([0.0, 0.0, gmd])
    total = 0.0
    for a1, b1 in segs:
        d1 = b1 - a1
        l1 = np.linalg.norm(d1)
        for a2, b2 in segs:
            d2 = b2 - a2
            cos = np.dot(d1, d2) / (l1 * np.linalg.norm(d2))
            if abs(cos) < 1e-12:
                continue
            a2l, b2l = a2 + lift, b2 + lift
            val, _ = integrate.quad(lambda s: _inv_distance_along(a1 + s * d1, a2l, b2l),
                                    0.0, 1.0, limit=200, epsabs=0, epsrel=1e-9)
            total += cos * l1 * val
    return MU0 / (4 * math.pi) * total


def loop_impedance(f, L, C_chip, R_ant, R_chip, C_gap=None, R_bridge=0.0, C_bridge=None, R_shunt=None):
    """Series loop impedance assembled element by element."""
    w = 2 * math.pi * f
    z_c = lambda c: 1 / (1j * w * c)  # noqa: E731
    par = lambda *zs: 1 / sum(1 / z for z in zs)  # noqa: E731
    load = [R_chip, z_c(C_chip)] + ([R_shunt] if R_shunt is not None else [])
    z = R_ant + 1j * w * L + par(*load)
    if C_gap is not None:
        z += z_c(C_gap)
    if C_bridge is not None:
        z += par(R_bridge, z_c(C_bridge))
    else:
        z += R_bridge
    return z


def probe_s11(f, L_probe, k, Z0, L_card, z_loop):
    """Solve the two coupled meshes for the probe-port impedance, then S11."""
    w = 2 * math.pi * f
    M = k * math.sqrt(L_probe * L_card)
    A = np.array([[1j * w * L_probe, -1j * w * M], [-1j * w * M, z_loop]])
    i1, _ = np.linalg.solve(A, np.array([1.0, 0.0]))
    z_in = 1 / i1
    return (z_in - Z0) / (z_in + Z0)


def coupled_modes(f1, f2, k):
    """Normal-mode frequencies via numpy's polynomial root finder."""
    w1, w2 = (2 * math.pi * f1) ** 2, (2 * math.pi * f2) ** 2
    roots = np.roots([1 - k * k, -(w1 + w2), w1 * w2])
    return sorted(math.sqrt(r.real) / (2 * math.pi) for r in roots)


def is_valid_short_apdu(raw: bytes) -> bool:
    """Length rules for ISO 7816-4 short command APDUs, cases 1 to 4."""
    n = len(raw)
    if n < 4:
        return False
    if n in (4, 5):
        return True
    lc = raw[4]
    return lc != 0 and n in (5 + lc, 6 + lc)
