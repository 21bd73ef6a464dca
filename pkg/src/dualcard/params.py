"""Default model constants and config-file overrides.

All values are SI. The defaults are order-of-magnitude values for 13.56 MHz
card systems; tests pin behaviour, not these numbers.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path

CONFIG_ENV_VAR = "DUALCARD_CONFIG"

F_OPERATING = 13.56e6


@dataclass(frozen=True)
class ModelParams:
    # antenna / chip
    r_ant: float = 1.0
    r_chip: float = 1.5e3
    pitch: float = 0.5e-3
    wire_radius: float = 0.056e-3

    # measurement probe
    l_probe: float = 1e-6
    k_probe: float = 0.1
    z0: float = 50.0
    noise_floor: float = 0.02
    f_start: float = 10e6
    f_stop: float = 250e6
    n_points: int = 1001

    # physical interventions
    c_cut: float = 1e-12
    c_slit: float = 0.05e-12
    c_switch_gap: float = 0.3e-12
    r_metal_bridge: float = 0.05
    r_finger: float = 50e3
    c_finger: float = 50e-12
    r_shunt: float = 1e-3

    # coil-on-module chip antenna
    module_width: float = 11e-3
    module_height: float = 9e-3
    module_turns: int = 8
    module_pitch: float = 0.25e-3
    module_wire_radius: float = 0.03e-3
    module_f0: float = 14.0e6
    k_module: float = 0.3

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def __post_init__(self):
        positive = [f.name for f in dataclasses.fields(self) if f.name != "noise_floor"]
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if not 0 < self.k_probe < 1:
            raise ValueError("k_probe must lie in (0, 1)")
        if not 0 < self.k_module < 1:
            raise ValueError("k_module must lie in (0, 1)")
        if not 0 < self.noise_floor < 1:
            raise ValueError("noise_floor must lie in (0, 1)")
        if self.f_start >= self.f_stop or self.n_points < 2:
            raise ValueError("sweep range must have f_start < f_stop and n_points >= 2")


DEFAULTS = ModelParams()


def load_params(path: str | os.PathLike | None = None, **overrides) -> ModelParams:
    """Build parameters from a JSON config file plus keyword overrides.

    ``path`` defaults to ``$DUALCARD_CONFIG`` when set. Keyword overrides win
    over the file; ``None`` values are ignored so CLI flags can be passed
    through unconditionally.
    """
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR) or None
    values: dict = {}
    if path is not None:
        values.update(json.loads(Path(path).read_text()))
    values.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in dataclasses.fields(ModelParams)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ValueError(f"unknown parameter(s): {', '.join(unknown)}")
    return ModelParams(**values)
