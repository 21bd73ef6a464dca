"""Dual-interface smartcard antenna model and virtual card runtime."""

from .apdu import CommandApdu, Interface, MalformedApduError, ResponseApdu, parse_command, serialize_command
from .card import EchoApplet, NotPoweredError, VirtualCard
from .circuit import (
    EquivalentCircuit,
    FrequencySweep,
    ProbeSetup,
    calibrate_chip_capacitance,
    calibrate_cut_capacitance,
    circuit_from_geometry,
    coupled_resonances,
    delivered_power_ratio,
    detect_resonance,
    loop_inductance,
    resonant_frequency_closed_form,
    s11_sweep,
)
from .geometry import AntennaGeometry, InvalidGeometryError, catalog, lookup
from .mgmt import MGMT_AID, ManagementApplet, MgmtConfig
from .params import DEFAULTS, ModelParams, load_params
from .scenario import Scenario, ScenarioError, builtin, list_builtin, load_scenario, run
from .states import (
    CHIP_PROFILES,
    READER_CLASSES,
    PhysicalState,
    SeriesSwitch,
    ShuntSwitch,
    Verdict,
    apply_state,
    cut_progression,
    readability,
)

__version__ = "0.1.0"

__all__ = [
    "AntennaGeometry",
    "apply_state",
    "builtin",
    "calibrate_chip_capacitance",
    "calibrate_cut_capacitance",
    "catalog",
    "CHIP_PROFILES",
    "circuit_from_geometry",
    "CommandApdu",
    "coupled_resonances",
    "cut_progression",
    "DEFAULTS",
    "delivered_power_ratio",
    "detect_resonance",
    "EchoApplet",
    "EquivalentCircuit",
    "FrequencySweep",
    "Interface",
    "InvalidGeometryError",
    "list_builtin",
    "load_params",
    "load_scenario",
    "lookup",
    "loop_inductance",
    "MalformedApduError",
    "ManagementApplet",
    "MGMT_AID",
    "MgmtConfig",
    "ModelParams",
    "NotPoweredError",
    "parse_command",
    "PhysicalState",
    "ProbeSetup",
    "readability",
    "READER_CLASSES",
    "resonant_frequency_closed_form",
    "ResponseApdu",
    "run",
    "s11_sweep",
    "Scenario",
    "ScenarioError",
    "serialize_command",
    "SeriesSwitch",
    "ShuntSwitch",
    "Verdict",
    "VirtualCard",
]
