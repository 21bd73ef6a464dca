"""Scripted experiments: physical changes, terminal traffic and expectations.

Scenario files are JSON; see docs/SCENARIOS.md for the schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from .apdu import Interface, from_hex, parse_response, to_hex
from .card import EchoApplet, NotPoweredError, VirtualCard
from .circuit import circuit_from_geometry
from .geometry import AntennaGeometry, lookup
from .mgmt import MGMT_AID, ManagementApplet, MgmtConfig
from .params import ModelParams, load_params
from .states import (
    CHIP_PROFILES,
    PROTOTYPES,
    READER_CLASSES,
    InvalidStateError,
    PhysicalState,
    Verdict,
    reader_class,
)

EXPECTED_OUTCOMES = ("pass", "demonstrates-attack")


class ScenarioError(ValueError):
    def __init__(self, message: str, step: int | None = None, line: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if step is not None:
            where.append(f"step {step}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.step = step
        self.line = line


# -- schema -------------------------------------------------------------------

@dataclass(frozen=True)
class AppletSpec:
    aid: bytes
    kind: str = "echo"
    contactless_enabled: bool = True
    contact_only_ins: tuple[int, ...] = ()


@dataclass(frozen=True)
class MgmtSpec:
    pin: bytes
    aid: bytes = MGMT_AID
    max_retries: int = 3
    interfaces: tuple[str, ...] = ("contact",)
    require_pin: bool = True
    contactless_enabled: bool = True


@dataclass(frozen=True)
class CardConfig:
    card: str | None = "card-d"
    geometry: dict | None = None  # width_mm, height_mm, turns[, pitch_mm, wire_radius_mm]
    f0_mhz: float | None = None
    chip: str | None = None
    contactless_enabled: bool = True
    applets: tuple[AppletSpec, ...] = ()
    mgmt: MgmtSpec | None = None
    params: dict = field(default_factory=dict)

    @property
    def aids(self) -> list[bytes]:
        aids = [a.aid for a in self.applets]
        if self.mgmt is not None:
            aids.append(self.mgmt.aid)
        return aids


@dataclass(frozen=True)
class SetPhysical:
    changes: dict


@dataclass(frozen=True)
class PowerOn:
    interface: Interface
    reader: str | None = None


@dataclass(frozen=True)
class Transmit:
    interface: Interface
    apdu: bytes


@dataclass(frozen=True)
class ExpectSw:
    sw: int


@dataclass(frozen=True)
class ExpectData:
    data: bytes


@dataclass(frozen=True)
class ExpectNoResponse:
    pass


@dataclass(frozen=True)
class ExpectReadability:
    reader: str
    verdict: Verdict


@dataclass(frozen=True)
class Step:
    action: object
    note: str = ""

    @property
    def kind(self) -> str:
        return _KIND_BY_TYPE[type(self.action)]


_KIND_BY_TYPE = {
    SetPhysical: "set_physical",
    PowerOn: "power_on",
    Transmit: "transmit",
    ExpectSw: "expect_sw",
    ExpectData: "expect_data",
    ExpectNoResponse: "expect_no_response",
    ExpectReadability: "expect_readability",
}
_EXPECTATIONS = {ExpectSw, ExpectData, ExpectNoResponse, ExpectReadability}


@dataclass(frozen=True)
class Scenario:
    name: str
    card: CardConfig
    steps: tuple[Step, ...]
    initial_physical: PhysicalState = PhysicalState()
    expected: str = "pass"
    description: str = ""


# -- parsing ------------------------------------------------------------------

def _hex(value, what: str, step: int | None = None) -> bytes:
    if not isinstance(value, str):
        raise ScenarioError(f"{what} must be a hex string", step)
    try:
        return from_hex(value)
    except ValueError:
        raise ScenarioError(f"bad hex in {what}: {value!r}", step) from None


def _interface(value, step) -> Interface:
    try:
        return Interface(value)
    except ValueError:
        raise ScenarioError(f"unknown interface {value!r}", step) from None


def _reader(value, step) -> str:
    try:
        return reader_class(value).name
    except KeyError:
        raise ScenarioError(f"unknown reader class {value!r}", step) from None


def _parse_step(i: int, raw) -> Step:
    if not isinstance(raw, dict):
        raise ScenarioError("step must be an object", i)
    raw = dict(raw)
    note = raw.pop("note", "")
    if len(raw) != 1:
        raise ScenarioError(f"step must have exactly one action, got {sorted(raw)}", i)
    (kind, arg), = raw.items()
    if kind == "set_physical":
        if not isinstance(arg, dict):
            raise ScenarioError("set_physical takes an object of state fields", i)
        try:
            PhysicalState().replace(**arg)
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"invalid physical state: {exc}", i) from None
        action = SetPhysical(dict(arg))
    elif kind == "power_on":
        iface = _interface(arg.get("interface"), i)
        reader = arg.get("reader")
        if iface is Interface.CONTACTLESS and reader is None:
            raise ScenarioError("contactless power_on needs a reader class", i)
        action = PowerOn(iface, None if reader is None else _reader(reader, i))
    elif kind == "transmit":
        action = Transmit(_interface(arg.get("interface"), i), _hex(arg.get("apdu"), "apdu", i))
    elif kind == "expect_sw":
        sw = _hex(arg, "expect_sw", i)
        if len(sw) != 2:
            raise ScenarioError("status word must be two octets", i)
        action = ExpectSw(int.from_bytes(sw, "big"))
    elif kind == "expect_data":
        action = ExpectData(_hex(arg, "expect_data", i))
    elif kind == "expect_no_response":
        action = ExpectNoResponse()
    elif kind == "expect_readability":
        try:
            verdict = Verdict(arg.get("verdict"))
        except ValueError:
            raise ScenarioError(f"unknown verdict {arg.get('verdict')!r}", i) from None
        action = ExpectReadability(_reader(arg.get("reader"), i), verdict)
    else:
        raise ScenarioError(f"unknown step kind {kind!r}", i)
    return Step(action, note)


def _parse_card(raw: dict) -> CardConfig:
    raw = dict(raw)
    applets = []
    for a in raw.pop("applets", []):
        a = dict(a)
        a["aid"] = _hex(a.get("aid"), "applet aid")
        a["contact_only_ins"] = tuple(int(x, 16) for x in a.get("contact_only_ins", ()))
        if a.get("kind", "echo") != "echo":
            raise ScenarioError(f"unknown applet kind {a['kind']!r}")
        applets.append(AppletSpec(**a))
    mgmt = raw.pop("mgmt", None)
    if mgmt is not None:
        mgmt = dict(mgmt)
        mgmt["pin"] = _hex(mgmt.get("pin"), "mgmt pin")
        if "aid" in mgmt:
            mgmt["aid"] = _hex(mgmt["aid"], "mgmt aid")
        mgmt["interfaces"] = tuple(mgmt.get("interfaces", ("contact",)))
        mgmt = MgmtSpec(**mgmt)
    try:
        config = CardConfig(applets=tuple(applets), mgmt=mgmt, **raw)
    except TypeError as exc:
        raise ScenarioError(f"bad card configuration: {exc}") from None
    if config.card is not None and config.card not in PROTOTYPES:
        try:
            lookup(config.card)
        except KeyError:
            raise ScenarioError(f"unknown catalog id {config.card!r}") from None
    if config.card is None and config.geometry is None:
        raise ScenarioError("card configuration needs a catalog id or a geometry")
    if config.chip is not None and config.chip not in CHIP_PROFILES:
        raise ScenarioError(f"unknown chip profile {config.chip!r}")
    if len(set(config.aids)) != len(config.aids):
        raise ScenarioError("duplicate AID in card configuration")
    return config


def _validate(s: Scenario) -> None:
    if not s.steps:
        raise ScenarioError("scenario has no steps")
    if s.expected not in EXPECTED_OUTCOMES:
        raise ScenarioError(f"expected must be one of {EXPECTED_OUTCOMES}")
    aids = set(s.card.aids)
    powered = set()
    last_action = None
    for i, step in enumerate(s.steps):
        a = step.action
        if type(a) in _EXPECTATIONS:
            if last_action is None:
                raise ScenarioError(f"{step.kind} must follow an action step", i)
            if isinstance(a, (ExpectSw, ExpectData)) and not isinstance(last_action, Transmit):
                raise ScenarioError(f"{step.kind} must follow a transmit step", i)
            if isinstance(a, ExpectNoResponse) and not isinstance(last_action, (Transmit, PowerOn)):
                raise ScenarioError("expect_no_response must follow power_on or transmit", i)
            continue
        last_action = a
        if isinstance(a, PowerOn):
            powered.add(a.interface)
        elif isinstance(a, Transmit):
            if a.interface not in powered:
                raise ScenarioError(f"transmit on {a.interface.value} before power_on", i)
            apdu = a.apdu
            if len(apdu) > 5 and apdu[1] == 0xA4 and apdu[2] == 0x04:
                aid = apdu[5:5 + apdu[4]]
                if aid not in aids:
                    raise ScenarioError(f"AID {to_hex(aid)} is not in the card configuration", i)


def scenario_from_dict(d: dict) -> Scenario:
    if not isinstance(d, dict):
        raise ScenarioError("scenario must be a JSON object")
    known = {"name", "description", "expected", "card", "initial_physical", "steps"}
    unknown = set(d) - known
    if unknown:
        raise ScenarioError(f"unknown top-level field(s): {', '.join(sorted(unknown))}")
    if "name" not in d:
        raise ScenarioError("scenario needs a name")
    try:
        physical = PhysicalState.from_dict(d.get("initial_physical", {}))
    except InvalidStateError as exc:
        raise ScenarioError(f"initial_physical: {exc}") from None
    steps = d.get("steps", [])
    if not isinstance(steps, list):
        raise ScenarioError("steps must be a list")
    s = Scenario(
        name=d["name"],
        card=_parse_card(d.get("card", {})),
        steps=tuple(_parse_step(i, raw) for i, raw in enumerate(steps)),
        initial_physical=physical,
        expected=d.get("expected", "pass"),
        description=d.get("description", ""),
    )
    _validate(s)
    return s


def load_scenario(text: str) -> Scenario:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(exc.msg, line=exc.lineno) from None
    return scenario_from_dict(d)


def _step_to_dict(step: Step) -> dict:
    a = step.action
    if isinstance(a, SetPhysical):
        arg = dict(a.changes)
    elif isinstance(a, PowerOn):
        arg = {"interface": a.interface.value}
        if a.reader is not None:
            arg["reader"] = a.reader
    elif isinstance(a, Transmit):
        arg = {"interface": a.interface.value, "apdu": to_hex(a.apdu)}
    elif isinstance(a, ExpectSw):
        arg = f"{a.sw:04X}"
    elif isinstance(a, ExpectData):
        arg = to_hex(a.data)
    elif isinstance(a, ExpectNoResponse):
        arg = True
    else:
        arg = {"reader": a.reader, "verdict": a.verdict.value}
    out = {step.kind: arg}
    if step.note:
        out["note"] = step.note
    return out


def scenario_to_dict(s: Scenario) -> dict:
    c = s.card
    card: dict = {"card": c.card}
    for name in ("geometry", "f0_mhz", "chip"):
        if getattr(c, name) is not None:
            card[name] = getattr(c, name)
    card["contactless_enabled"] = c.contactless_enabled
    card["applets"] = [
        {"aid": to_hex(a.aid), "kind": a.kind, "contactless_enabled": a.contactless_enabled,
         "contact_only_ins": [f"{x:02X}" for x in a.contact_only_ins]}
        for a in c.applets
    ]
    if c.mgmt is not None:
        m = c.mgmt
        card["mgmt"] = {"pin": to_hex(m.pin), "aid": to_hex(m.aid), "max_retries": m.max_retries,
                        "interfaces": list(m.interfaces), "require_pin": m.require_pin,
                        "contactless_enabled": m.contactless_enabled}
    if c.params:
        card["params"] = dict(c.params)
    return {
        "name": s.name,
        "description": s.description,
        "expected": s.expected,
        "card": card,
        "initial_physical": s.initial_physical.to_dict(),
        "steps": [_step_to_dict(step) for step in s.steps],
    }


def save_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2) + "\n"


# -- built-in corpus ------------------------------------------------------------

def _builtin_files():
    return sorted((p for p in resources.files("dualcard.scenarios").iterdir()
                   if p.name.endswith(".json")), key=lambda p: p.name)


def list_builtin() -> list[str]:
    return [p.name[:-5] for p in _builtin_files()]


def builtin(name: str) -> Scenario:
    for p in _builtin_files():
        if p.name[:-5] == name:
            return load_scenario(p.read_text())
    raise KeyError(name)


# -- execution ------------------------------------------------------------------

def build_card(config: CardConfig, params: ModelParams | None = None) -> VirtualCard:
    """Fresh card for ``config``; per-scenario ``params`` entries override ``params``."""
    params = params or load_params(None)
    if config.params:
        try:
            params = params.replace(**config.params)
        except TypeError as exc:
            raise ScenarioError(f"bad card parameters: {exc}") from None
    chip = config.chip
    if config.card in PROTOTYPES:
        proto = PROTOTYPES[config.card]
        geometry, f0, chip = proto.geometry, proto.nominal_f0, chip or proto.chip
    elif config.card is not None:
        entry = lookup(config.card)
        geometry, f0 = entry.geometry, entry.measured_f0
    else:
        g = config.geometry
        geometry = AntennaGeometry.from_mm(g["width_mm"], g["height_mm"], g["turns"],
                                           g.get("pitch_mm"), g.get("wire_radius_mm"))
        f0 = None
    if config.f0_mhz is not None:
        f0 = config.f0_mhz * 1e6
    if f0 is None:
        raise ScenarioError("explicit geometry needs f0_mhz to calibrate the chip capacitance")
    circuit = circuit_from_geometry(geometry, f0, params)
    card = VirtualCard(circuit, CHIP_PROFILES[chip or "dual_interface"], params=params)
    card.set_card_contactless(config.contactless_enabled)
    for a in config.applets:
        card.install(a.aid, EchoApplet(a.contact_only_ins), a.contactless_enabled)
    if config.mgmt is not None:
        m = config.mgmt
        mgmt = ManagementApplet(MgmtConfig(m.pin, m.max_retries, frozenset(m.interfaces), m.require_pin))
        card.install(m.aid, mgmt, m.contactless_enabled)
    return card


@dataclass
class StepResult:
    index: int
    kind: str
    detail: str
    ok: bool | None = None  # None for action steps
    message: str = ""


@dataclass
class ScenarioReport:
    name: str
    expected: str
    results: list[StepResult]
    transcript: list[str]

    @property
    def passed(self) -> bool:
        return all(r.ok is not False for r in self.results)

    @property
    def first_failure(self) -> StepResult | None:
        return next((r for r in self.results if r.ok is False), None)

    @property
    def verdict(self) -> str:
        if self.expected == "demonstrates-attack":
            return "ATTACK DEMONSTRATED" if self.passed else "ATTACK NOT DEMONSTRATED"
        return "PASS" if self.passed else "FAIL"

    @property
    def failed_expected_pass(self) -> bool:
        return self.expected == "pass" and not self.passed

    def to_text(self) -> str:
        lines = [f"scenario {self.name} (expected: {self.expected})"]
        for r in self.results:
            mark = {None: "  ", True: "ok", False: "!!"}[r.ok]
            line = f"  [{r.index:02d}] {mark} {r.kind:<18} {r.detail}"
            if r.message:
                line += f"  -- {r.message}"
            lines.append(line)
        lines.append(f"result: {self.verdict}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "expected": self.expected,
            "verdict": self.verdict,
            "passed": self.passed,
            "steps": [
                {"index": r.index, "kind": r.kind, "detail": r.detail, "ok": r.ok, "message": r.message}
                for r in self.results
            ],
            "transcript": list(self.transcript),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def run(s: Scenario, params: ModelParams | None = None) -> ScenarioReport:
    """Execute every step against a fresh card; failures are collected, not raised."""
    card = build_card(s.card, params)
    card.set_physical(s.initial_physical)
    results: list[StepResult] = []
    transcript: list[str] = []
    last = None  # (kind, response-or-token)

    for i, step in enumerate(s.steps):
        a = step.action
        kind = step.kind
        if isinstance(a, SetPhysical):
            try:
                card.set_physical(card.physical.replace(**a.changes))
                detail = ", ".join(f"{k}={v}" for k, v in a.changes.items())
                results.append(StepResult(i, kind, detail))
            except (InvalidStateError, ValueError) as exc:
                results.append(StepResult(i, kind, str(a.changes), False, str(exc)))
            transcript.append(f"-- physical {card.physical.to_dict()}")
            last = ("set_physical", None)
        elif isinstance(a, PowerOn):
            reader = READER_CLASSES[a.reader] if a.reader else None
            token = card.power_on(a.interface, reader)
            where = a.interface.value + (f" via {a.reader}" if a.reader else "")
            shown = "no response" if token is None else to_hex(token)
            transcript.append(f"-- power on {where}: {shown}")
            results.append(StepResult(i, kind, f"{where} -> {shown}"))
            last = ("power_on", token)
        elif isinstance(a, Transmit):
            transcript.append(f">> {a.interface.value} {to_hex(a.apdu)}")
            try:
                raw = card.transmit(a.interface, a.apdu)
            except NotPoweredError:
                raw = None
            shown = "no response" if raw is None else to_hex(raw)
            transcript.append(f"<< {a.interface.value} {shown}")
            results.append(StepResult(i, kind, f"{a.interface.value} {to_hex(a.apdu)} -> {shown}"))
            last = ("transmit", raw)
        else:
            results.append(_check_expectation(i, step, last, card))
    return ScenarioReport(s.name, s.expected, results, transcript)


def _check_expectation(i: int, step: Step, last, card: VirtualCard) -> StepResult:
    a = step.action
    kind = step.kind
    _, value = last if last else (None, None)
    if isinstance(a, ExpectReadability):
        got = card.rf_verdict(READER_CLASSES[a.reader])
        detail = f"{a.reader} {a.verdict.value}"
        return StepResult(i, kind, detail, got is a.verdict, "" if got is a.verdict else f"got {got.value}")
    if isinstance(a, ExpectNoResponse):
        ok = value is None
        return StepResult(i, kind, "no response", ok, "" if ok else f"got {to_hex(value)}")
    if value is None:
        want = f"{a.sw:04X}" if isinstance(a, ExpectSw) else to_hex(a.data)
        return StepResult(i, kind, want, False, "no response")
    response = parse_response(value)
    if isinstance(a, ExpectSw):
        ok = response.sw == a.sw
        return StepResult(i, kind, f"{a.sw:04X}", ok, "" if ok else f"got {response.sw:04X}")
    ok = response.data == a.data
    return StepResult(i, kind, to_hex(a.data), ok, "" if ok else f"got {to_hex(response.data)}")
