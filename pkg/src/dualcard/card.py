"""Virtual dual-interface card: applet routing and contactless gating.

A card is a sequential state machine. Callers must not issue commands on
both interfaces concurrently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .apdu import (
    SW_CONDITIONS_NOT_SATISFIED,
    SW_FILE_NOT_FOUND,
    SW_INCORRECT_P1P2,
    SW_INS_NOT_SUPPORTED,
    SW_OK,
    SW_WRONG_LENGTH,
    CommandApdu,
    Interface,
    MalformedApduError,
    ResponseApdu,
    parse_command,
    to_hex,
)
from .circuit import EquivalentCircuit
from .params import DEFAULTS, ModelParams
from .states import INTACT, ChipProfile, InvalidStateError, PhysicalState, ReaderClass, Verdict, readability

INS_SELECT = 0xA4
SNAPSHOT_VERSION = 1

DEFAULT_ATR = bytes.fromhex("3B8A800150534D43415244534D")
DEFAULT_ATS = bytes.fromhex("0578807002")
DEFAULT_UID = bytes.fromhex("08A1B2C3")


class CardError(Exception):
    pass


class UnknownAppletError(CardError, KeyError):
    pass


class NotPoweredError(CardError):
    """The interface has no field / is not powered; the card stays silent."""


@dataclass
class Session:
    """Volatile per-interface state, cleared on power-off."""

    selected: bytes | None = None
    state: dict = field(default_factory=dict)


class Applet:
    """Base behaviour for on-card applications.

    Persistent state lives on the applet instance and is shared by both
    interfaces; ``session.state`` is volatile and per interface.
    """

    card: "VirtualCard | None" = None

    def process(self, command: CommandApdu, source: Interface, session: Session) -> ResponseApdu:
        return ResponseApdu(sw=SW_INS_NOT_SUPPORTED)

    def on_select(self, session: Session) -> None:
        pass

    def on_deselect(self, session: Session) -> None:
        session.state.clear()

    def persistent_state(self) -> dict:
        return {}


class EchoApplet(Applet):
    """Minimal application: GET DATA (INS CA) reports the source interface.

    ``contact_only_ins`` lists instructions the applet itself refuses over
    the contactless interface (an applet-level interface policy).
    """

    def __init__(self, contact_only_ins=()):
        self.contact_only_ins = frozenset(contact_only_ins)
        self.counter = 0

    def process(self, command, source, session):
        if source is Interface.CONTACTLESS and command.ins in self.contact_only_ins:
            return ResponseApdu(sw=SW_CONDITIONS_NOT_SATISFIED)
        if command.ins == 0xCA:
            tag = 0x00 if source is Interface.CONTACT else 0x01
            return ResponseApdu(bytes([tag]))
        if command.ins == 0xB0:
            # echo data back; counts invocations in persistent memory
            self.counter += 1
            return ResponseApdu(command.data)
        return ResponseApdu(sw=SW_INS_NOT_SUPPORTED)

    def persistent_state(self):
        return {"counter": self.counter}


@dataclass
class _Slot:
    applet: Applet
    contactless_enabled: bool = True


class VirtualCard:
    def __init__(self, circuit: EquivalentCircuit, chip: ChipProfile,
                 physical: PhysicalState = INTACT, params: ModelParams = DEFAULTS,
                 atr: bytes = DEFAULT_ATR, ats: bytes = DEFAULT_ATS, uid: bytes = DEFAULT_UID):
        self.circuit = circuit
        self.chip = chip
        self.set_physical(physical)
        self.params = params
        self.atr, self.ats, self.uid = atr, ats, uid
        self.card_contactless_enabled = True
        self._slots: dict[bytes, _Slot] = {}
        self._sessions: dict[Interface, Session] = {}
        self._reader: ReaderClass | None = None

    # -- configuration ------------------------------------------------------

    def install(self, aid: bytes, applet: Applet, contactless_enabled: bool = True) -> None:
        aid = bytes(aid)
        if not 5 <= len(aid) <= 16:
            raise ValueError(f"AID must be 5-16 octets, got {len(aid)}")
        if aid in self._slots:
            raise ValueError(f"AID {to_hex(aid)} already installed")
        applet.card = self
        self._slots[aid] = _Slot(applet, contactless_enabled)

    @property
    def aids(self) -> list[bytes]:
        return list(self._slots)

    def applet(self, aid: bytes) -> Applet:
        return self._slot(aid).applet

    def _slot(self, aid: bytes) -> _Slot:
        try:
            return self._slots[bytes(aid)]
        except KeyError:
            raise UnknownAppletError(to_hex(bytes(aid))) from None

    def set_card_contactless(self, enabled: bool) -> None:
        self.card_contactless_enabled = bool(enabled)

    def set_applet_contactless(self, aid: bytes, enabled: bool) -> None:
        self._slot(aid).contactless_enabled = bool(enabled)

    def applet_contactless_enabled(self, aid: bytes) -> bool:
        return self._slot(aid).contactless_enabled

    def set_physical(self, physical: PhysicalState) -> None:
        turns = self.circuit.turns
        if turns is not None and physical.cuts > turns:
            raise InvalidStateError(f"{physical.cuts} cuts on a {turns}-turn antenna")
        self.physical = physical

    # -- RF gating ----------------------------------------------------------

    def rf_verdict(self, reader: ReaderClass) -> Verdict:
        return readability(self.circuit, self.physical, self.chip, reader, self.params)

    def _field_ok(self, reader: ReaderClass) -> bool:
        return self.physical.hardware_pin_enabled and self.rf_verdict(reader) is Verdict.READABLE

    def _reachable(self, aid: bytes, iface: Interface) -> bool:
        if iface is Interface.CONTACT:
            return True
        return self.card_contactless_enabled and self._slots[aid].contactless_enabled

    # -- power --------------------------------------------------------------

    def powered(self, iface: Interface) -> bool:
        return iface in self._sessions

    def power_on(self, iface: Interface, reader: ReaderClass | None = None) -> bytes | None:
        """Answer-to-reset token, or ``None`` when the card stays silent."""
        iface = Interface(iface)
        self.power_off(iface)
        if iface is Interface.CONTACT:
            self._sessions[iface] = Session()
            return self.atr
        if reader is None:
            raise ValueError("contactless power-on needs a reader class")
        if not self._field_ok(reader):
            return None
        self._reader = reader
        self._sessions[iface] = Session()
        return self.uid + self.ats

    def power_off(self, iface: Interface) -> None:
        session = self._sessions.pop(Interface(iface), None)
        if session is not None and session.selected is not None:
            self._slots[session.selected].applet.on_deselect(session)

    # -- command processing -------------------------------------------------

    def transmit(self, iface: Interface, raw: bytes) -> bytes:
        iface = Interface(iface)
        if iface not in self._sessions:
            raise NotPoweredError(f"{iface.value} interface is not powered")
        if iface is Interface.CONTACTLESS and not self._field_ok(self._reader):
            # field lost since power-on (switch released, antenna cut, pin off)
            self.power_off(iface)
            raise NotPoweredError("contactless field lost")
        return self._dispatch(iface, raw).to_bytes()

    def _dispatch(self, iface: Interface, raw: bytes) -> ResponseApdu:
        session = self._sessions[iface]
        try:
            cmd = parse_command(raw)
        except MalformedApduError:
            return ResponseApdu(sw=SW_WRONG_LENGTH)

        if cmd.ins >> 4 in (0x6, 0x9):
            return ResponseApdu(sw=SW_INS_NOT_SUPPORTED)  # invalid INS at card level
        if cmd.ins == INS_SELECT:
            return self._select(iface, session, cmd)

        aid = session.selected
        if aid is None:
            return ResponseApdu(sw=SW_CONDITIONS_NOT_SATISFIED)
        if not self._reachable(aid, iface):
            # availability changed mid-session
            self._deselect(session)
            return ResponseApdu(sw=SW_FILE_NOT_FOUND)
        return self._slots[aid].applet.process(cmd, iface, session)

    def _select(self, iface: Interface, session: Session, cmd: CommandApdu) -> ResponseApdu:
        if cmd.p1 != 0x04:
            return ResponseApdu(sw=SW_INCORRECT_P1P2)
        aid = cmd.data
        # hidden applets are indistinguishable from missing ones
        if aid not in self._slots or not self._reachable(aid, iface):
            return ResponseApdu(sw=SW_FILE_NOT_FOUND)
        self._deselect(session)
        session.selected = aid
        self._slots[aid].applet.on_select(session)
        return ResponseApdu(sw=SW_OK)

    def _deselect(self, session: Session) -> None:
        if session.selected is not None:
            self._slots[session.selected].applet.on_deselect(session)
            session.selected = None

    # -- persistence ----------------------------------------------------------

    def snapshot(self) -> dict:
        return {
            "version": SNAPSHOT_VERSION,
            "card_contactless_enabled": self.card_contactless_enabled,
            "applets": {
                to_hex(aid): {
                    "contactless_enabled": slot.contactless_enabled,
                    "state": slot.applet.persistent_state(),
                }
                for aid, slot in self._slots.items()
            },
        }

    def snapshot_text(self) -> str:
        return json.dumps(self.snapshot(), indent=2, sort_keys=True)
