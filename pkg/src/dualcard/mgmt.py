"""PIN-protected interface-management applet.

Wire contract (CLA 0x80)::

    VERIFY_PIN           INS 20  data = PIN
    CHANGE_PIN           INS 24  data = old PIN || FF || new PIN
    SET_INTERFACE_STATE  INS 40  P1 = 00 card | 01 applet (AID in data), P2 = 01 enable | 00 disable
    GET_INTERFACE_STATE  INS 42  P1 as SET, P2 = 00; returns 01 enabled | 00 disabled

Commands arriving over an interface outside ``mgmt_interfaces`` are refused
with 6985 before anything else is looked at.
"""

from __future__ import annotations

import hmac
from dataclasses import dataclass

from .apdu import (
    SW_AUTH_BLOCKED,
    SW_CLA_NOT_SUPPORTED,
    SW_CONDITIONS_NOT_SATISFIED,
    SW_INCORRECT_P1P2,
    SW_INS_NOT_SUPPORTED,
    SW_OK,
    SW_REFERENCED_DATA_NOT_FOUND,
    SW_SECURITY_NOT_SATISFIED,
    SW_WRONG_LENGTH,
    CommandApdu,
    Interface,
    ResponseApdu,
)
from .card import Applet, Session, UnknownAppletError

MGMT_AID = bytes.fromhex("F0494641434D474D54")
CLA_MGMT = 0x80
INS_VERIFY = 0x20
INS_CHANGE_PIN = 0x24
INS_SET_STATE = 0x40
INS_GET_STATE = 0x42

TARGET_CARD = 0x00
TARGET_APPLET = 0x01
PIN_DELIMITER = 0xFF


@dataclass(frozen=True)
class MgmtConfig:
    pin: bytes
    max_retries: int = 3
    mgmt_interfaces: frozenset = frozenset({Interface.CONTACT})
    # False reproduces the unprotected enable/disable design
    require_pin: bool = True

    def __post_init__(self):
        object.__setattr__(self, "pin", bytes(self.pin))
        object.__setattr__(self, "mgmt_interfaces",
                           frozenset(Interface(i) for i in self.mgmt_interfaces))
        _check_pin(self.pin)
        if not 1 <= self.max_retries <= 10:
            raise ValueError("max_retries must lie in 1..10")
        if not self.mgmt_interfaces:
            raise ValueError("at least one management interface is required")


def _check_pin(pin: bytes) -> None:
    if not 4 <= len(pin) <= 12:
        raise ValueError("PIN must be 4-12 octets")
    if PIN_DELIMITER in pin:
        raise ValueError("PIN must not contain the FF delimiter octet")


def _sw(sw: int) -> ResponseApdu:
    return ResponseApdu(sw=sw)


class ManagementApplet(Applet):
    def __init__(self, config: MgmtConfig):
        self.config = config
        self._pin = config.pin
        self.retry_counter = config.max_retries
        self.blocked = False

    # persistent state is shared across interfaces; the authenticated flag
    # lives in the per-interface session

    def persistent_state(self):
        return {"retry_counter": self.retry_counter, "blocked": self.blocked}

    @staticmethod
    def authenticated(session: Session) -> bool:
        return session.state.get("authenticated", False)

    def process(self, command: CommandApdu, source: Interface, session: Session) -> ResponseApdu:
        if source not in self.config.mgmt_interfaces:
            return _sw(SW_CONDITIONS_NOT_SATISFIED)
        if command.cla != CLA_MGMT:
            return _sw(SW_CLA_NOT_SUPPORTED)
        handler = {
            INS_VERIFY: self._verify,
            INS_CHANGE_PIN: self._change_pin,
            INS_SET_STATE: self._set_state,
            INS_GET_STATE: self._get_state,
        }.get(command.ins)
        if handler is None:
            return _sw(SW_INS_NOT_SUPPORTED)
        return handler(command, session)

    def _check(self, candidate: bytes, session: Session) -> ResponseApdu:
        if hmac.compare_digest(candidate, self._pin):
            self.retry_counter = self.config.max_retries
            session.state["authenticated"] = True
            return _sw(SW_OK)
        session.state["authenticated"] = False
        self.retry_counter -= 1
        if self.retry_counter == 0:
            self.blocked = True
        return _sw(0x63C0 | self.retry_counter)

    def _verify(self, command, session):
        if self.blocked:
            return _sw(SW_AUTH_BLOCKED)
        if not command.data:
            return _sw(SW_WRONG_LENGTH)
        return self._check(command.data, session)

    def _change_pin(self, command, session):
        if self.blocked:
            return _sw(SW_AUTH_BLOCKED)
        old, sep, new = command.data.partition(bytes([PIN_DELIMITER]))
        if not sep or not 4 <= len(new) <= 12 or PIN_DELIMITER in new:
            return _sw(SW_WRONG_LENGTH)
        response = self._check(old, session)
        if response.sw == SW_OK:
            self._pin = new
        return response

    def _target(self, command) -> tuple[int | None, ResponseApdu | None]:
        # (target, None) on success, (None, error response) otherwise
        if command.p1 == TARGET_CARD:
            if command.data:
                return None, _sw(SW_WRONG_LENGTH)
            return TARGET_CARD, None
        if command.p1 == TARGET_APPLET:
            if command.data not in self.card.aids:
                return None, _sw(SW_REFERENCED_DATA_NOT_FOUND)
            return TARGET_APPLET, None
        return None, _sw(SW_INCORRECT_P1P2)

    def _set_state(self, command, session):
        if self.config.require_pin and not self.authenticated(session):
            return _sw(SW_SECURITY_NOT_SATISFIED)
        if command.p2 not in (0x00, 0x01):
            return _sw(SW_INCORRECT_P1P2)
        target, error = self._target(command)
        if error:
            return error
        enable = command.p2 == 0x01
        if target == TARGET_CARD:
            self.card.set_card_contactless(enable)
        else:
            try:
                self.card.set_applet_contactless(command.data, enable)
            except UnknownAppletError:
                return _sw(SW_REFERENCED_DATA_NOT_FOUND)
        return _sw(SW_OK)

    def _get_state(self, command, session):
        if command.p2 != 0x00:
            return _sw(SW_INCORRECT_P1P2)
        target, error = self._target(command)
        if error:
            return error
        if target == TARGET_CARD:
            enabled = self.card.card_contactless_enabled
        else:
            enabled = self.card.applet_contactless_enabled(command.data)
        return ResponseApdu(bytes([int(enabled)]))


# command builders for terminals and tests

def verify_pin(pin: bytes) -> CommandApdu:
    return CommandApdu(CLA_MGMT, INS_VERIFY, 0x00, 0x00, pin)


def change_pin(old: bytes, new: bytes) -> CommandApdu:
    return CommandApdu(CLA_MGMT, INS_CHANGE_PIN, 0x00, 0x00, old + bytes([PIN_DELIMITER]) + new)


def set_interface_state(enable: bool, aid: bytes | None = None) -> CommandApdu:
    p1 = TARGET_CARD if aid is None else TARGET_APPLET
    return CommandApdu(CLA_MGMT, INS_SET_STATE, p1, int(enable), aid or b"")


def get_interface_state(aid: bytes | None = None) -> CommandApdu:
    p1 = TARGET_CARD if aid is None else TARGET_APPLET
    return CommandApdu(CLA_MGMT, INS_GET_STATE, p1, 0x00, aid or b"")


def select(aid: bytes) -> CommandApdu:
    return CommandApdu(0x00, 0xA4, 0x04, 0x00, aid)
