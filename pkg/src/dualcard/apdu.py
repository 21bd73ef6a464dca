"""ISO 7816-4 short command/response APDUs."""

from __future__ import annotations

import enum
from dataclasses import dataclass


class MalformedApduError(ValueError):
    pass


class Interface(str, enum.Enum):
    CONTACT = "contact"
    CONTACTLESS = "contactless"


# status words
SW_OK = 0x9000
SW_WRONG_LENGTH = 0x6700
SW_SECURITY_NOT_SATISFIED = 0x6982
SW_AUTH_BLOCKED = 0x6983
SW_CONDITIONS_NOT_SATISFIED = 0x6985
SW_FILE_NOT_FOUND = 0x6A82
SW_INCORRECT_P1P2 = 0x6A86
SW_REFERENCED_DATA_NOT_FOUND = 0x6A88
SW_INS_NOT_SUPPORTED = 0x6D00
SW_CLA_NOT_SUPPORTED = 0x6E00

SW_NAMES = {
    SW_OK: "success",
    SW_WRONG_LENGTH: "wrong length",
    SW_SECURITY_NOT_SATISFIED: "security status not satisfied",
    SW_AUTH_BLOCKED: "authentication method blocked",
    SW_CONDITIONS_NOT_SATISFIED: "conditions of use not satisfied",
    SW_FILE_NOT_FOUND: "file or application not found",
    SW_INCORRECT_P1P2: "incorrect P1/P2",
    SW_REFERENCED_DATA_NOT_FOUND: "referenced data not found",
    SW_INS_NOT_SUPPORTED: "instruction not supported",
    SW_CLA_NOT_SUPPORTED: "class not supported",
}


def sw_text(sw: int) -> str:
    if sw & 0xFFF0 == 0x63C0:
        return f"verification failed, {sw & 0x0F} tries left"
    return SW_NAMES.get(sw, "unknown")


def _octet(name: str, value: int) -> None:
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value <= 0xFF:
        raise ValueError(f"{name} must be an octet, got {value!r}")


@dataclass(frozen=True)
class CommandApdu:
    cla: int
    ins: int
    p1: int
    p2: int
    data: bytes = b""
    le: int | None = None  # 1..256; 256 travels as 0x00

    def __post_init__(self):
        for name in ("cla", "ins", "p1", "p2"):
            _octet(name, getattr(self, name))
        object.__setattr__(self, "data", bytes(self.data))
        if len(self.data) > 255:
            raise ValueError("short APDU data is limited to 255 octets")
        if self.le is not None and not 1 <= self.le <= 256:
            raise ValueError(f"le must lie in 1..256, got {self.le}")

    @property
    def case(self) -> int:
        if self.data:
            return 3 if self.le is None else 4
        return 1 if self.le is None else 2

    def to_bytes(self) -> bytes:
        return serialize_command(self)

    def hex(self) -> str:
        return to_hex(self.to_bytes())


@dataclass(frozen=True)
class ResponseApdu:
    data: bytes = b""
    sw: int = SW_OK

    def __post_init__(self):
        object.__setattr__(self, "data", bytes(self.data))
        if not 0 < self.sw <= 0xFFFF:
            raise ValueError(f"invalid status word {self.sw:#06x}")

    @property
    def sw1(self) -> int:
        return self.sw >> 8

    @property
    def sw2(self) -> int:
        return self.sw & 0xFF

    def to_bytes(self) -> bytes:
        return serialize_response(self)


def parse_command(raw: bytes) -> CommandApdu:
    raw = bytes(raw)
    n = len(raw)
    if n < 4:
        raise MalformedApduError(f"APDU too short ({n} octets)")
    cla, ins, p1, p2 = raw[:4]
    if n == 4:
        return CommandApdu(cla, ins, p1, p2)
    if n == 5:
        return CommandApdu(cla, ins, p1, p2, le=raw[4] or 256)
    lc = raw[4]
    if lc == 0:
        raise MalformedApduError("Lc = 0 is not a short APDU")
    if n == 5 + lc:
        return CommandApdu(cla, ins, p1, p2, raw[5:])
    if n == 6 + lc:
        return CommandApdu(cla, ins, p1, p2, raw[5:-1], le=raw[-1] or 256)
    raise MalformedApduError(f"Lc = {lc} inconsistent with {n}-octet APDU")


def serialize_command(c: CommandApdu) -> bytes:
    out = bytearray((c.cla, c.ins, c.p1, c.p2))
    if c.data:
        out.append(len(c.data))
        out += c.data
    if c.le is not None:
        out.append(c.le & 0xFF)
    return bytes(out)


def serialize_response(r: ResponseApdu) -> bytes:
    return r.data + r.sw.to_bytes(2, "big")


def parse_response(raw: bytes) -> ResponseApdu:
    raw = bytes(raw)
    if len(raw) < 2:
        raise MalformedApduError("response shorter than a status word")
    return ResponseApdu(raw[:-2], int.from_bytes(raw[-2:], "big"))


def to_hex(data: bytes) -> str:
    return " ".join(f"{b:02X}" for b in data)


def from_hex(text: str) -> bytes:
    """Parse hex with or without separating whitespace."""
    try:
        return bytes.fromhex("".join(text.split()))
    except ValueError as exc:
        raise ValueError(f"bad hex string {text!r}") from exc
