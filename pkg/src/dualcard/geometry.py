"""Card antenna geometries and the catalog of examined cards."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass

import numpy as np

from .params import DEFAULTS

# ID-1 card body, 85.60 mm x 53.98 mm
ID1_WIDTH = 85.60e-3
ID1_HEIGHT = 53.98e-3


class InvalidGeometryError(ValueError):
    pass


@dataclass(frozen=True)
class AntennaGeometry:
    """Rectangular spiral loop, dimensions measured center-of-wire (metres)."""

    width: float
    height: float
    turns: int
    pitch: float = DEFAULTS.pitch
    wire_radius: float = DEFAULTS.wire_radius

    def __post_init__(self):
        if not (0 < self.width <= ID1_WIDTH and 0 < self.height <= ID1_HEIGHT):
            raise InvalidGeometryError(
                f"{self.width * 1e3:g} x {self.height * 1e3:g} mm does not fit an ID-1 card body")
        if isinstance(self.turns, bool) or int(self.turns) != self.turns or self.turns < 1:
            raise InvalidGeometryError(f"turns must be a positive integer, got {self.turns!r}")
        if not self.wire_radius > 0 or not self.pitch > 2 * self.wire_radius:
            raise InvalidGeometryError("pitch must exceed the wire diameter")
        if not 2 * self.turns * self.pitch < min(self.width, self.height):
            raise InvalidGeometryError("windings do not fit inside the outline")

    @classmethod
    def from_mm(cls, width_mm, height_mm, turns, pitch_mm=None, wire_radius_mm=None):
        kw = {}
        if pitch_mm is not None:
            kw["pitch"] = pitch_mm / 1000
        if wire_radius_mm is not None:
            kw["wire_radius"] = wire_radius_mm / 1000
        return cls(width_mm / 1000, height_mm / 1000, turns, **kw)

    def turn_outline(self, i: int) -> tuple[float, float]:
        shrink = 2 * i * self.pitch
        return self.width - shrink, self.height - shrink

    @property
    def wire_length(self) -> float:
        return sum(2 * sum(self.turn_outline(i)) for i in range(self.turns))

    @property
    def turn_area_sum(self) -> float:
        """Sum of enclosed areas over all turns (flux linkage per unit B)."""
        return sum(w * h for w, h in map(self.turn_outline, range(self.turns)))


@dataclass(frozen=True)
class Segment:
    """Straight wire segment; current flows from ``start`` to ``end``."""

    start: tuple[float, float]
    end: tuple[float, float]

    @property
    def vector(self) -> np.ndarray:
        return np.subtract(self.end, self.start)

    @property
    def length(self) -> float:
        return float(np.hypot(*self.vector))


def segment_decomposition(g: AntennaGeometry) -> list[Segment]:
    """Concentric-rectangle approximation of the spiral.

    Turn ``i`` is a closed rectangle shrunk by ``i * pitch`` on every side,
    centred on the origin and traversed counter-clockwise, so all turns carry
    the same circulating current.
    """
    if not isinstance(g, AntennaGeometry):
        raise InvalidGeometryError(f"expected AntennaGeometry, got {type(g).__name__}")
    segments = []
    for i in range(g.turns):
        w, h = g.turn_outline(i)
        x0, y0, x1, y1 = -w / 2, -h / 2, w / 2, h / 2
        corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0)]
        segments.extend(Segment(a, b) for a, b in zip(corners, corners[1:]))
    return segments


@dataclass(frozen=True)
class CardCatalogEntry:
    id: str
    manufacturer: str
    product: str
    geometry: AntennaGeometry
    measured_f0: float
    figure_ref: str

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "CardCatalogEntry":
        d = dict(d)
        d["geometry"] = AntennaGeometry(**d["geometry"])
        return cls(**d)


# (id, manufacturer, product, width mm, height mm, windings, f0 MHz, figure)
_CATALOG_ROWS = [
    ("card-a", "Austria Card", "Maestro (Bankomatkarte) 01/13 AUSTRIACARD 204/015", 80, 34, 4, 17.98, "Fig. 6"),
    ("card-b", "Austria Card", "Visa 09/14 AUSTRIACARD 54833/004", 80, 34, 4, 18.04, "Fig. 7"),
    ("card-c", "Winter AG / Trueb AG", "MasterCard picture card ICA 7751", 80, 34, 4, 53.31, "Fig. 8"),
    ("card-d", "Gemalto", "MasterCard picture card GEMALTOSGP U1061546B", 74, 22, 4, 14.49, "Fig. 9"),
    ("card-e", "Gemalto", "IDCore 3010 blank card", 74, 44, 4, 18.11, "Fig. 10"),
    ("card-f", "unknown", "Athena IDProtect blank card", 80, 49, 2, 76.49, "Fig. 11"),
    ("card-g", "unknown", "NXP JCOP41 V2.3.1 blank card", 80, 49, 3, 29.66, "Fig. 12(a)"),
    ("card-h", "unknown", "NXP J3A081 DI / JCOP V2.4.1 R2 blank card", 80, 49, 5, 17.09, "Fig. 12(b)"),
    ("card-i", "unknown", "NXP J3D081 DI / JCOP V2.4.2 R2 blank card", 78, 46, 5, 17.92, "Fig. 12(c)"),
    ("card-j", "unknown", "NXP JCOP41 engineering sample", 78, 48, 4, 28.65, "Fig. 12(d)"),
]


def catalog() -> list[CardCatalogEntry]:
    """The ten examined cards, in figure order (a) to (j)."""
    return [
        CardCatalogEntry(cid, maker, product, AntennaGeometry.from_mm(w, h, n), f0 * 1e6, fig)
        for cid, maker, product, w, h, n, f0, fig in _CATALOG_ROWS
    ]


def lookup(card_id: str) -> CardCatalogEntry:
    for entry in catalog():
        if entry.id == card_id:
            return entry
    raise KeyError(card_id)


CSV_COLUMNS = ["id", "manufacturer", "product", "width_mm", "height_mm", "turns", "measured_f0_mhz"]


def catalog_to_csv(entries: list[CardCatalogEntry] | None = None) -> str:
    entries = catalog() if entries is None else entries
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for e in entries:
        g = e.geometry
        writer.writerow([e.id, e.manufacturer, e.product, f"{g.width * 1e3:.10g}",
                         f"{g.height * 1e3:.10g}", g.turns, f"{e.measured_f0 / 1e6:.10g}"])
    return buf.getvalue()


def catalog_from_csv(text: str) -> list[CardCatalogEntry]:
    """Inverse of :func:`catalog_to_csv`; pitch, wire radius and figure use defaults."""
    entries = []
    for row in csv.DictReader(io.StringIO(text)):
        geometry = AntennaGeometry.from_mm(float(row["width_mm"]), float(row["height_mm"]),
                                           int(row["turns"]))
        entries.append(CardCatalogEntry(row["id"], row["manufacturer"], row["product"], geometry,
                                        float(row["measured_f0_mhz"]) * 1e6, row.get("figure_ref", "")))
    return entries
