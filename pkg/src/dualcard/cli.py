"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 scenario failure, 3 model or
validation error. ``$DUALCARD_CONFIG`` names a JSON parameter file; flags
override it.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

from . import __version__
from .circuit import (
    ProbeSetup,
    calibrate_chip_capacitance,
    calibrate_cut_capacitance,
    circuit_from_geometry,
    detect_resonance,
    loop_inductance,
    resonant_frequency_closed_form,
    s11_sweep,
)
from .geometry import AntennaGeometry, catalog, catalog_to_csv, lookup
from .params import CONFIG_ENV_VAR, load_params
from .scenario import ScenarioError, builtin, list_builtin, load_scenario, run
from .states import (
    CHIP_PROFILES,
    PROTOTYPES,
    READER_ALIASES,
    READER_CLASSES,
    PhysicalState,
    SeriesSwitch,
    ShuntSwitch,
    apply_state,
    cut_progression_csv,
    cut_sweeps,
    power_ratio,
    reader_class,
    readability,
)

EXIT_OK, EXIT_USAGE, EXIT_SCENARIO, EXIT_MODEL = 0, 1, 2, 3

CHIP_ALIASES = {"mifare": "mifare_classic", "dual": "dual_interface"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; 2 is reserved for scenario failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- shared option groups -------------------------------------------------------

def _common_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("output and configuration")
    g.add_argument("--config", metavar="PATH",
                   help=f"JSON parameter file (default: ${CONFIG_ENV_VAR} if set)")
    g.add_argument("--format", choices=("text", "csv"), default="text", help="output format (default: text)")
    g.add_argument("-o", "--out-dir", metavar="DIR",
                   help="write output files into DIR instead of printing to stdout")
    m = p.add_argument_group("model overrides")
    m.add_argument("--k-probe", type=float, metavar="K", help="probe-to-card coupling coefficient")
    m.add_argument("--l-probe-uh", type=float, metavar="UH", help="probe loop inductance in uH")
    m.add_argument("--c-cut-pf", type=float, metavar="PF", help="gap capacitance per cut in pF")
    m.add_argument("--noise-floor", type=float, metavar="X", help="resonance detection floor on |dS11|")
    m.add_argument("--f-start-mhz", type=float, metavar="MHZ", help="sweep start frequency")
    m.add_argument("--f-stop-mhz", type=float, metavar="MHZ", help="sweep stop frequency")
    m.add_argument("--points", type=int, metavar="N", help="number of sweep points")
    return p


def _card_args(p: argparse.ArgumentParser, required: bool = False) -> None:
    p.add_argument("card", nargs=None if required else "?", metavar="CARD",
                   help="catalog id (card-a .. card-j) or prototype id (proto-mifare, proto-dual)")
    g = p.add_argument_group("explicit geometry (instead of CARD)")
    g.add_argument("--width-mm", type=float, help="outer antenna width, centre of wire")
    g.add_argument("--height-mm", type=float, help="outer antenna height, centre of wire")
    g.add_argument("--turns", type=int, help="number of windings")
    g.add_argument("--pitch-mm", type=float, help="winding pitch (default from config)")
    g.add_argument("--wire-radius-mm", type=float, help="wire radius (default from config)")


def _state_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("physical state")
    g.add_argument("--cuts", type=int, default=0, help="windings severed at the slit location")
    g.add_argument("--series", choices=[s.value for s in SeriesSwitch], default="absent",
                   help="series switch / bridge state")
    g.add_argument("--shunt", choices=[s.value for s in ShuntSwitch], default="absent",
                   help="shunt switch state")
    g.add_argument("--module", action="store_true", help="chip module carries its own coil")


def _plot_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--plot", action="store_true",
                   help="also render a PNG figure (into --out-dir, default: current directory)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dualcard", description=__doc__.split("\n")[0],
                     formatter_class=argparse.RawDescriptionHelpFormatter,
                     epilog="Exit codes: 0 ok, 1 usage, 2 scenario failure, 3 model/validation error.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common_parent()

    p = sub.add_parser("analyze", parents=[common], help="inductance, calibrated capacitance, resonance")
    _card_args(p)
    p.add_argument("--measured", type=float, metavar="MHZ",
                   help="measured resonant frequency; calibrates the chip capacitance")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", parents=[common], help="probe-coupled S11 sweep as CSV")
    _card_args(p)
    p.add_argument("--f0-mhz", type=float, help="calibrate the chip capacitance to this resonance")
    _state_args(p)
    _plot_arg(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("cut", parents=[common], help="detected resonance after each winding cut")
    _card_args(p)
    p.add_argument("--f0-mhz", type=float, help="calibrate the chip capacitance to this resonance")
    p.add_argument("--calibrate-cut-mhz", type=float, metavar="MHZ",
                   help="choose the per-cut gap capacitance so one cut resonates here")
    _plot_arg(p)
    p.set_defaults(func=cmd_cut)

    p = sub.add_parser("readability", parents=[common], help="verdict matrix for a physical state")
    p.add_argument("--card", default="card-d", help="catalog or prototype id (default: card-d)")
    p.add_argument("--f0-mhz", type=float, help="calibrate the chip capacitance to this resonance")
    _state_args(p)
    p.add_argument("--reader", choices=sorted(READER_ALIASES) + sorted(READER_CLASSES) + ["all"],
                   default="all", help="reader class (default: all)")
    p.add_argument("--chip", choices=sorted(CHIP_ALIASES) + sorted(CHIP_PROFILES) + ["all"],
                   default="all", help="chip profile (default: all)")
    p.set_defaults(func=cmd_readability)

    p = sub.add_parser("simulate", parents=[common], help="run a scenario file or built-in scenario")
    p.add_argument("scenario", nargs="?", help="path to a JSON scenario or a built-in name")
    p.add_argument("--list", action="store_true", help="list built-in scenarios and exit")
    p.add_argument("--all", action="store_true", help="run every built-in scenario")
    p.add_argument("--json", action="store_true", help="print the report as JSON")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("catalog", parents=[common], help="the examined cards and their resonances")
    p.set_defaults(func=cmd_catalog)
    return parser


# -- helpers --------------------------------------------------------------------

def _params(args):
    def scaled(v, factor):
        return None if v is None else v * factor

    return load_params(
        args.config,
        k_probe=args.k_probe,
        l_probe=scaled(args.l_probe_uh, 1e-6),
        c_cut=scaled(args.c_cut_pf, 1e-12),
        noise_floor=args.noise_floor,
        f_start=scaled(args.f_start_mhz, 1e6),
        f_stop=scaled(args.f_stop_mhz, 1e6),
        n_points=args.points,
    )


def _resolve_card(args, params, f0_mhz=None):
    """(label, geometry, f0 or None, default chip) from CARD or geometry flags."""
    flags = (args.width_mm, args.height_mm, args.turns)
    if args.card is not None:
        if any(v is not None for v in flags):
            raise UsageError("give either CARD or geometry flags, not both")
        if args.card in PROTOTYPES:
            proto = PROTOTYPES[args.card]
            label, g, f0, chip = proto.id, proto.geometry, proto.nominal_f0, proto.chip
        else:
            e = lookup(args.card)
            label, g, f0, chip = e.id, e.geometry, e.measured_f0, "dual_interface"
    else:
        if any(v is None for v in flags):
            raise UsageError("need CARD or all of --width-mm, --height-mm, --turns")
        g = AntennaGeometry.from_mm(args.width_mm, args.height_mm, args.turns,
                                    args.pitch_mm if args.pitch_mm is not None else params.pitch * 1e3,
                                    args.wire_radius_mm if args.wire_radius_mm is not None
                                    else params.wire_radius * 1e3)
        label, f0, chip = f"{args.width_mm:g}x{args.height_mm:g}mm-{args.turns}t", None, "dual_interface"
    if f0_mhz is not None:
        f0 = f0_mhz * 1e6
    return label, g, f0, chip


def _card_by_id(card_id, params, f0_mhz=None):
    if card_id in PROTOTYPES:
        proto = PROTOTYPES[card_id]
        g, f0 = proto.geometry, proto.nominal_f0
    else:
        e = lookup(card_id)
        g, f0 = e.geometry, e.measured_f0
    if f0_mhz is not None:
        f0 = f0_mhz * 1e6
    return circuit_from_geometry(g, f0, params)


def _need_f0(f0):
    if f0 is None:
        raise UsageError("explicit geometry needs --f0-mhz to calibrate the chip capacitance")
    return f0


def _state(args) -> PhysicalState:
    return PhysicalState(cuts=args.cuts, series_switch=args.series, shunt_switch=args.shunt,
                         module_antenna=args.module)


def _emit(args, text: str, filename: str) -> None:
    if args.out_dir:
        path = Path(args.out_dir) / filename
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        print(f"wrote {path}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def _figure_path(args, filename: str) -> Path:
    return Path(args.out_dir or ".") / filename


def _table(rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n" for r in rows)


def _csv(rows: list[list]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _mhz(f):
    return "" if f is None else f"{f / 1e6:.4f}"


# -- subcommands ----------------------------------------------------------------

def cmd_analyze(args) -> int:
    params = _params(args)
    label, g, f0, _ = _resolve_card(args, params, args.measured)
    L = loop_inductance(g)
    C = calibrate_chip_capacitance(L, f0) if f0 is not None else None
    f_check = None
    if C is not None:
        f_check = resonant_frequency_closed_form(circuit_from_geometry(g, f0, params))
    if args.format == "csv":
        text = _csv([["card", "L_h", "C_chip_f", "f0_hz"],
                     [label, f"{L:.8e}", "" if C is None else f"{C:.8e}",
                      "" if f_check is None else f"{f_check:.8e}"]])
    else:
        lines = [f"card:    {label}",
                 f"outline: {g.width * 1e3:g} x {g.height * 1e3:g} mm, {g.turns} turns, "
                 f"pitch {g.pitch * 1e3:g} mm, wire radius {g.wire_radius * 1e3:g} mm",
                 f"L:       {L * 1e6:.4f} uH"]
        if C is not None:
            lines += [f"C_chip:  {C * 1e12:.3f} pF (calibrated)", f"f0:      {f_check / 1e6:.4f} MHz"]
        else:
            lines.append("C_chip:  not calibrated (pass --measured MHZ)")
        text = "\n".join(lines) + "\n"
    _emit(args, text, f"analyze_{label}.{args.format}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    params = _params(args)
    label, g, f0, _ = _resolve_card(args, params, args.f0_mhz)
    circuit = apply_state(circuit_from_geometry(g, _need_f0(f0), params), _state(args), params)
    sweep = s11_sweep(ProbeSetup.from_params(params), circuit, params.f_start, params.f_stop, params.n_points)
    f_det = detect_resonance(sweep, params.noise_floor)
    if args.format == "csv":
        _emit(args, sweep.to_csv(), f"sweep_{label}.csv")
    else:
        text = (f"card: {label}\nsweep: {params.f_start / 1e6:g}-{params.f_stop / 1e6:g} MHz, "
                f"{params.n_points} points\ndetected resonance: "
                + ("none" if f_det is None else f"{f_det / 1e6:.3f} MHz") + "\n")
        _emit(args, text, f"sweep_{label}.txt")
    if args.plot:
        from .plotting import plot_sweep
        path = plot_sweep(sweep, _figure_path(args, f"sweep_{label}.png"), label, f_det)
        print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def cmd_cut(args) -> int:
    params = _params(args)
    label, g, f0, _ = _resolve_card(args, params, args.f0_mhz)
    circuit = circuit_from_geometry(g, _need_f0(f0), params)
    if args.calibrate_cut_mhz is not None:
        params = params.replace(c_cut=calibrate_cut_capacitance(circuit.L, circuit.C_chip,
                                                                args.calibrate_cut_mhz * 1e6))
    sweeps = cut_sweeps(circuit, g.turns, params=params)
    rows = [(n, detect_resonance(s, params.noise_floor)) for n, s in enumerate(sweeps)]
    if args.format == "csv":
        _emit(args, cut_progression_csv(rows), f"cut_{label}.csv")
    else:
        table = [["cuts", "f_detected_MHz"]] + [[str(n), _mhz(f) or "none"] for n, f in rows]
        head = f"card: {label}, C_cut = {params.c_cut * 1e12:.4g} pF per cut\n"
        _emit(args, head + _table(table), f"cut_{label}.txt")
    if args.plot:
        from .plotting import plot_cut_progression
        path = plot_cut_progression(sweeps, rows, _figure_path(args, f"cut_{label}.png"),
                                    label, params.noise_floor)
        print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def cmd_readability(args) -> int:
    params = _params(args)
    circuit = _card_by_id(args.card, params, args.f0_mhz)
    state = _state(args)
    if args.reader == "all":
        readers = list(READER_CLASSES.values())
    else:
        readers = [reader_class(args.reader)]
    chips = list(CHIP_PROFILES.values()) if args.chip == "all" else [
        CHIP_PROFILES[CHIP_ALIASES.get(args.chip, args.chip)]]
    state_text = " ".join(f"{k}={v}" for k, v in state.to_dict().items() if k != "hardware_pin_enabled")
    rows = []
    for reader in readers:
        rho = power_ratio(circuit, state, reader.f_op, params, reader.module_matched)
        for chip in chips:
            verdict = readability(circuit, state, chip, reader, params)
            rows.append([reader.name, chip.name, rho, verdict.value])
    if args.format == "csv":
        text = _csv([["card", "state", "reader", "chip", "power_ratio", "verdict"]]
                    + [[args.card, state_text, r, c, f"{p:.6e}", v] for r, c, p, v in rows])
    else:
        text = (f"card: {args.card}\nstate: {state_text}\n"
                + _table([["reader", "chip", "power_ratio", "verdict"]]
                         + [[r, c, f"{p:.3e}", v] for r, c, p, v in rows]))
    _emit(args, text, f"readability_{args.card}.{args.format}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.list:
        sys.stdout.write("".join(f"{n}\n" for n in list_builtin()))
        return EXIT_OK
    if args.all:
        scenarios = [builtin(n) for n in list_builtin()]
    elif args.scenario is None:
        raise UsageError("name a scenario file or built-in (see --list)")
    elif Path(args.scenario).is_file():
        scenarios = [load_scenario(Path(args.scenario).read_text())]
    elif args.scenario in list_builtin():
        scenarios = [builtin(args.scenario)]
    else:
        raise ScenarioError(f"no scenario file or built-in named {args.scenario!r}")
    params = _params(args)
    status = EXIT_OK
    for s in scenarios:
        report = run(s, params)
        _emit(args, report.to_json() if args.json else report.to_text(),
              f"scenario_{s.name}.{'json' if args.json else 'txt'}")
        if report.failed_expected_pass:
            status = EXIT_SCENARIO
    return status


def cmd_catalog(args) -> int:
    params = _params(args)
    if args.format == "csv":
        _emit(args, catalog_to_csv(), "catalog.csv")
        return EXIT_OK
    rows = [["id", "manufacturer", "product", "outline_mm", "turns", "f0_MHz", "L_uH", "C_chip_pF"]]
    for e in catalog():
        c = circuit_from_geometry(e.geometry, e.measured_f0, params)
        g = e.geometry
        rows.append([e.id, e.manufacturer, e.product, f"{g.width * 1e3:g}x{g.height * 1e3:g}",
                     str(g.turns), f"{e.measured_f0 / 1e6:.2f}", f"{c.L * 1e6:.3f}", f"{c.C_chip * 1e12:.2f}"])
    _emit(args, _table(rows), "catalog.txt")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"dualcard {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyError as exc:
        print(f"dualcard {args.command}: unknown id {exc.args[0]!r}", file=sys.stderr)
        return EXIT_MODEL
    except (ValueError, OSError) as exc:
        # ScenarioError, InvalidGeometryError and InvalidStateError are ValueErrors
        print(f"dualcard {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
