"""Configuration-driven command line front end.

Scenarios are described by a small INI-style file::

    [scenario]
    name = propagation

    [params]
    ring_size = 80
    site = 30
    coupling = 0.1
    squeezing = 0.8
    model = spring

    [output]
    directory = out
    formats = csv,svg

``oscnet run config.cfg [--set key=value ...] [--out DIR] [--threads K]
[--formats csv,svg]`` validates the configuration (unknown keys are rejected
with a nearest-key hint), runs the scenario deterministically and writes a
CSV series, an optional self-contained SVG plot, and a JSON metadata sidecar
with the fully resolved configuration.  ``oscnet list`` prints the catalog.

Exit codes: 0 success, 2 configuration/validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import difflib
import json
import os
import sys

import numpy as np

from . import studies
from .network import PositiveDefiniteError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(Exception):
    pass


def _parse_floats(text: str) -> list[float]:
    """Comma list ("0.1,0.2") or range syntax ("start:stop:step", inclusive)."""
    text = text.strip()
    if ":" in text:
        parts = [p.strip() for p in text.split(":")]
        if len(parts) != 3:
            raise ConfigError(f"range syntax is start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ConfigError("range step must be positive")
        return [float(v) for v in np.round(np.arange(start, stop + 0.5 * step, step), 12)]
    return [float(p) for p in text.split(",") if p.strip()]


def _parse_ints(text: str) -> list[int]:
    vals = _parse_floats(text)
    out = []
    for v in vals:
        if abs(v - round(v)) > 1e-9:
            raise ConfigError(f"expected integers, got {v}")
        out.append(int(round(v)))
    return out


_PARSERS = {
    "int": lambda s: int(s),
    "float": lambda s: float(s),
    "str": lambda s: s.strip(),
    "floats": _parse_floats,
    "ints": _parse_ints,
    "optional_float": lambda s: None if s.strip().lower() in ("", "none") else float(s),
}


def _field(kind: str, default, help_text: str):
    return {"kind": kind, "default": default, "help": help_text}


SCENARIOS: dict[str, dict] = {
    "propagation": {
        "runner": studies.propagation_study,
        "reference": "entanglement arrival curve: squeezed pair injected into a ring, "
        "negativity between the free mode and site n over time",
        "params": {
            "ring_size": _field("int", 80, "number of ring sites"),
            "site": _field("int", 30, "observed ring site"),
            "coupling": _field("float", 0.1, "nearest-neighbour coupling"),
            "squeezing": _field("float", 0.8, "two-mode squeezing parameter"),
            "model": _field("str", "spring", "spring | rwa"),
            "t_max": _field("optional_float", None, "time window (default 1.3x predicted arrival)"),
            "dt": _field("optional_float", None, "sampling step (default min(0.1, 0.05/c))"),
        },
    },
    "efficiency": {
        "runner": studies.transfer_efficiency_sweep,
        "reference": "transfer efficiency N_f/N_i versus input squeezing; "
        "non-monotonic for the spring coupling, monotone for the number-conserving one",
        "params": {
            "site": _field("int", 30, "observed ring site"),
            "coupling": _field("float", 0.1, "nearest-neighbour coupling"),
            "model": _field("str", "spring", "spring | rwa"),
            "r_values": _field("floats", [round(0.1 * k, 10) for k in range(1, 31)],
                               "squeezing grid (list or start:stop:step)"),
            "ring_size": _field("int", 80, "number of ring sites"),
            "t_max": _field("optional_float", None, "time window"),
            "dt": _field("optional_float", None, "sampling step"),
        },
    },
    "spontaneous": {
        "runner": studies.spontaneous_creation_study,
        "reference": "spontaneous entanglement between the ends of an open chain after a "
        "sudden coupling switch-on; optional thermal start and per-site Ohmic baths",
        "params": {
            "length": _field("int", 30, "chain length"),
            "coupling": _field("float", 0.1, "nearest-neighbour coupling"),
            "t_max": _field("optional_float", None, "time window"),
            "dt": _field("optional_float", None, "sampling step"),
            "temperature_ratio": _field("optional_float", None, "omega/T of the initial thermal state"),
            "bath_quality": _field("optional_float", None, "Q factor of per-site Ohmic baths"),
            "bath_size": _field("int", 50, "oscillators per bath"),
            "bath_cutoff": _field("float", 5.0, "bath cutoff frequency"),
        },
    },
    "endpoint_bulk": {
        "runner": studies.endpoint_vs_bulk,
        "reference": "first-peak comparison of a chain-end pair against an equally "
        "separated mid-chain pair (spontaneous creation)",
        "params": {
            "length": _field("int", 30, "short chain length (pair at its ends)"),
            "bulk_length": _field("int", 90, "long chain length (pair mid-chain)"),
            "coupling": _field("float", 0.1, "nearest-neighbour coupling"),
            "t_max": _field("optional_float", None, "time window"),
            "dt": _field("optional_float", None, "sampling step"),
        },
    },
    "block": {
        "runner": studies.block_entanglement_study,
        "reference": "negativity between the free mode and a growing block of ring sites "
        "at the single-site first-peak time (dispersion recovery)",
        "params": {
            "ring_size": _field("int", 70, "number of ring sites"),
            "center": _field("int", 20, "block center site"),
            "widths": _field("ints", list(range(1, 22, 2)), "odd block widths"),
            "squeezing": _field("float", 0.8, "two-mode squeezing parameter"),
            "coupling": _field("float", 0.1, "nearest-neighbour coupling"),
            "model": _field("str", "spring", "spring | rwa"),
            "at_time": _field("optional_float", None, "evaluation time (default: measured first peak)"),
        },
    },
    "perturbation": {
        "runner": studies.perturbation_monte_carlo,
        "reference": "Monte Carlo robustness of end-to-end transmission under random "
        "coupling disorder, with a cubic fit of the mean peak ratio",
        "params": {
            "length": _field("int", 30, "chain length"),
            "coupling": _field("float", 0.1, "mean coupling"),
            "squeezing": _field("float", 0.8, "two-mode squeezing parameter"),
            "rel_sigmas": _field("floats", [0.05, 0.1, 0.15, 0.2, 0.25], "disorder grid sigma/c"),
            "realizations": _field("int", 200, "samples per grid point"),
            "seed": _field("int", 0, "master seed"),
            "t_max": _field("optional_float", None, "time window"),
            "dt": _field("optional_float", None, "sampling step"),
        },
        "accepts_threads": True,
    },
    "perfect_transfer": {
        "runner": studies.perfect_transfer_check,
        "reference": "engineered-coupling chain: transfer amplitude against the "
        "sin(ct/2)^(M-1) law and the end-to-end swap at t = pi/c",
        "params": {
            "length": _field("int", 10, "chain length"),
            "coupling": _field("float", 0.02, "coupling scale"),
            "squeezing": _field("float", 0.8, "two-mode squeezing parameter"),
            "samples": _field("int", 61, "time samples in [0, pi/c]"),
        },
    },
    "swap": {
        "runner": studies.two_node_swap,
        "reference": "exact two-site swap on a ring: kernel conditions and negativity "
        "conservation at t = l pi with c = ((2k+1)^2/l^2 - 1)/4",
        "params": {
            "k": _field("int", 1, "swap integer k"),
            "l": _field("int", 2, "swap integer l"),
            "squeezing": _field("float", 0.8, "two-mode squeezing parameter"),
            "dt": _field("float", 0.01, "sampling step"),
        },
    },
    "y_shape": {
        "runner": studies.y_shape_study,
        "reference": "beamsplitter analogue: arm-end entanglement of a Y-shaped network "
        "for squeezed versus thermal single-site input",
        "params": {
            "base_length": _field("int", 10, "base chain length"),
            "arm_length": _field("int", 30, "length of each arm"),
            "coupling": _field("float", 0.2, "nearest-neighbour coupling"),
            "input_kind": _field("str", "squeezed", "squeezed | thermal"),
            "z": _field("float", 10.0, "excitation strength of site 1"),
            "t_max": _field("optional_float", None, "time window"),
            "dt": _field("optional_float", None, "sampling step"),
            "model": _field("str", "rwa", "spring | rwa"),
        },
    },
    "switch": {
        "runner": studies.junction_switch_sweep,
        "reference": "junction switching: first-peak arm-end entanglement versus the "
        "junction coupling, eigenfrequency (Lorentzian response) or mass",
        "params": {
            "base_length": _field("int", 10, "base chain length"),
            "arm_length": _field("int", 30, "length of each arm"),
            "coupling": _field("float", 0.2, "nearest-neighbour coupling"),
            "parameter": _field("str", "frequency", "coupling | frequency | mass"),
            "values": _field("floats", [1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0], "sweep grid"),
            "input_kind": _field("str", "squeezed", "squeezed | thermal"),
            "z": _field("float", 10.0, "excitation strength of site 1"),
            "t_max": _field("optional_float", None, "time window"),
            "dt": _field("optional_float", None, "sampling step"),
            "model": _field("str", "rwa", "spring | rwa"),
        },
    },
    "interferometer": {
        "runner": studies.interferometer_sweep,
        "reference": "two-arm interferometer: end-to-end negativity at a fixed probe "
        "time versus the upper-arm frequency profile; interference fringes",
        "params": {
            "left_length": _field("int", 9, "left chain length"),
            "upper_length": _field("int", 30, "upper arm length"),
            "lower_length": _field("int", 30, "lower arm length"),
            "right_length": _field("int", 10, "right chain length"),
            "coupling": _field("float", 0.2, "nearest-neighbour coupling"),
            "omegas": _field("floats", [round(1.0 + 0.01 * k, 10) for k in range(101)],
                             "frequency grid"),
            "probe_time": _field("float", 250.0, "evaluation time"),
            "squeezing": _field("float", 0.8, "two-mode squeezing parameter"),
            "model": _field("str", "rwa", "spring | rwa"),
        },
    },
}


def list_scenarios() -> list[tuple[str, dict]]:
    """Catalog of scenarios, alphabetized."""
    return sorted(SCENARIOS.items())


def _suggest(key: str, candidates) -> str:
    close = difflib.get_close_matches(key, list(candidates), n=1)
    return f" (did you mean {close[0]!r}?)" if close else ""


def _resolve_config(parser: configparser.ConfigParser, overrides: list[str]) -> dict:
    if not parser.has_section("scenario") or not parser.has_option("scenario", "name"):
        raise ConfigError("config must contain [scenario] with a 'name' key")
    for section in parser.sections():
        if section not in ("scenario", "params", "output"):
            raise ConfigError(f"unknown section [{section}]")
    name = parser.get("scenario", "name").strip()
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}{_suggest(name, SCENARIOS)}")
    schema = SCENARIOS[name]["params"]
    raw: dict[str, str] = {}
    if parser.has_section("params"):
        raw.update(parser.items("params"))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, value = item.split("=", 1)
        raw[key.strip()] = value
    params = {}
    for key, value in raw.items():
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} for scenario {name!r}{_suggest(key, schema)}")
        field = schema[key]
        try:
            params[key] = _PARSERS[field["kind"]](value) if isinstance(value, str) else value
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"invalid value for {key!r}: {exc}") from exc
    for key, field in schema.items():
        params.setdefault(key, field["default"])
    output = {"directory": "out", "formats": ["csv"]}
    if parser.has_section("output"):
        for key, value in parser.items("output"):
            if key == "directory":
                output["directory"] = value.strip()
            elif key == "formats":
                output["formats"] = [f.strip() for f in value.split(",") if f.strip()]
            else:
                raise ConfigError(f"unknown key {key!r} in [output]{_suggest(key, ('directory', 'formats'))}")
    for fmt in output["formats"]:
        if fmt not in ("csv", "svg"):
            raise ConfigError(f"unknown output format {fmt!r}")
    return {"scenario": name, "params": params, "output": output}


def _write_csv(path: str, result: studies.StudyResult) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(result.columns) + "\n")
        for row in result.rows:
            fh.write(",".join(format(v, ".12g") for v in row) + "\n")


def _write_svg(path: str, result: studies.StudyResult) -> None:
    width, height = 640, 440
    ml, mr, mt, mb = 70, 20, 30, 50
    x = result.rows[:, 0]
    ys = [result.rows[:, k] for k in range(1, result.rows.shape[1])]
    x0, x1 = float(x.min()), float(x.max())
    y0 = min(float(y.min()) for y in ys)
    y1 = max(float(y.max()) for y in ys)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    def sx(v):
        return ml + (v - x0) / (x1 - x0) * (width - ml - mr)
    def sy(v):
        return height - mb - (v - y0) / (y1 - y0) * (height - mt - mb)
    colors = ("#1f5fa8", "#c44e52", "#55a868")
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width/2:.0f}" y="18" text-anchor="middle" font-size="13">{result.scenario}</text>',
        f'<line x1="{ml}" y1="{height-mb}" x2="{width-mr}" y2="{height-mb}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{height-mb}" stroke="black"/>',
    ]
    for k, y in enumerate(ys):
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
        lines.append(
            f'<polyline points="{pts}" fill="none" stroke="{colors[k % len(colors)]}" stroke-width="1.2"/>'
        )
    for v, anchor in ((x0, "start"), (x1, "end")):
        lines.append(
            f'<text x="{sx(v):.0f}" y="{height-mb+16}" text-anchor="{anchor}" font-size="11">{v:.6g}</text>'
        )
    for v in (y0, y1):
        lines.append(
            f'<text x="{ml-6}" y="{sy(v)+4:.0f}" text-anchor="end" font-size="11">{v:.6g}</text>'
        )
    lines.append(
        f'<text x="{(ml+width-mr)/2:.0f}" y="{height-12}" text-anchor="middle" font-size="12">{result.columns[0]}</text>'
    )
    lines.append(
        f'<text x="16" y="{(mt+height-mb)/2:.0f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {(mt+height-mb)/2:.0f})">{", ".join(result.columns[1:])}</text>'
    )
    lines.append("</svg>")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _write_sidecar(path: str, resolved: dict, result: studies.StudyResult) -> None:
    payload = {
        "resolved_config": _jsonable(resolved),
        "derived": _jsonable(result.derived),
        "metadata": _jsonable(result.metadata),
        "versions": {
            "oscnet": "0.1.0",
            "numpy": np.__version__,
        },
    }
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run(config_path: str, overrides=(), out_dir: str | None = None,
        threads: int | None = None, formats: str | None = None) -> int:
    """Run one scenario from a config file.  Returns the process exit code."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(config_path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except configparser.Error as exc:
        print(f"error: malformed config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        resolved = _resolve_config(parser, list(overrides))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if out_dir is not None:
        resolved["output"]["directory"] = out_dir
    if formats is not None:
        fmts = [f.strip() for f in formats.split(",") if f.strip()]
        for fmt in fmts:
            if fmt not in ("csv", "svg"):
                print(f"error: unknown output format {fmt!r}", file=sys.stderr)
                return EXIT_CONFIG
        resolved["output"]["formats"] = fmts
    name = resolved["scenario"]
    spec = SCENARIOS[name]
    kwargs = dict(resolved["params"])
    if spec.get("accepts_threads") and threads is not None:
        kwargs["threads"] = max(1, threads)
    try:
        result = spec["runner"](**kwargs)
    except (PositiveDefiniteError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    directory = resolved["output"]["directory"]
    os.makedirs(directory, exist_ok=True)
    base = os.path.join(directory, name)
    _write_csv(base + ".csv", result)
    if "svg" in resolved["output"]["formats"]:
        _write_svg(base + ".svg", result)
    _write_sidecar(base + ".meta.json", resolved, result)
    print(f"wrote {base}.csv" + (f" and {base}.svg" if "svg" in resolved["output"]["formats"] else ""))
    return EXIT_OK


def _print_catalog() -> None:
    for name, spec in list_scenarios():
        print(name)
        print(f"  {spec['reference']}")
        for key, field in spec["params"].items():
            default = field["default"]
            if isinstance(default, list) and len(default) > 6:
                default = f"[{default[0]}..{default[-1]}] ({len(default)} values)"
            print(f"    {key} = {default}  ({field['kind']}) {field['help']}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="oscnet",
        description="Entanglement dynamics in coupled harmonic-oscillator networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a scenario from a config file")
    p_run.add_argument("config", help="path to the scenario config")
    p_run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a [params] key")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                       help="worker threads for Monte Carlo scenarios")
    p_run.add_argument("--formats", default=None, help="comma list: csv,svg")
    sub.add_parser("list", help="list scenarios and their parameters")
    args = parser.parse_args(argv)
    if args.command == "list":
        _print_catalog()
        return EXIT_OK
    return run(args.config, overrides=args.set, out_dir=args.out,
               threads=args.threads, formats=args.formats)


if __name__ == "__main__":
    sys.exit(main())
