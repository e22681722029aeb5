"""
Command-line front end.

``bihat verify CONFIG``   run one experiment, write report JSON and CSV
``bihat list``            print the registries
``bihat report PATH``     re-serialize a report (``--format csv|json|summary``)

Exit codes: 0 pass, 1 inequality failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from pathlib import Path

import jsonschema

from . import harness
from .symbols import SYMBOLS
from .testbed import FAMILY_KINDS, FunctionFamily
from .weights import BallFamily

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["id", "check_kind"],
    "properties": {
        "id": {"type": "string", "minLength": 1, "pattern": "^[A-Za-z0-9_.-]+$"},
        "check_kind": {"enum": list(harness.CHECK_KINDS)},
        "inequality": {"type": "string"},
        "n": {"enum": [1, 2]},
        "N_list": {"type": "array", "items": {"type": "integer", "minimum": 8}, "minItems": 1},
        "L": _POS,
        "exponents": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "p1": _POS, "p2": _POS, "s": _NUM, "alpha": _NUM, "epsilon": _POS, "m": _NUM,
                "lambda1": {"type": "number", "minimum": 0}, "lambda2": {"type": "number", "minimum": 0},
                "t": _POS, "slack": {"type": "number", "minimum": 0},
                "q": {"oneOf": [_POS, {"const": "inf"}]},
            },
        },
        "families": {
            "type": "array",
            "minItems": 1,
            "maxItems": 2,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["kind"],
                "properties": {
                    "kind": {"enum": list(FAMILY_KINDS)},
                    "params": {"type": "object", "additionalProperties": {
                        "oneOf": [_NUM, {"type": "array", "items": _NUM, "minItems": 1}]}},
                    "seed": {"type": "integer"},
                },
            },
        },
        "ball_family": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "stride": {"type": "integer", "minimum": 1},
                "radii": {"oneOf": [{"const": "dyadic"}, {"type": "array", "items": _POS, "minItems": 1}]},
            },
        },
        "symbol": {
            "type": "object",
            "additionalProperties": False,
            "required": ["key"],
            "properties": {"key": {"enum": sorted(SYMBOLS)}, "params": {"type": "object"}},
        },
        "tolerance": _POS,
        "stability_factor": {"type": "number", "minimum": 1},
        "output_path": {"type": "string", "minLength": 1},
        "ranges": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "l_max": {"type": "integer", "minimum": 0},
                "log2_a": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
                "log2_b": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
                "nms": {"type": "array", "minItems": 1,
                        "items": {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3}},
            },
        },
        "seed": {"type": "integer"},
    },
}


class ConfigError(Exception):
    """Configuration problem, reported as ``path:line: message``."""


def _line_of(text: str, path) -> int:
    """Best-effort line of the JSON element at ``path`` (1 if not found)."""
    pos = 0
    line_pos = 0
    for key in path:
        if isinstance(key, str):
            m = re.compile(r'"' + re.escape(key) + r'"\s*:').search(text, pos)
            if not m:
                break
            pos = m.start()
            line_pos = pos
        else:
            # array index: step over opening bracket and preceding elements
            start = text.find("[", pos)
            if start < 0:
                break
            pos = _nth_element(text, start, key)
            line_pos = pos
    return text.count("\n", 0, line_pos) + 1


def _nth_element(text: str, start: int, index: int) -> int:
    """Offset of element ``index`` of the array opening at ``start``."""
    if index == 0:
        j = start + 1
        while j < len(text) and text[j] in " \t\r\n":
            j += 1
        return j
    depth = 0
    count = 0
    i = start + 1
    in_str = False
    while i < len(text):
        c = text[i]
        if in_str:
            if c == "\\":
                i += 1
            elif c == '"':
                in_str = False
        elif c == '"':
            in_str = True
        elif c in "[{":
            depth += 1
        elif c in "]}":
            if depth == 0:
                return i
            depth -= 1
        elif c == "," and depth == 0:
            count += 1
            if count == index:
                j = i + 1
                while j < len(text) and text[j] in " \t\r\n":
                    j += 1
                return j
        i += 1
    return start


def load_config(path: str | Path) -> tuple[dict, str]:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{p}:1: cannot read config: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        err = errors[0]
        where = "/".join(str(k) for k in err.absolute_path) or "<root>"
        raise ConfigError(f"{p}:{_line_of(text, list(err.absolute_path))}: {where}: {err.message}")
    return data, text


def build_experiment(cfg: dict, text: str = "", source: str = "<config>") -> harness.Experiment:
    def fail(key_path, msg):
        raise ConfigError(f"{source}:{_line_of(text, key_path)}: {msg}")

    kind = cfg["check_kind"]
    key = cfg.get("inequality", cfg["id"] if kind != "discrete_lemma" else "lemma_lem")
    fams = []
    for i, f in enumerate(cfg.get("families", [])):
        try:
            fams.append(FunctionFamily(f["kind"], f.get("params", {}), f.get("seed", cfg.get("seed", 0))))
        except ValueError as exc:
            fail(["families", i], str(exc))
    bf = cfg.get("ball_family", {})
    radii = bf.get("radii", "dyadic")
    try:
        ball_family = BallFamily(divisions=bf.get("stride", 16), radii=None if radii == "dyadic" else tuple(radii))
    except ValueError as exc:
        fail(["ball_family"], str(exc))
    if kind != "discrete_lemma" and not fams:
        fail(["families"] if "families" in cfg else [], "families: at least one family is required")
    try:
        return harness.Experiment(
            id=cfg["id"], check_kind=kind, inequality=key, n=cfg.get("n", 1),
            N_list=tuple(cfg.get("N_list", (128, 256))), L=cfg.get("L", 2 * math.pi),
            exponents=dict(cfg.get("exponents", {})), families=fams, ball_family=ball_family,
            symbol=cfg.get("symbol"), tolerance=cfg.get("tolerance", 1e-10),
            stability_factor=cfg.get("stability_factor", 2.0), ranges=cfg.get("ranges"),
            seed=cfg.get("seed", 0),
        )
    except ValueError as exc:
        msg = str(exc)
        anchor = ["exponents"] if ("q" in msg or "exponent" in msg) else (
            ["N_list"] if "resolution" in msg else ["inequality"] if "key" in msg else [])
        fail(anchor, msg)


def _outputs(cfg: dict, config_path: Path) -> tuple[Path, Path]:
    base = cfg.get("output_path")
    if base is None:
        stem = config_path.parent / f"{cfg['id']}.report"
    else:
        stem = Path(base)
        if not stem.is_absolute():
            stem = config_path.parent / stem
        if stem.suffix in (".json", ".csv"):
            stem = stem.with_suffix("")
    return stem.parent / (stem.name + ".json"), stem.parent / (stem.name + ".csv")


def cmd_verify(config_path: str, out=None, err=None) -> int:
    out, err = out or sys.stdout, err or sys.stderr
    try:
        cfg, text = load_config(config_path)
        exp = build_experiment(cfg, text, str(config_path))
    except ConfigError as exc:
        print(f"config error: {exc}", file=err)
        return EXIT_USAGE
    try:
        report = harness.run_experiment(exp)
    except ValueError as exc:
        print(f"config error: {config_path}:1: {exc}", file=err)
        return EXIT_USAGE
    jpath, cpath = _outputs(cfg, Path(config_path))
    jpath.parent.mkdir(parents=True, exist_ok=True)
    jpath.write_text(report.to_json())
    cpath.write_bytes(report.to_csv().encode())
    out.write(report.summary())
    out.write(f"report: {jpath}\ncsv: {cpath}\n")
    return EXIT_PASS if report.verdict else EXIT_FAIL


def cmd_list(out=None) -> int:
    out = out or sys.stdout
    reg = harness.registry_listing()
    reg["symbols"] = sorted(SYMBOLS)
    reg["families"] = sorted(FAMILY_KINDS)
    out.write(json.dumps(reg, indent=2, sort_keys=True) + "\n")
    return EXIT_PASS


def cmd_report(report_path: str, fmt: str = "summary", out=None, err=None) -> int:
    out, err = out or sys.stdout, err or sys.stderr
    p = Path(report_path)
    try:
        text = p.read_text()
    except OSError as exc:
        print(f"error: cannot read report {p}: {exc.strerror}", file=err)
        return EXIT_USAGE
    if fmt == "json":
        # already canonical; validate before echoing
        try:
            json.loads(text)
        except json.JSONDecodeError as exc:
            print(f"error: {p}:{exc.lineno}: invalid report: {exc.msg}", file=err)
            return EXIT_USAGE
        out.write(text)
        return EXIT_PASS
    try:
        report = harness.VerificationReport.from_dict(json.loads(text))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        print(f"error: invalid report {p}: {exc}", file=err)
        return EXIT_USAGE
    out.write(report.to_csv() if fmt == "csv" else report.summary())
    return EXIT_PASS


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def main(argv=None) -> int:
    parser = _Parser(prog="bihat", description="Numerical checks of bilinear potential and Leibniz-type estimates.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    v = sub.add_parser("verify", help="run one experiment config")
    v.add_argument("config")
    sub.add_parser("list", help="print registries")
    r = sub.add_parser("report", help="re-serialize a report")
    r.add_argument("path")
    r.add_argument("--format", choices=("csv", "json", "summary"), default="summary")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_PASS
    try:
        if args.command == "verify":
            return cmd_verify(args.config)
        if args.command == "list":
            return cmd_list()
        return cmd_report(args.path, args.format)
    except Exception as exc:  # never leak another exit code
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
