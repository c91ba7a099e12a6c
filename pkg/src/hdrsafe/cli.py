"""Command line front end: check, run and types.

Exit status is 0 on success, 1 when the program is rejected (or faults at
run time), and 2 for usage errors and inputs that cannot be read or parsed.
"""

from __future__ import annotations

import argparse
import json
import sys

from hdrsafe import htypes, kernels
from hdrsafe.checker import check_program
from hdrsafe.control import EntriesError, TableState, load_entries_file, validate_well_behaved
from hdrsafe.diagnostics import group_bugs, render, summary
from hdrsafe.interp import BitStream, EvalError, InvalidAccess, run
from hdrsafe.parser import ParseError, parse_file

EXIT_OK, EXIT_REJECTED, EXIT_USAGE = 0, 1, 2


class _Fail(Exception):
    def __init__(self, message, code=EXIT_USAGE):
        super().__init__(message)
        self.code = code


def _load(args):
    try:
        return parse_file(args.file)
    except OSError as exc:
        raise _Fail(f"{args.file}: {exc.strerror}")
    except ParseError as exc:
        raise _Fail(render(exc.diagnostics, _mode(args)).rstrip("\n"))


def _mode(args):
    return "structured" if getattr(args, "structured", False) else "text"


def _entries(args, p):
    if not args.entries:
        return TableState()
    try:
        return load_entries_file(args.entries, p)
    except OSError as exc:
        raise _Fail(f"{args.entries}: {exc.strerror}")
    except EntriesError as exc:
        raise _Fail(f"{args.entries}, {exc}")


def _check(args, p):
    try:
        return check_program(p, cap=args.max_denotation)
    except htypes.DenotationTooLarge as exc:
        raise _Fail(f"{args.file}: {exc}; raise --max-denotation to continue")


def cmd_check(args, out, err):
    p = _load(args)
    result = _check(args, p)
    diags = list(result.diagnostics)
    if args.entries:
        diags += validate_well_behaved(p, _entries(args, p), result.assumptions)
    if args.structured:
        doc = {
            "file": args.file,
            "diagnostics": json.loads(render(diags, "structured")),
            "bugs": [
                {"category": str(b.category), "key": b.key, "instance": b.instance,
                 "sites": [str(s) for s in b.sites]}
                for b in group_bugs(diags)
            ],
        }
        out.write(json.dumps(doc, indent=2) + "\n")
    else:
        out.write(render(diags))
    err.write(summary(diags) + "\n")
    errors = any(d.is_error for d in diags)
    if errors or (args.fail_on_warning and diags):
        return EXIT_REJECTED
    return EXIT_OK


def _packet(text):
    text = text.strip()
    try:
        if text.lower().startswith("0b"):
            return BitStream.from_bits(text[2:])
        return BitStream.from_hex(text)
    except ValueError:
        raise _Fail(f"cannot read packet {text!r}; give hex digits or 0b followed by bits")


def cmd_run(args, out, err):
    p = _load(args)
    state = _entries(args, p)
    packet = _packet(args.packet)
    try:
        cfg, trace = run(p, packet, state)
    except InvalidAccess as exc:
        if args.trace:
            for t in exc.trace or ():
                out.write(t.text() + "\n")
        err.write(f"{args.file}: runtime fault: {exc}\n")
        return EXIT_REJECTED
    except EvalError as exc:
        raise _Fail(f"{args.file}: {exc}")
    if args.trace:
        for t in trace:
            out.write(t.text() + "\n")
    for w in cfg.warnings:
        err.write(f"{args.file}: warning: {w}\n")
    out.write(f"output: {cfg.output.to_hex() or '-'} ({cfg.output.length} bits)\n")
    out.write(f"valid: {{{', '.join(sorted(cfg.headers))}}}\n")
    if cfg.input.length:
        out.write(f"unparsed: {cfg.input.to_hex()} ({cfg.input.length} bits)\n")
    return EXIT_OK


def cmd_types(args, out, err):
    p = _load(args)
    result = _check(args, p)
    for pt in result.point_types:
        t = htypes.compact(pt.type) if args.compact else pt.type
        out.write(f"{args.file}, {pt.span}: {pt.label}: {htypes.format_type(t)}\n")
        if args.denote:
            try:
                sets = htypes.denote(pt.type, cap=args.max_denotation).sorted_sets()
            except htypes.DenotationTooLarge as exc:
                raise _Fail(f"{args.file}, {pt.span}: {exc}; raise --max-denotation to continue")
            out.write("  " + ", ".join("{" + ", ".join(s) + "}" for s in sets) + "\n")
    out.write(f"{args.file}: output: {htypes.format_type(result.output_type)}\n")
    err.write(summary(result.diagnostics) + "\n")
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="hdrsafe", description="Header validity checker and interpreter.")
    ap.add_argument("--backend", choices=("native", "python"),
                    help="denotation kernel (default: native when built)")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("file", help="program source")
        sp.add_argument("--max-denotation", type=int, default=htypes.DEFAULT_CAP, metavar="N",
                        help="largest number of alternatives a header type may denote")

    sp = sub.add_parser("check", help="type check a program")
    common(sp)
    sp.add_argument("--entries", help="also validate these table entries against the checker's assumptions")
    sp.add_argument("--structured", action="store_true", help="emit JSON")
    sp.add_argument("--fail-on-warning", action="store_true", help="exit 1 on warnings too")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("run", help="run a packet through a program")
    common(sp)
    sp.add_argument("--packet", required=True, help="input bits as hex, or 0b followed by binary")
    sp.add_argument("--entries", help="table entries file")
    sp.add_argument("--trace", action="store_true", help="print each reduction step")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("types", help="print the header type at each program point")
    common(sp)
    sp.add_argument("--compact", action="store_true", help="print types in their shortest form")
    sp.add_argument("--denote", action="store_true", help="also list the denoted valid sets")
    sp.set_defaults(func=cmd_types)
    return ap


def main(argv=None, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        previous = kernels.use_backend(args.backend) if args.backend else None
    except RuntimeError as exc:
        err.write(f"hdrsafe: {exc}\n")
        return EXIT_USAGE
    try:
        return args.func(args, out, err)
    except _Fail as exc:
        err.write(str(exc) + "\n")
        return exc.code
    finally:
        if previous is not None:
            kernels.use_backend(previous)


if __name__ == "__main__":
    sys.exit(main())
