"""Command-line front end: ``dmm check | run | dump | format``.

Exit codes: 0 success or halt, 1 program error, 2 I/O error, 3 timeout.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .dsl import DmmSyntaxError, LoadError, load, parse, validate, format_program
from .engine import EngineError
from .network import dump_matrix
from .transforms import TransformFault

EXIT_OK, EXIT_PROGRAM, EXIT_IO, EXIT_TIMEOUT = 0, 1, 2, 3


class _IOFailure(Exception):
    pass


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise _IOFailure(f"{path}: {e.strerror or e}") from e


def _pairs(items, flag):
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise ValueError(f"{flag} expects NAME=VALUE, got {item!r}")
        out[name] = value
    return out


def _prepare(args):
    program = parse(_read(args.program), args.program)
    net = load(program)
    feeds = _pairs(getattr(args, "feed", None), "--feed")
    rates = _pairs(getattr(args, "rate", None), "--rate")
    for name in rates:
        if name not in feeds:
            raise ValueError(f"--rate given for {name!r} without a --feed")
    for name, text in feeds.items():
        rate = int(rates.get(name, 1))
        if rate < 1:
            raise ValueError(f"--rate for {name!r} must be at least 1")
        net.bind(name, text, rate)
    return net


def cmd_check(args) -> int:
    program = parse(_read(args.program), args.program)
    diags = sorted(validate(program), key=lambda d: (d.line or 0, d.column or 0))
    for d in diags:
        print(d, file=sys.stderr)
    return EXIT_PROGRAM if any(d.severity == "error" for d in diags) else EXIT_OK


def _dump(net, as_json: bool, out) -> None:
    if as_json:
        out.write(json.dumps(net.matrix.to_records()) + "\n")
    else:
        out.write(dump_matrix(net.matrix))


def cmd_run(args) -> int:
    if args.max_ticks < 1:
        raise ValueError("--max-ticks must be at least 1")
    net = _prepare(args)
    if args.watch:
        net.watch(*args.watch)
    sink = None
    if args.trace:
        try:
            sink = open(args.trace, "w", encoding="utf-8")
        except OSError as e:
            raise _IOFailure(f"{args.trace}: {e.strerror or e}") from e
        net.on_record = lambda rec: sink.write(json.dumps(rec) + "\n")
    dump_at = set(args.dump_at or ())

    def on_tick(n):
        if n.tick_count in dump_at:
            sys.stdout.write(f"# matrix at tick {n.tick_count}\n")
            _dump(n, False, sys.stdout)

    try:
        result = net.run(args.max_ticks, on_tick)
    finally:
        if sink is not None:
            sink.close()
    print(result.line())
    return EXIT_OK if result.halted else EXIT_TIMEOUT


def cmd_dump(args) -> int:
    net = _prepare(args)
    if args.at != "load":
        try:
            ticks = int(args.at)
        except ValueError:
            raise ValueError(f"--at expects 'load' or a tick count, got {args.at!r}") from None
        net.run(ticks)
    _dump(net, args.json, sys.stdout)
    return EXIT_OK


def cmd_format(args) -> int:
    program = parse(_read(args.program), args.program)
    sys.stdout.write(format_program(program))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dmm", description="Run dataflow matrix machine programs.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log engine diagnostics")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse and validate a program")
    p.add_argument("program")
    p.set_defaults(func=cmd_check)

    def feeds(p):
        p.add_argument("--feed", action="append", metavar="NEURON=DATA",
                       help="bind text (or a number for real emitters) to an emitter neuron")
        p.add_argument("--rate", action="append", metavar="NEURON=K",
                       help="emit one character every K ticks (default 1)")

    p = sub.add_parser("run", help="run a program until it halts")
    p.add_argument("program")
    feeds(p)
    p.add_argument("--max-ticks", type=int, default=1000)
    p.add_argument("--watch", action="append", metavar="ALIAS", help="trace a port every tick")
    p.add_argument("--trace", metavar="PATH", help="write trace records as JSON lines")
    p.add_argument("--dump-at", action="append", type=int, metavar="TICK",
                   help="print the matrix after this tick")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("dump", help="print the network matrix")
    p.add_argument("program")
    feeds(p)
    p.add_argument("--at", default="load", help="'load' or a number of ticks to run first")
    p.add_argument("--json", action="store_true", help="emit {in, out, w} records")
    p.set_defaults(func=cmd_dump)

    p = sub.add_parser("format", help="pretty-print a program")
    p.add_argument("program")
    p.set_defaults(func=cmd_format)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _IOFailure as e:
        print(f"dmm: {e}", file=sys.stderr)
        return EXIT_IO
    except DmmSyntaxError as e:
        print(e, file=sys.stderr)
        return EXIT_PROGRAM
    except LoadError as e:
        for d in e.diagnostics:
            if d.severity == "error":
                print(d, file=sys.stderr)
        return EXIT_PROGRAM
    except TransformFault as e:
        print(f"dmm: transform fault in {e}", file=sys.stderr)
        return EXIT_PROGRAM
    except (EngineError, ValueError) as e:
        print(f"dmm: {e}", file=sys.stderr)
        return EXIT_PROGRAM


if __name__ == "__main__":
    sys.exit(main())
