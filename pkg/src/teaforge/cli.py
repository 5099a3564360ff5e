"""``teaforge`` command line.

Exit codes: 0 success, 1 diagnostics or validation failure, 2 usage error,
3 I/O error (including transport failures and unreadable fixtures).
"""

from __future__ import annotations

import argparse
import dataclasses
import enum
import json
import logging
import os
import sys
from pathlib import Path
from typing import TextIO

from . import __version__
from .analyzer import (
    ApiDocSpec,
    EmptySpec,
    RangeError,
    coverage_rate,
    diff,
    flatten,
    pair_and_aggregate,
    quadrant,
    read_call_log,
    write_error_csv,
    write_quadrant_csv,
)
from .codegen import UnsupportedConstruct, emit, emit_code_sample, get_target, list_targets
from .frontend import LexError, ParseError, ParseErrors, dump_ast, parse, tokenize
from .frontend.syntax import Span, SyntaxTree
from .runtime import (
    EvalError,
    MockTransport,
    RuntimeConfig,
    TransportError,
    UnknownApi,
    UrllibTransport,
    ValidationFailed,
    invoke,
)
from .semantics import AnalysisError, Diagnostic, SemanticModule, Severity, analyze

EXIT_OK, EXIT_DIAGNOSTICS, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    """Raises instead of exiting so ``run`` can return the usage exit code."""

    def error(self, message):
        raise CliError(EXIT_USAGE, f"{self.prog}: error: {message}")


def use_color(stream: TextIO) -> bool:
    env = os.environ.get("TEAFORGE_COLOR")
    if env in ("0", "1"):
        return env == "1"
    return hasattr(stream, "isatty") and stream.isatty()


# --- helpers ------------------------------------------------------------------


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc}") from None


def _read_json_file(path: str):
    text = _read_text(path)
    try:
        return json.loads(text)
    except ValueError as exc:
        raise CliError(EXIT_IO, f"{path}: invalid JSON: {exc}") from None


def _json_arg(text: str, flag: str):
    try:
        return json.loads(text)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, f"{flag}: invalid JSON: {exc}") from None


def _syntax_diagnostic(exc: Exception) -> list[Diagnostic]:
    errors = exc.errors if isinstance(exc, ParseErrors) else [exc]
    code = "lex-error" if isinstance(exc, LexError) else "parse-error"
    return [Diagnostic(Severity.ERROR, code, e.message, Span.point(e.pos)) for e in errors]


def _compile(path: str) -> tuple[SyntaxTree | None, SemanticModule | None, list[Diagnostic]]:
    source = _read_text(path)
    try:
        tree = parse(tokenize(source))
    except (LexError, ParseError) as exc:
        return None, None, _syntax_diagnostic(exc)
    module = analyze(tree, name=Path(path).stem)
    return tree, module, list(module.diagnostics)


def _report(diags: list[Diagnostic], path: str, show_warnings: bool, err: TextIO) -> None:
    color = use_color(err)
    for d in diags:
        if d.is_error or show_warnings:
            print(d.render(path, color), file=err)


def _diag_json(d: Diagnostic) -> dict:
    pos = d.span.start
    return {"severity": d.severity.value, "code": d.code, "message": d.message, "line": pos.line, "column": pos.column}


def _load_module(args, err: TextIO) -> SemanticModule:
    _, module, diags = _compile(args.file)
    _report(diags, args.file, getattr(args, "warnings", False), err)
    if module is None or not module.ok:
        raise CliError(EXIT_DIAGNOSTICS, f"{args.file}: compilation failed")
    return module


def _emit_json(obj, out: TextIO) -> None:
    out.write(json.dumps(obj, ensure_ascii=False, indent=2) + "\n")


def ast_to_json(node):
    """Plain-data view of an AST node (spans omitted)."""
    if dataclasses.is_dataclass(node):
        out = {"node": type(node).__name__}
        for f in dataclasses.fields(node):
            if f.name != "span":
                out[f.name] = ast_to_json(getattr(node, f.name))
        return out
    if isinstance(node, (list, tuple)):
        return [ast_to_json(n) for n in node]
    if isinstance(node, enum.Enum):
        return node.value
    return node


# --- subcommands --------------------------------------------------------------


def cmd_check(args, out: TextIO, err: TextIO) -> int:
    _, module, diags = _compile(args.file)
    ok = module is not None and module.ok
    if args.format == "json":
        _emit_json({"ok": ok, "diagnostics": [_diag_json(d) for d in diags]}, out)
    else:
        _report(diags, args.file, args.warnings, err)
    return EXIT_OK if ok else EXIT_DIAGNOSTICS


def cmd_ast(args, out: TextIO, err: TextIO) -> int:
    tree, _, diags = _compile(args.file)
    if tree is None:
        _report(diags, args.file, False, err)
        return EXIT_DIAGNOSTICS
    if args.format == "json":
        _emit_json(ast_to_json(tree), out)
    else:
        out.write(dump_ast(tree) + "\n")
    return EXIT_OK


def cmd_gen(args, out: TextIO, err: TextIO) -> int:
    module = _load_module(args, err)
    files = emit(module, get_target(args.target))
    try:
        written = files.write(args.out)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write to {args.out}: {exc}") from None
    if args.format == "json":
        _emit_json(files.manifest(), out)
    else:
        for path in written:
            print(path, file=out)
    return EXIT_OK


def _api_args(args, module: SemanticModule) -> dict:
    if args.api not in module.apis:
        raise CliError(EXIT_USAGE, f"unknown api {args.api!r}; available: {', '.join(module.apis) or 'none'}")
    value = _json_arg(args.args, "--args")
    if not isinstance(value, dict):
        raise CliError(EXIT_USAGE, "--args must be a JSON object")
    return value


def cmd_sample(args, out: TextIO, err: TextIO) -> int:
    module = _load_module(args, err)
    text = emit_code_sample(module, args.api, _api_args(args, module), get_target(args.target))
    if args.format == "json":
        _emit_json({"api": args.api, "target": args.target, "sample": text}, out)
    else:
        out.write(text)
    return EXIT_OK


def cmd_invoke(args, out: TextIO, err: TextIO) -> int:
    module = _load_module(args, err)
    call_args = _api_args(args, module)
    if args.mock:
        data = _read_json_file(args.mock)
        try:
            transport = MockTransport.from_json(data)
        except (ValueError, TypeError, AttributeError) as exc:
            raise CliError(EXIT_IO, f"{args.mock}: bad mock fixture: {exc}") from None
    else:
        transport = UrllibTransport()
    try:
        config = RuntimeConfig(retry_times=args.retries, backoff_ms=args.backoff_ms, timeout_ms=args.timeout_ms)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from None
    result = invoke(module, args.api, call_args, transport, config=config)
    if args.format == "json":
        _emit_json({"api": args.api, "result": result}, out)
    else:
        _emit_json(result, out)
    return EXIT_OK


def cmd_analyze_diff(args, out: TextIO, err: TextIO) -> int:
    report = diff(flatten(_read_json_file(args.correct)), flatten(_read_json_file(args.wrong)))
    if args.format == "json":
        _emit_json(report.as_list(), out)
    else:
        for annotation in report:
            print(annotation, file=out)
    return EXIT_OK


def _load_log(path: str, err: TextIO):
    try:
        result = read_call_log(path)
    except (OSError, UnicodeDecodeError, EOFError) as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc}") from None
    for bad in result.malformed:
        print(f"{path}:{bad.line}: skipped malformed record: {bad.reason}", file=err)
    return result


def cmd_analyze_logs(args, out: TextIO, err: TextIO) -> int:
    result = _load_log(args.log, err)
    tables = pair_and_aggregate(result.records)
    if args.api is not None:
        tables = {k: v for k, v in tables.items() if k == args.api}
    if args.format == "json":
        _emit_json(
            {"malformed": len(result.malformed), "tables": [t.to_json() for t in tables.values()]},
            out,
        )
    else:
        write_error_csv(tables.values(), out)
    return EXIT_OK


def cmd_analyze_quadrant(args, out: TextIO, err: TextIO) -> int:
    docs_dir = Path(args.docs)
    if not docs_dir.is_dir():
        raise CliError(EXIT_IO, f"{args.docs}: not a directory")
    coverage = {}
    for path in sorted(docs_dir.glob("*.json")):
        try:
            doc = ApiDocSpec.from_json(_read_json_file(str(path)))
        except ValueError as exc:
            raise CliError(EXIT_IO, f"{path}: {exc}") from None
        try:
            coverage[doc.api] = coverage_rate(doc)
        except EmptySpec as exc:
            raise CliError(EXIT_DIAGNOSTICS, str(exc)) from None
    tables = pair_and_aggregate(_load_log(args.logs, err).records)
    points = []
    for api, cov in coverage.items():
        table = tables.get(api)
        if table is None or not table.calls:
            print(f"{api}: no calls in {args.logs}; skipped", file=err)
            continue
        points.append((api, cov, table.success_rate))
    for api in sorted(set(tables) - set(coverage)):
        print(f"{api}: no documentation in {args.docs}; skipped", file=err)
    try:
        ranked = quadrant(points, (args.x0, args.y0))
    except RangeError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from None
    if args.format == "json":
        _emit_json([p.to_json() for p in ranked], out)
    else:
        write_quadrant_csv(ranked, out)
    return EXIT_OK


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="teaforge", description="TeaDSL toolchain and api documentation analytics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name: str, func, help: str, parent=sub):
        p = parent.add_parser(name, help=help, description=help)
        p.add_argument("--format", choices=("text", "json"), default="text", help="output format (default: text)")
        p.set_defaults(func=func)
        return p

    targets = [t.target_id for t in list_targets()]

    p = command("check", cmd_check, "type-check a module; prints diagnostics only")
    p.add_argument("file")
    p.add_argument("-W", "--warnings", action="store_true", help="also print warnings")

    p = command("ast", cmd_ast, "print the syntax tree of a module")
    p.add_argument("file")

    p = command("gen", cmd_gen, "generate an SDK for one target")
    p.add_argument("file")
    p.add_argument("--target", required=True, choices=targets)
    p.add_argument("--out", required=True, help="output directory")

    p = command("sample", cmd_sample, "print a code sample calling one api")
    p.add_argument("file")
    p.add_argument("--api", required=True)
    p.add_argument("--args", default="{}", help="arguments as a JSON object")
    p.add_argument("--target", required=True, choices=targets)

    p = command("invoke", cmd_invoke, "run an api against a mock fixture or the network")
    p.add_argument("file")
    p.add_argument("--api", required=True)
    p.add_argument("--args", default="{}", help="arguments as a JSON object")
    p.add_argument("--mock", help="mock fixture (JSON rules); without it the request goes to the network")
    p.add_argument("--retries", type=int, default=0)
    p.add_argument("--backoff-ms", type=int, default=100)
    p.add_argument("--timeout-ms", type=int, default=30000)

    analyze_p = sub.add_parser("analyze", help="documentation analytics")
    asub = analyze_p.add_subparsers(dest="analysis", required=True, parser_class=_Parser)

    p = command("diff", cmd_analyze_diff, "diff a failed call against a successful one", asub)
    p.add_argument("--correct", required=True, help="JSON parameters of the successful call")
    p.add_argument("--wrong", required=True, help="JSON parameters of the failed call")

    p = command("logs", cmd_analyze_logs, "per-parameter error rates from a call log (CSV)", asub)
    p.add_argument("log", help="JSONL call log, optionally gzipped")
    p.add_argument("--api")

    p = command("quadrant", cmd_analyze_quadrant, "rank apis by doc coverage and success rate (CSV)", asub)
    p.add_argument("--docs", required=True, help="directory of api doc JSON files")
    p.add_argument("--logs", required=True, help="JSONL call log")
    p.add_argument("--x0", type=float, default=0.5)
    p.add_argument("--y0", type=float, default=0.5)
    return parser


def run(argv: list[str] | None = None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:  # --help / --version
            return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=err)
        return args.func(args, out, err)
    except CliError as exc:
        print(str(exc), file=err)
        return exc.code
    except UnknownApi as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE
    except (AnalysisError, UnsupportedConstruct, ValidationFailed, EvalError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_DIAGNOSTICS
    except TransportError as exc:
        print(f"transport error: {exc}", file=err)
        return EXIT_IO


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
