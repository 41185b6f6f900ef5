"""``neutro-audit`` command line: run, analyze, verify, bank.

Exit codes: 0 success, 1 usage error, 2 runtime failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as dt
import json
import logging
import sys
from collections import Counter
from pathlib import Path

from .phenomena import dump_bank, default_bank, load_bank
from .records import RecordFormatError, load_any, validate_and_filter
from .report import EmptyDatasetError, build_report, write_report
from .runner import (
    ConfigError,
    ExperimentConfig,
    RunAborted,
    RunManifest,
    build_backend,
    manifest_path,
    resume_run,
    run_experiment,
)
from .verify import verify_dataset

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_VERIFY = 0, 1, 2, 3

VERIFY_HELP = """\
Recompute every published headline number from a record file and compare.

The original raw data is not bundled. Obtain it from the study's public
repository (v2.0 release) and pass its path; provenance is the caller's
responsibility. Accepted encodings: this tool's JSONL record files, or a flat
CSV / JSON / JSONL table with model, phenomenon, strategy and either
T/I/F (or P_yes/P_no) columns or the raw reply text.
"""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="neutro-audit", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="execute the design matrix and write records")
    run.add_argument("-c", "--config", type=Path, help="JSON config file (flags override its keys)")
    run.add_argument("-o", "--out", type=Path, required=True, help="record file (JSONL)")
    run.add_argument("-r", "--resume", action="store_true", help="only issue calls missing from --out")
    run.add_argument("--overwrite", action="store_true", help="replace an existing record file")
    run.add_argument("-m", "--models", help="comma-separated model ids")
    run.add_argument("-s", "--strategies", help="comma-separated strategies (S1,S2,S3)")
    run.add_argument("-n", "--repetitions", type=int)
    run.add_argument("-t", "--temperature", type=float)
    run.add_argument("--run-date", type=dt.date.fromisoformat)
    run.add_argument("--run-id")
    run.add_argument("-b", "--backend", choices=("mock", "http"))
    run.add_argument("--seed", type=int, help="mock backend seed")
    run.add_argument("--endpoint", help="chat-completions URL (http backend)")
    run.add_argument("--api-key-env", help="environment variable holding the credential")
    run.add_argument("--max-in-flight", type=int)
    run.add_argument("--bank", type=Path, help="stimulus file replacing the built-in bank")
    run.add_argument("-q", "--quiet", action="store_true", help="no per-cell progress")

    an = sub.add_parser("analyze", help="compute all tables from a record file")
    an.add_argument("-i", "--records", type=Path, required=True)
    an.add_argument("-d", "--out-dir", type=Path, required=True)
    an.add_argument("-f", "--format", default="md,csv", help="comma list from {md, csv}")

    ver = sub.add_parser("verify", help="check published numbers against a record file",
                         description=VERIFY_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    ver.add_argument("-i", "--records", type=Path, required=True)
    ver.add_argument("--not-paper-data", action="store_true",
                     help="acknowledge the file is not the original raw data (e.g. mock output)")

    sub.add_parser("bank", help="print the stimulus bank as JSON").add_argument(
        "--bank", type=Path, help="stimulus file to print instead of the built-in bank"
    )
    return p


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    top, backend = {}, {}
    if args.models:
        top["models"] = tuple(m.strip() for m in args.models.split(",") if m.strip())
    if args.strategies:
        top["strategies"] = tuple(s.strip() for s in args.strategies.split(",") if s.strip())
    for name in ("repetitions", "temperature", "run_date", "run_id"):
        if getattr(args, name) is not None:
            top[name] = getattr(args, name)
    if args.bank is not None:
        top["bank_path"] = str(args.bank)
    for flag, key in (("backend", "kind"), ("seed", "seed"), ("endpoint", "endpoint"),
                      ("api_key_env", "api_key_env"), ("max_in_flight", "max_in_flight")):
        if getattr(args, flag) is not None:
            backend[key] = getattr(args, flag)
    if backend:
        top["backend"] = dataclasses.replace(cfg.backend, **backend)
    return dataclasses.replace(cfg, **top) if top else cfg


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        config = _config_from_args(args)
        bank = config.load_bank()
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    backend = build_backend(config.backend)
    cells: Counter = Counter()

    def progress(record) -> None:
        key = (record.model_id, record.phenomenon_class.value, record.strategy.value)
        cells[key] += 1
        if not args.quiet and cells[key] == config.repetitions:
            ok = "" if record.parsed.valid else f"  (last: {record.parsed.failure_reason})"
            print(f"[{sum(cells.values()):>4}] {' / '.join(key)}: {cells[key]} done{ok}")

    try:
        if args.resume:
            manifest = resume_run(config, bank, backend, args.out, progress=progress)
        else:
            manifest = run_experiment(config, bank, backend, args.out,
                                      overwrite=args.overwrite, progress=progress)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RunAborted as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    finally:
        close = getattr(backend, "close", None)
        if close:
            close()
    print(f"{manifest.new_calls} new call(s); {manifest.records} record(s) in {args.out} "
          f"(run {manifest.run_id}, net valid {manifest.exclusions.get('net')})")
    return EXIT_OK


def _load_dataset(path: Path):
    if path.suffix == ".jsonl":
        first = next((ln for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()), "")
        if not first or '"parsed"' in first:
            return validate_and_filter(path)
    return validate_and_filter(load_any(path))


def _cmd_analyze(args: argparse.Namespace) -> int:
    formats = [f.strip() for f in args.format.split(",") if f.strip()]
    if not formats or set(formats) - {"md", "csv"}:
        print(f"error: --format must be a comma list from md,csv; got {args.format!r}", file=sys.stderr)
        return EXIT_USAGE
    try:
        dataset, report = _load_dataset(args.records)
        bundle = build_report(dataset, report)
        written = write_report(bundle, dataset, args.out_dir, formats)
    except EmptyDatasetError as exc:
        print(f"error: {args.records}: {exc} (empty dataset)", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, ValueError, RecordFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for e in report.excluded:
        print(f"excluded (line {e.line}): {e.reason}", file=sys.stderr)
    print(f"{len(dataset)} valid of {report.gross} record(s); wrote {len(written)} file(s) to {args.out_dir}")
    return EXIT_OK


def _looks_synthetic(path: Path, dataset) -> bool:
    if any(rid.startswith("mock-") for rid in dataset.run_ids):
        return True
    mpath = manifest_path(path)
    if mpath.exists():
        try:
            return RunManifest.read(mpath).config.get("backend", {}).get("kind") == "mock"
        except (ValueError, TypeError, OSError):
            return False
    return False


def _cmd_verify(args: argparse.Namespace) -> int:
    try:
        dataset, report = _load_dataset(args.records)
    except (OSError, ValueError, RecordFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if _looks_synthetic(args.records, dataset) and not args.not_paper_data:
        print(
            f"refusing to compare {args.records} against published numbers: it was produced by the "
            "mock backend. Pass --not-paper-data to run the comparison anyway.",
            file=sys.stderr,
        )
        return EXIT_USAGE
    outcome = verify_dataset(dataset, report)
    if args.not_paper_data:
        outcome.notes.append("input acknowledged as non-original data (--not-paper-data)")
    print(outcome.format_table())
    return EXIT_OK if outcome.passed else EXIT_VERIFY


def _cmd_bank(args: argparse.Namespace) -> int:
    try:
        bank = load_bank(args.bank) if args.bank else default_bank()
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    sys.stdout.write(dump_bank(bank))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "analyze": _cmd_analyze, "verify": _cmd_verify, "bank": _cmd_bank}
    return handler[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
