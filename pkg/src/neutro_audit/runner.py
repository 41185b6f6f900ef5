"""Execute the (model x phenomenon x strategy x repetition) design and persist it."""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import logging
import time
import uuid
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from . import __version__
from .backends import (
    DEFAULT_API_KEY_ENV,
    DEFAULT_ENDPOINT,
    DEFAULT_MAX_TOKENS,
    DEFAULT_TEMPERATURE,
    Backend,
    BackendError,
    CellTag,
    CompletionRequest,
    ErrorKind,
    HTTPBackend,
    MockBackend,
    mock_backend,
)
from .phenomena import Bank, Phenomenon, anchor_statement, default_bank, load_bank
from .profiles import PROFILES
from .prompting import BACKEND_ERROR, ParsedResponse, StrategyKind, parse_response, render_prompt
from .records import EvaluationRecord, RecordFormatError, iter_record_lines, validate_and_filter

log = logging.getLogger(__name__)

DEFAULT_MODELS = ("gpt-4o", "gpt-4-turbo", "gpt-3.5-turbo", "gpt-4o-mini")
DEFAULT_RUN_DATE = dt.date(2026, 4, 30)


class ConfigError(ValueError):
    pass


class ConfigMismatch(ConfigError):
    pass


class RunAborted(RuntimeError):
    pass


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "mock"
    seed: int = 0
    profile: str = "table"
    endpoint: str = DEFAULT_ENDPOINT
    api_key_env: str = DEFAULT_API_KEY_ENV
    timeout: float = 30.0
    max_in_flight: int = 4
    rate_per_second: float | None = 5.0
    response_format_hint: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("mock", "http"):
            raise ConfigError(f"backend kind must be 'mock' or 'http', got {self.kind!r}")
        if self.max_in_flight < 1:
            raise ConfigError("max_in_flight must be at least 1")


@dataclass(frozen=True)
class ExperimentConfig:
    models: tuple[str, ...] = DEFAULT_MODELS
    strategies: tuple[StrategyKind, ...] = tuple(StrategyKind)
    repetitions: int = 5
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS
    run_date: dt.date = DEFAULT_RUN_DATE
    run_id: str | None = None
    bank_path: str | None = None
    backend: BackendConfig = field(default_factory=BackendConfig)

    def __post_init__(self) -> None:
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "strategies", tuple(StrategyKind.parse(s) for s in self.strategies))
        if not self.models:
            raise ConfigError("models must be non-empty")
        if not self.strategies:
            raise ConfigError("strategies must be non-empty")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be at least 1")

    def to_json(self) -> dict[str, Any]:
        return {
            "models": list(self.models),
            "strategies": [s.value for s in self.strategies],
            "repetitions": self.repetitions,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "run_date": self.run_date.isoformat(),
            "run_id": self.run_id,
            "bank_path": self.bank_path,
            "backend": asdict(self.backend),
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "ExperimentConfig":
        obj = dict(obj)
        backend = dict(obj.pop("backend", None) or {})
        for secret in ("api_key", "key", "token"):
            if secret in backend or secret in obj:
                raise ConfigError(
                    f"config must not contain credentials ({secret!r}); "
                    f"export them via the environment variable named by backend.api_key_env"
                )
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        unknown_b = set(backend) - set(BackendConfig.__dataclass_fields__)
        if unknown_b:
            raise ConfigError(f"unknown backend keys: {sorted(unknown_b)}")
        if "run_date" in obj and isinstance(obj["run_date"], str):
            obj["run_date"] = dt.date.fromisoformat(obj["run_date"])
        return cls(**obj, backend=BackendConfig(**backend))

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_json(obj)

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def load_bank(self) -> Bank:
        return load_bank(self.bank_path) if self.bank_path else default_bank()


def build_backend(cfg: BackendConfig) -> Backend:
    if cfg.kind == "mock":
        try:
            profile = PROFILES[cfg.profile]()
        except KeyError:
            raise ConfigError(f"unknown mock profile {cfg.profile!r}") from None
        return mock_backend(profile, seed=cfg.seed)
    return HTTPBackend(
        endpoint=cfg.endpoint,
        api_key_env=cfg.api_key_env,
        timeout=cfg.timeout,
        max_in_flight=cfg.max_in_flight,
        rate_per_second=cfg.rate_per_second,
    )


@dataclass(frozen=True)
class Task:
    index: int
    model_id: str
    phenomenon: Phenomenon
    strategy: StrategyKind
    repetition: int

    @property
    def key(self) -> tuple[str, str, str, int]:
        return (self.model_id, self.phenomenon.cls.value, self.strategy.value, self.repetition)


def design(config: ExperimentConfig, bank: Sequence[Phenomenon]) -> list[Task]:
    """Model-major, then phenomenon, then strategy, then repetition."""
    tasks = []
    for model in config.models:
        for p in bank:
            for s in config.strategies:
                for r in range(1, config.repetitions + 1):
                    tasks.append(Task(len(tasks), model, p, s, r))
    return tasks


def manifest_path(records_path: str | Path) -> Path:
    return Path(records_path).with_suffix(".manifest.json")


def _utc_now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="milliseconds").replace("+00:00", "Z")


def _logical_clock(config: ExperimentConfig) -> Callable[[Task], str]:
    base = dt.datetime.combine(config.run_date, dt.time(), tzinfo=dt.timezone.utc)

    def stamp(task: Task) -> str:
        t = base + dt.timedelta(seconds=task.index)
        return t.isoformat().replace("+00:00", "Z")

    return stamp


def default_run_id(config: ExperimentConfig, backend: Backend) -> str:
    if config.run_id:
        return config.run_id
    if isinstance(backend, MockBackend):
        return f"mock-{config.fingerprint()}"
    return f"{config.run_date.isoformat()}-{uuid.uuid4().hex[:8]}"


@dataclass
class RunManifest:
    run_id: str
    config: dict[str, Any]
    started_at: str
    finished_at: str
    status: str
    records: int
    cell_counts: dict[str, int]
    exclusions: dict[str, int]
    toolkit_version: str = __version__
    bank: list[str] = field(default_factory=list)
    new_calls: int = 0

    def write(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def read(cls, path: str | Path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))


def _execute(backend: Backend, config: ExperimentConfig, task: Task, run_id: str,
             stamp: Callable[[Task], str]) -> tuple[EvaluationRecord, BackendError | None]:
    statement = anchor_statement(task.phenomenon, config.run_date)
    prompt = render_prompt(task.strategy, statement)
    request = CompletionRequest(
        model_id=task.model_id,
        system=prompt.system,
        user=prompt.user,
        temperature=config.temperature,
        max_tokens=config.max_tokens,
        response_format_hint=config.backend.response_format_hint,
        cell=CellTag(task.phenomenon.cls, task.strategy, task.repetition),
    )
    error = None
    try:
        result = backend.complete(request)
        raw = result.raw_text
        parsed = parse_response(task.strategy, raw)
    except BackendError as exc:
        error = exc
        raw = ""
        parsed = ParsedResponse.failure(
            task.strategy, BACKEND_ERROR, f"{exc.kind.value} after {exc.attempt_count} attempt(s): {exc.detail}"
        )
    record = EvaluationRecord(
        run_id=run_id,
        model_id=task.model_id,
        phenomenon_class=task.phenomenon.cls,
        strategy=task.strategy,
        repetition=task.repetition,
        timestamp=stamp(task),
        raw_text=raw,
        parsed=parsed,
    )
    return record, error


def _summarise(path: Path) -> tuple[int, dict[str, int], dict[str, int]]:
    cells: Counter = Counter()
    total = 0
    for _, item in iter_record_lines(path):
        if isinstance(item, RecordFormatError):
            continue
        total += 1
        cells[f"{item.model_id}|{item.phenomenon_class.value}|{item.strategy.value}"] += 1
    dataset, report = validate_and_filter(path)
    exclusions = {"gross": report.gross, "net": report.net, **dict(sorted(report.reasons().items()))}
    return total, dict(sorted(cells.items())), exclusions


def _run_tasks(
    tasks: Sequence[Task],
    config: ExperimentConfig,
    bank: Sequence[Phenomenon],
    backend: Backend,
    out_path: Path,
    run_id: str,
    mode: str,
    clock: Callable[[Task], str] | None,
    progress: Callable[[EvaluationRecord], None] | None,
) -> RunManifest:
    started = _utc_now()
    if clock is None:
        clock = _logical_clock(config) if isinstance(backend, MockBackend) else (lambda _t: _utc_now())
    workers = config.backend.max_in_flight
    aborted: BackendError | None = None
    try:
        fh = open(out_path, mode, encoding="utf-8")
    except OSError as exc:
        raise RunAborted(f"cannot write record file {out_path}: {exc}") from exc
    with fh, ThreadPoolExecutor(max_workers=workers) as pool:
        results = pool.map(lambda t: _execute(backend, config, t, run_id, clock), tasks)
        # map() yields in submission order, so the file order is deterministic
        # even though calls overlap.
        for record, error in results:
            fh.write(record.to_line())
            fh.flush()
            if progress:
                progress(record)
            if error is not None and error.kind is ErrorKind.AUTH_FAILURE:
                aborted = error
                pool.shutdown(wait=True, cancel_futures=True)
                break
    total, cells, exclusions = _summarise(out_path)
    manifest = RunManifest(
        run_id=run_id,
        config=config.to_json(),
        started_at=started,
        finished_at=_utc_now(),
        status="aborted" if aborted else "complete",
        records=total,
        cell_counts=cells,
        exclusions=exclusions,
        bank=[p.cls.value for p in bank],
        new_calls=len(tasks),
    )
    manifest.write(manifest_path(out_path))
    if aborted:
        raise RunAborted(f"non-retryable backend failure, run stopped (resumable): {aborted}")
    return manifest


def run_experiment(
    config: ExperimentConfig,
    bank: Sequence[Phenomenon],
    backend: Backend,
    out_path: str | Path,
    *,
    overwrite: bool = False,
    clock: Callable[[Task], str] | None = None,
    progress: Callable[[EvaluationRecord], None] | None = None,
) -> RunManifest:
    """Issue one call per design tuple and append each record as it lands.

    Failed calls are recorded (``parsed.valid = false``), never dropped. An
    authentication failure stops the run; the partial file can be resumed.
    """
    if not bank:
        raise ConfigError("phenomenon bank is empty")
    out_path = Path(out_path)
    if out_path.exists() and out_path.stat().st_size > 0 and not overwrite:
        raise ConfigError(f"{out_path} already exists; use resume or overwrite")
    run_id = default_run_id(config, backend)
    return _run_tasks(design(config, bank), config, bank, backend, out_path, run_id, "w", clock, progress)


def _truncate_partial_line(path: Path) -> None:
    data = path.read_bytes()
    if data and not data.endswith(b"\n"):
        cut = data.rfind(b"\n") + 1
        log.warning("dropping truncated trailing line in %s", path)
        path.write_bytes(data[:cut])


def _check_compatible(config: ExperimentConfig, bank: Sequence[Phenomenon], path: Path,
                      records: Iterable[EvaluationRecord]) -> str | None:
    mpath = manifest_path(path)
    run_id = None
    if mpath.exists():
        m = RunManifest.read(mpath)
        run_id = m.run_id
        old = m.config
        for key in ("models", "strategies", "repetitions"):
            if old.get(key) != config.to_json()[key]:
                raise ConfigMismatch(f"{key} differs from the existing run: {old.get(key)} vs {config.to_json()[key]}")
        if m.bank and m.bank != [p.cls.value for p in bank]:
            raise ConfigMismatch("phenomenon bank differs from the existing run")
    classes = {p.cls for p in bank}
    for r in records:
        if r.model_id not in config.models:
            raise ConfigMismatch(f"record file contains model {r.model_id!r} not in config")
        if r.phenomenon_class not in classes or r.strategy not in config.strategies:
            raise ConfigMismatch(f"record {r.key} is outside the configured design")
        if r.repetition > config.repetitions:
            raise ConfigMismatch(f"record {r.key} exceeds configured repetitions")
        run_id = run_id or r.run_id
    return run_id


def resume_run(
    config: ExperimentConfig,
    bank: Sequence[Phenomenon],
    backend: Backend,
    records_path: str | Path,
    *,
    clock: Callable[[Task], str] | None = None,
    progress: Callable[[EvaluationRecord], None] | None = None,
) -> RunManifest:
    """Issue calls only for design tuples missing from an existing record file."""
    path = Path(records_path)
    if not path.exists():
        return run_experiment(config, bank, backend, path, clock=clock, progress=progress)
    _truncate_partial_line(path)
    existing = [item for _, item in iter_record_lines(path) if not isinstance(item, RecordFormatError)]
    run_id = _check_compatible(config, bank, path, existing) or default_run_id(config, backend)
    done = {r.key for r in existing}
    missing = [t for t in design(config, bank) if t.key not in done]
    log.info("resuming %s: %d of %d tuples missing", path, len(missing), len(done) + len(missing))
    return _run_tasks(missing, config, bank, backend, path, run_id, "a", clock, progress)
