"""Completion backends: an OpenAI-style chat-completions client and an offline mock.

Both expose ``complete(request) -> CompletionResult`` and raise
:class:`BackendError` on failure, so the runner never needs to know which one
it is talking to.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import os
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Protocol

import httpx

from .phenomena import PhenomenonClass
from .prompting import StrategyKind

log = logging.getLogger(__name__)

DEFAULT_TEMPERATURE = 0.7
DEFAULT_MAX_TOKENS = 200
DEFAULT_API_KEY_ENV = "LLM_API_KEY"
DEFAULT_ENDPOINT = "https://api.openai.com/v1/chat/completions"


@dataclass(frozen=True)
class CellTag:
    """Identifies which design cell a request belongs to; HTTP ignores it."""

    phenomenon: PhenomenonClass
    strategy: StrategyKind
    repetition: int


@dataclass(frozen=True)
class CompletionRequest:
    model_id: str
    system: str
    user: str
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS
    response_format_hint: str | None = None
    cell: CellTag | None = None

    def __post_init__(self) -> None:
        if not self.model_id:
            raise ValueError("model_id must be non-empty")
        if not (0.0 <= self.temperature <= 2.0):
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")


@dataclass(frozen=True)
class CompletionResult:
    raw_text: str
    model_id: str
    latency_ms: float
    attempt_count: int = 1


class ErrorKind(str, enum.Enum):
    NETWORK = "Network"
    RATE_LIMITED = "RateLimited"
    AUTH_FAILURE = "AuthFailure"
    SERVER_ERROR = "ServerError"
    TIMEOUT = "Timeout"
    INVALID_REQUEST = "InvalidRequest"


_RETRYABLE = {ErrorKind.NETWORK, ErrorKind.RATE_LIMITED, ErrorKind.SERVER_ERROR, ErrorKind.TIMEOUT}


class BackendError(Exception):
    def __init__(self, kind: ErrorKind, detail: str, attempt_count: int = 1,
                 retry_after: float | None = None) -> None:
        super().__init__(f"{kind.value}: {detail}")
        self.kind = kind
        self.detail = detail
        self.attempt_count = attempt_count
        self.retry_after = retry_after

    @property
    def retryable(self) -> bool:
        return self.kind in _RETRYABLE


class Backend(Protocol):
    def complete(self, request: CompletionRequest) -> CompletionResult: ...


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 5
    base_delay: float = 1.0
    factor: float = 2.0
    max_delay: float = 60.0

    def delay(self, attempt: int) -> float:
        """Sleep before attempt ``attempt + 1`` (``attempt`` counts from 1)."""
        return min(self.base_delay * self.factor ** (attempt - 1), self.max_delay)


def call_with_retry(
    fn: Callable[[], str],
    policy: RetryPolicy,
    sleep: Callable[[float], None] = time.sleep,
) -> tuple[str, int]:
    """Run ``fn`` until it succeeds or a non-retryable / final error surfaces.

    Returns the result together with the number of attempts used.
    """
    attempt = 1
    while True:
        try:
            return fn(), attempt
        except BackendError as exc:
            exc.attempt_count = attempt
            if not exc.retryable or attempt >= policy.max_attempts:
                raise
            wait = policy.delay(attempt)
            if exc.retry_after is not None:
                wait = min(max(wait, exc.retry_after), policy.max_delay)
            log.warning("attempt %d failed (%s); retrying in %.1fs", attempt, exc, wait)
            sleep(wait)
            attempt += 1


class RateLimiter:
    """Spaces calls at least ``1 / rate`` seconds apart across threads."""

    def __init__(self, rate_per_second: float | None,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep) -> None:
        self.interval = 0.0 if not rate_per_second else 1.0 / rate_per_second
        self._next = 0.0
        self._lock = threading.Lock()
        self._clock = clock
        self._sleep = sleep

    def acquire(self) -> None:
        if self.interval <= 0:
            return
        with self._lock:
            now = self._clock()
            slot = max(now, self._next)
            self._next = slot + self.interval
        if slot > now:
            self._sleep(slot - now)


class HTTPBackend:
    """Chat-completions client with retries, an in-flight cap and a rate limiter.

    The credential is read from the environment variable named by
    ``api_key_env`` on every call; it is never taken from config files.
    """

    def __init__(
        self,
        endpoint: str = DEFAULT_ENDPOINT,
        api_key_env: str = DEFAULT_API_KEY_ENV,
        timeout: float = 30.0,
        max_in_flight: int = 4,
        rate_per_second: float | None = 5.0,
        retry: RetryPolicy = RetryPolicy(),
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.retry = retry
        self.max_in_flight = max_in_flight
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._limiter = RateLimiter(rate_per_second, sleep=sleep)
        self._sleep = sleep
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def close(self) -> None:
        self._client.close()

    def _payload(self, request: CompletionRequest) -> dict:
        payload = {
            "model": request.model_id,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
        }
        if request.response_format_hint:
            payload["response_format"] = {"type": request.response_format_hint}
        return payload

    def _once(self, request: CompletionRequest) -> str:
        key = os.environ.get(self.api_key_env)
        if not key:
            raise BackendError(ErrorKind.AUTH_FAILURE, f"environment variable {self.api_key_env} is not set")
        self._limiter.acquire()
        try:
            resp = self._client.post(
                self.endpoint,
                json=self._payload(request),
                headers={"Authorization": f"Bearer {key}"},
            )
        except httpx.TimeoutException as exc:
            raise BackendError(ErrorKind.TIMEOUT, str(exc) or "request timed out") from exc
        except httpx.TransportError as exc:
            raise BackendError(ErrorKind.NETWORK, str(exc) or type(exc).__name__) from exc
        status = resp.status_code
        if status in (401, 403):
            raise BackendError(ErrorKind.AUTH_FAILURE, f"HTTP {status}: {resp.text[:200]}")
        if status == 429:
            retry_after = resp.headers.get("retry-after")
            try:
                wait = float(retry_after) if retry_after else None
            except ValueError:
                wait = None
            raise BackendError(ErrorKind.RATE_LIMITED, f"HTTP 429: {resp.text[:200]}", retry_after=wait)
        if status >= 500:
            raise BackendError(ErrorKind.SERVER_ERROR, f"HTTP {status}: {resp.text[:200]}")
        if status >= 400:
            raise BackendError(ErrorKind.INVALID_REQUEST, f"HTTP {status}: {resp.text[:200]}")
        try:
            content = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendError(ErrorKind.SERVER_ERROR, f"unexpected response body: {resp.text[:200]}") from exc
        return content if isinstance(content, str) else ""

    def complete(self, request: CompletionRequest) -> CompletionResult:
        start = time.perf_counter()
        with self._slots:
            text, attempts = call_with_retry(lambda: self._once(request), self.retry, self._sleep)
        return CompletionResult(
            raw_text=text,
            model_id=request.model_id,
            latency_ms=(time.perf_counter() - start) * 1000.0,
            attempt_count=attempts,
        )


# --- offline mock ----------------------------------------------------------


@dataclass(frozen=True)
class CellProfile:
    """Per-field mean and standard deviation for one (phenomenon, strategy) cell.

    Fields are ``T``, ``I``, ``F`` for the triplet strategies and ``P_yes`` for
    the entropy-derived one.
    """

    means: Mapping[str, float]
    sds: Mapping[str, float] = field(default_factory=dict)

    def sd(self, name: str) -> float:
        return self.sds.get(name, 0.0)


class MissingCellError(KeyError):
    pass


def _beta_draw(rng: random.Random, mean: float, sd: float) -> float:
    """Draw from a beta law with the given mean and (capped) standard deviation.

    Beta is supported on [0, 1], so no clipping is needed; the variance is
    capped at 95% of the Bernoulli bound ``m (1 - m)`` when the requested one
    is not attainable.
    """
    if sd <= 0 or mean <= 0.0 or mean >= 1.0:
        return min(max(mean, 0.0), 1.0)
    var = min(sd * sd, 0.95 * mean * (1.0 - mean))
    k = mean * (1.0 - mean) / var - 1.0
    return rng.betavariate(mean * k, (1.0 - mean) * k)


def _r2(x: float) -> float:
    return round(x, 2)


class MockBackend:
    """Deterministic stand-in for a model API.

    The response for a request depends only on ``(seed, model_id, cell)``:
    every sampled component is drawn from a beta law matched to the cell's
    configured mean and SD and rounded to two decimals, the way models reply.
    Probabilistic cells are renormalised onto the simplex; entropy-derived
    cells emit ``P_no = 1 - P_yes``. ``overrides`` replaces the text for whole
    cells, which is how malformed output is simulated.
    """

    def __init__(
        self,
        profile: Mapping[tuple[PhenomenonClass, StrategyKind], CellProfile],
        seed: int = 0,
        overrides: Mapping[tuple[PhenomenonClass, StrategyKind], str] | None = None,
    ) -> None:
        self.profile = dict(profile)
        self.seed = seed
        self.overrides = dict(overrides or {})

    def _rng(self, model_id: str, cell: CellTag) -> random.Random:
        key = f"{self.seed}|{model_id}|{cell.phenomenon.value}|{cell.strategy.value}|{cell.repetition}"
        digest = hashlib.sha256(key.encode()).digest()
        return random.Random(int.from_bytes(digest[:8], "big"))

    def sample(self, model_id: str, cell: CellTag) -> str:
        key = (cell.phenomenon, cell.strategy)
        if key in self.overrides:
            return self.overrides[key]
        try:
            prof = self.profile[key]
        except KeyError:
            raise MissingCellError(f"mock profile has no cell {key[0].value}/{key[1].value}") from None
        rng = self._rng(model_id, cell)

        if cell.strategy is StrategyKind.ENTROPY_DERIVED:
            p_yes = _r2(_beta_draw(rng, prof.means["P_yes"], prof.sd("P_yes")))
            return json.dumps({"P_yes": p_yes, "P_no": _r2(1.0 - p_yes)})

        t, i, f = (_beta_draw(rng, prof.means[c], prof.sd(c)) for c in ("T", "I", "F"))
        if cell.strategy is StrategyKind.NEUTROSOPHIC:
            return json.dumps({"T": _r2(t), "I": _r2(i), "F": _r2(f)})

        total = t + i + f
        if total <= 0:
            t, i, f = (prof.means[c] for c in ("T", "I", "F"))
            total = t + i + f
        t, i = _r2(t / total), _r2(i / total)
        if _r2(t + i) > 1.0:
            if t >= i:
                t = _r2(t - 0.01)
            else:
                i = _r2(i - 0.01)
        f = max(0.0, _r2(1.0 - t - i))
        return json.dumps({"T": t, "I": i, "F": f})

    def complete(self, request: CompletionRequest) -> CompletionResult:
        if request.cell is None:
            raise MissingCellError("mock backend needs requests tagged with their design cell")
        text = self.sample(request.model_id, request.cell)
        return CompletionResult(raw_text=text, model_id=request.model_id, latency_ms=0.0)


def mock_backend(
    profile: Mapping[tuple[PhenomenonClass, StrategyKind], CellProfile],
    seed: int = 0,
    overrides: Mapping[tuple[PhenomenonClass, StrategyKind], str] | None = None,
) -> MockBackend:
    return MockBackend(profile, seed=seed, overrides=overrides)
