import json
import math
import threading
import time

import httpx
import pytest

from neutro_audit.backends import (
    BackendError,
    CellTag,
    CompletionRequest,
    ErrorKind,
    HTTPBackend,
    MissingCellError,
    RateLimiter,
    RetryPolicy,
    call_with_retry,
    mock_backend,
)
from neutro_audit.phenomena import PhenomenonClass as P
from neutro_audit.profiles import constant_profile, table_profile
from neutro_audit.prompting import StrategyKind as S, parse_response

KEY_ENV = "NEUTRO_AUDIT_TEST_KEY"


def _req(cell=None, **kw):
    return CompletionRequest(model_id="gpt-4o", system="sys", user="usr", cell=cell, **kw)


def _ok(content='{"T": 0.1, "I": 0.2, "F": 0.3}'):
    return httpx.Response(200, json={"choices": [{"message": {"content": content}}]})


class FakeSleep:
    def __init__(self):
        self.calls = []

    def __call__(self, s):
        self.calls.append(s)


def _backend(handler, sleep=None, **kw):
    return HTTPBackend(api_key_env=KEY_ENV, transport=httpx.MockTransport(handler),
                       rate_per_second=None, sleep=sleep or FakeSleep(), **kw)


@pytest.fixture
def api_key(monkeypatch):
    monkeypatch.setenv(KEY_ENV, "sk-test")


# --- request validation ----------------------------------------------------


def test_request_validation():
    with pytest.raises(ValueError):
        CompletionRequest(model_id="", system="s", user="u")
    with pytest.raises(ValueError):
        _req(temperature=2.5)
    with pytest.raises(ValueError):
        _req(max_tokens=0)


# --- retry policy ----------------------------------------------------------


def test_retry_delays_are_exponential():
    p = RetryPolicy()
    assert [p.delay(a) for a in range(1, 5)] == [1.0, 2.0, 4.0, 8.0]
    assert RetryPolicy(max_delay=3).delay(4) == 3


def test_call_with_retry_exhausts_after_max_attempts():
    sleep, calls = FakeSleep(), []

    def fn():
        calls.append(1)
        raise BackendError(ErrorKind.SERVER_ERROR, "boom")

    with pytest.raises(BackendError) as info:
        call_with_retry(fn, RetryPolicy(), sleep)
    assert len(calls) == 5 and info.value.attempt_count == 5
    assert sleep.calls == [1.0, 2.0, 4.0, 8.0]


def test_call_with_retry_does_not_retry_auth():
    sleep = FakeSleep()

    def fn():
        raise BackendError(ErrorKind.AUTH_FAILURE, "no")

    with pytest.raises(BackendError) as info:
        call_with_retry(fn, RetryPolicy(), sleep)
    assert info.value.attempt_count == 1 and sleep.calls == []


# --- HTTP backend ----------------------------------------------------------


def test_http_success_and_payload(api_key):
    seen = {}

    def handler(request):
        seen["auth"] = request.headers["authorization"]
        seen["body"] = json.loads(request.content)
        return _ok()

    res = _backend(handler).complete(_req(response_format_hint="json_object"))
    assert res.raw_text == '{"T": 0.1, "I": 0.2, "F": 0.3}' and res.attempt_count == 1
    assert seen["auth"] == "Bearer sk-test"
    body = seen["body"]
    assert body["model"] == "gpt-4o" and body["temperature"] == 0.7 and body["max_tokens"] == 200
    assert [m["role"] for m in body["messages"]] == ["system", "user"]
    assert body["response_format"] == {"type": "json_object"}


def test_http_missing_credential(monkeypatch):
    monkeypatch.delenv(KEY_ENV, raising=False)
    with pytest.raises(BackendError) as info:
        _backend(lambda r: _ok()).complete(_req())
    assert info.value.kind is ErrorKind.AUTH_FAILURE


@pytest.mark.parametrize("status, kind, attempts", [
    (401, ErrorKind.AUTH_FAILURE, 1),
    (403, ErrorKind.AUTH_FAILURE, 1),
    (400, ErrorKind.INVALID_REQUEST, 1),
    (500, ErrorKind.SERVER_ERROR, 5),
    (503, ErrorKind.SERVER_ERROR, 5),
    (429, ErrorKind.RATE_LIMITED, 5),
])
def test_http_error_mapping(api_key, status, kind, attempts):
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(status, text="nope")

    with pytest.raises(BackendError) as info:
        _backend(handler).complete(_req())
    assert info.value.kind is kind and len(calls) == attempts


def test_http_retries_then_succeeds_with_retry_after(api_key):
    sleep, responses = FakeSleep(), iter([
        httpx.Response(429, headers={"retry-after": "7"}),
        httpx.Response(502),
        _ok(),
    ])
    res = _backend(lambda r: next(responses), sleep=sleep).complete(_req())
    assert res.attempt_count == 3
    assert sleep.calls == [7.0, 2.0]


def test_http_network_and_timeout(api_key):
    def net(request):
        raise httpx.ConnectError("refused")

    def slow(request):
        raise httpx.ReadTimeout("slow")

    for handler, kind in ((net, ErrorKind.NETWORK), (slow, ErrorKind.TIMEOUT)):
        with pytest.raises(BackendError) as info:
            _backend(handler, retry=RetryPolicy(max_attempts=2)).complete(_req())
        assert info.value.kind is kind and info.value.attempt_count == 2


def test_http_bad_body_is_server_error(api_key):
    with pytest.raises(BackendError) as info:
        _backend(lambda r: httpx.Response(200, json={"nope": 1}),
                 retry=RetryPolicy(max_attempts=1)).complete(_req())
    assert info.value.kind is ErrorKind.SERVER_ERROR


def test_http_in_flight_cap(api_key):
    lock, state = threading.Lock(), {"now": 0, "peak": 0}

    def handler(request):
        with lock:
            state["now"] += 1
            state["peak"] = max(state["peak"], state["now"])
        time.sleep(0.02)
        with lock:
            state["now"] -= 1
        return _ok()

    backend = _backend(handler, max_in_flight=2)
    threads = [threading.Thread(target=backend.complete, args=(_req(),)) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert state["peak"] <= 2


def test_rate_limiter_spaces_calls():
    clock, sleep = [0.0], FakeSleep()
    lim = RateLimiter(4.0, clock=lambda: clock[0], sleep=sleep)
    for _ in range(3):
        lim.acquire()
    assert sleep.calls == [0.25, 0.5]
    RateLimiter(None, sleep=sleep).acquire()
    assert len(sleep.calls) == 2


# --- mock backend ----------------------------------------------------------


def _cell(cls=P.VAGUENESS, strat=S.NEUTROSOPHIC, rep=1):
    return CellTag(cls, strat, rep)


def test_mock_is_deterministic_and_seed_sensitive():
    a, b, c = mock_backend(table_profile(), 1), mock_backend(table_profile(), 1), mock_backend(table_profile(), 2)
    cells = [_cell(cls, s, r) for cls in P for s in S for r in range(1, 4)]
    out_a = [a.complete(_req(cell)).raw_text for cell in cells]
    assert out_a == [b.complete(_req(cell)).raw_text for cell in cells]
    assert out_a != [c.complete(_req(cell)).raw_text for cell in cells]


def test_mock_zero_variance_profile():
    m = mock_backend(constant_profile(0.6, 0.5, 0.5))
    for rep in range(1, 4):
        assert m.complete(_req(_cell(rep=rep))).raw_text == '{"T": 0.6, "I": 0.5, "F": 0.5}'


def test_mock_s2_sums_to_one_and_s3_is_complementary():
    m = mock_backend(table_profile(), seed=3)
    for cls in P:
        for rep in range(1, 21):
            for model in ("a", "b"):
                r2 = parse_response(S.PROBABILISTIC, m.sample(model, _cell(cls, S.PROBABILISTIC, rep)))
                assert r2.valid and abs(r2.triplet.total - 1.0) <= 0.01
                r3 = parse_response(S.ENTROPY_DERIVED, m.sample(model, _cell(cls, S.ENTROPY_DERIVED, rep)))
                assert r3.valid and r3.sum_deviation <= 0.01


def test_mock_means_within_three_standard_errors():
    prof = table_profile()
    m = mock_backend(prof, seed=11)
    n = 20
    for cls in P:
        cell = prof[(cls, S.NEUTROSOPHIC)]
        draws = [parse_response(S.NEUTROSOPHIC, m.sample("gpt-4o", _cell(cls, rep=r))).triplet
                 for r in range(1, n + 1)]
        for comp in ("T", "I", "F"):
            mean = sum(t.component(comp) for t in draws) / n
            # Beta SD is capped below sqrt(m(1-m)); use the configured SD as an upper bound.
            se = cell.sd(comp) / math.sqrt(n)
            assert abs(mean - cell.means[comp]) <= 3 * se + 0.005, (cls, comp, mean)


def test_mock_needs_cell_tags_and_known_cells():
    m = mock_backend({})
    with pytest.raises(MissingCellError):
        m.complete(_req(_cell()))
    with pytest.raises(MissingCellError):
        mock_backend(table_profile()).complete(_req())


def test_mock_override_text():
    m = mock_backend(table_profile(), overrides={(P.VAGUENESS, S.NEUTROSOPHIC): "garbage"})
    assert m.complete(_req(_cell())).raw_text == "garbage"
