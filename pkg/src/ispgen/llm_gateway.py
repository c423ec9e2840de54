"""The one place the pipeline talks to a language model.

Modes:

``live``
    POST to an OpenAI-compatible ``/chat/completions`` endpoint at temperature 0.
``record``
    Like live (or stub, when a stub file is configured), and every response is
    written to ``<cache>/<stage>/<hash>.rec``.
``replay``
    Serve responses from the cache; a missing entry is an error.
``stub``
    Serve scripted responses from a stub file keyed by stage and prompt metadata.

Only ``live`` and ``record`` ever touch the transport.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import threading
import time
import urllib.error
import urllib.request
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Protocol, Sequence

log = logging.getLogger(__name__)

STAGES = ("ISP", "SELECT", "INSTANTIATE", "BASELINE")
MODES = ("live", "record", "replay", "stub")
SOURCES = ("live", "replay", "stub")
API_KEY_ENV = "ISPGEN_API_KEY"


class GatewayError(Exception):
    pass


class CacheMiss(GatewayError):
    pass


class TransportError(GatewayError):
    def __init__(self, message: str, status: int | None = None, retry_after: float | None = None):
        super().__init__(message)
        self.status = status
        self.retry_after = retry_after


@dataclass(frozen=True)
class PromptRecord:
    stage: str
    system_text: str
    user_text: str
    few_shot: tuple[tuple[str, str], ...] = ()
    meta: tuple[tuple[str, str], ...] = ()  # method / partition / type the prompt is about

    def __post_init__(self) -> None:
        if self.stage not in STAGES:
            raise ValueError(f"unknown stage {self.stage!r}")
        if not self.system_text.strip():
            raise ValueError("system_text must not be empty")

    @property
    def meta_dict(self) -> dict[str, str]:
        return dict(self.meta)

    def messages(self) -> list[dict[str, str]]:
        msgs = [{"role": "system", "content": self.system_text}]
        for question, answer in self.few_shot:
            msgs.append({"role": "user", "content": question})
            msgs.append({"role": "assistant", "content": answer})
        msgs.append({"role": "user", "content": self.user_text})
        return msgs

    def to_dict(self) -> dict[str, Any]:
        return {
            "stage": self.stage,
            "system_text": self.system_text,
            "user_text": self.user_text,
            "few_shot": [list(pair) for pair in self.few_shot],
            "meta": [list(pair) for pair in self.meta],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PromptRecord":
        return cls(
            stage=data["stage"],
            system_text=data["system_text"],
            user_text=data["user_text"],
            few_shot=tuple(tuple(p) for p in data.get("few_shot", ())),
            meta=tuple(tuple(p) for p in data.get("meta", ())),
        )


def make_meta(**values: object) -> tuple[tuple[str, str], ...]:
    return tuple(sorted((k, str(v)) for k, v in values.items() if v is not None))


@dataclass(frozen=True)
class CompletionResult:
    text: str
    input_tokens: int
    output_tokens: int
    latency_ms: int
    source: str
    prompt_hash: str = ""


@dataclass(frozen=True)
class UsageEntry:
    stage: str
    meta: tuple[tuple[str, str], ...]
    prompt_hash: str
    input_tokens: int
    output_tokens: int
    latency_ms: int
    source: str
    estimated: bool


@dataclass(frozen=True)
class TokenUsage:
    input_tokens: int = 0
    output_tokens: int = 0

    def __add__(self, other: "TokenUsage") -> "TokenUsage":
        return TokenUsage(self.input_tokens + other.input_tokens, self.output_tokens + other.output_tokens)


@dataclass(frozen=True)
class PriceTable:
    """US dollars per one million tokens."""

    input_per_million: float = 0.50
    output_per_million: float = 1.50

    def __post_init__(self) -> None:
        if self.input_per_million < 0 or self.output_per_million < 0:
            raise ValueError("prices must be non-negative")


def estimate_cost(usage: TokenUsage, price_table: PriceTable) -> float:
    return (
        usage.input_tokens * price_table.input_per_million / 1e6
        + usage.output_tokens * price_table.output_per_million / 1e6
    )


def estimate_tokens(text: str) -> int:
    """Offline stand-in for provider token counts: ceil(chars / 4)."""
    return math.ceil(len(text) / 4)


def hash_prompt(prompt: PromptRecord) -> str:
    canonical = json.dumps(prompt.to_dict(), sort_keys=True, ensure_ascii=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# -- transport -----------------------------------------------------------------


class Transport(Protocol):
    def post_json(self, url: str, payload: dict, headers: dict[str, str], timeout: float) -> dict: ...


class UrllibTransport:
    """Minimal JSON-over-HTTP transport; counts requests for auditing."""

    def __init__(self) -> None:
        self.requests = 0

    def post_json(self, url: str, payload: dict, headers: dict[str, str], timeout: float) -> dict:
        self.requests += 1
        body = json.dumps(payload).encode("utf-8")
        req = urllib.request.Request(url, data=body, headers={"Content-Type": "application/json", **headers})
        try:
            with urllib.request.urlopen(req, timeout=timeout) as resp:
                return json.loads(resp.read().decode("utf-8"))
        except urllib.error.HTTPError as exc:
            retry_after = exc.headers.get("Retry-After") if exc.headers else None
            raise TransportError(
                f"HTTP {exc.code} from {url}", exc.code, float(retry_after) if retry_after else None
            ) from exc
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            raise TransportError(f"transport failure: {exc}") from exc


# -- stub responses ---------------------------------------------------------------


@dataclass
class _StubEntry:
    stage: str
    selectors: dict[str, str]
    texts: list[str]
    calls: int = 0

    def matches(self, prompt: PromptRecord) -> bool:
        meta = prompt.meta_dict
        return self.stage == prompt.stage and all(meta.get(k) == v for k, v in self.selectors.items())

    def next_text(self) -> str:
        text = self.texts[min(self.calls, len(self.texts) - 1)]
        self.calls += 1
        return text


class StubResponses:
    """Scripted responses; the most specific matching entry wins.

    Each entry names a ``stage`` and any of ``method``, ``partition``, ``type``,
    ``slot`` and ``variant`` as selectors, plus either ``text`` or a ``texts``
    list that is served in order (the last one repeats).
    """

    def __init__(self, entries: Sequence[Mapping[str, Any]] = ()):
        self._entries: list[_StubEntry] = []
        self._lock = threading.Lock()
        for raw in entries:
            selectors = {k: str(v) for k, v in raw.items() if k not in ("stage", "text", "texts", "note")}
            texts = list(raw["texts"]) if "texts" in raw else [raw["text"]]
            if not texts:
                raise ValueError("stub entry without responses")
            self._entries.append(_StubEntry(raw["stage"], selectors, texts))

    @classmethod
    def load(cls, path: str | Path) -> "StubResponses":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(data.get("responses", []))

    def respond(self, prompt: PromptRecord) -> str:
        with self._lock:
            best: _StubEntry | None = None
            for entry in self._entries:
                if entry.matches(prompt) and (best is None or len(entry.selectors) > len(best.selectors)):
                    best = entry
            if best is None:
                raise CacheMiss(f"no stub response for {prompt.stage} {prompt.meta_dict}")
            return best.next_text()


# -- gateway ---------------------------------------------------------------------


@dataclass
class GatewayConfig:
    mode: str = "stub"
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model: str = "gpt-3.5-turbo"
    temperature: float = 0.0
    api_key_env: str = API_KEY_ENV
    cache_dir: str | None = None
    stub_path: str | None = None
    requests_per_minute: int = 500
    max_attempts: int = 3
    backoff_s: float = 1.0
    timeout_s: float = 120.0

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown gateway mode {self.mode!r}")
        if self.temperature != 0:
            raise ValueError("temperature is fixed at 0")


@dataclass
class _Ledger:
    entries: list[UsageEntry] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)


class LLMGateway:
    def __init__(
        self,
        config: GatewayConfig | None = None,
        *,
        stub: StubResponses | None = None,
        transport: Transport | None = None,
        sleep: Callable[[float], None] = time.sleep,
        clock: Callable[[], float] = time.monotonic,
    ):
        self.config = config or GatewayConfig()
        if stub is None and self.config.stub_path:
            stub = StubResponses.load(self.config.stub_path)
        self.stub = stub
        self.transport = transport if transport is not None else UrllibTransport()
        self._sleep = sleep
        self._clock = clock
        self._ledger = _Ledger()
        self._dispatch_lock = threading.Lock()
        self._last_dispatch = -math.inf
        if self.config.mode in ("replay", "record") and not self.config.cache_dir:
            raise ValueError(f"{self.config.mode} mode needs cache_dir")
        if self.config.mode == "stub" and self.stub is None:
            self.stub = StubResponses()

    # public

    @property
    def usage(self) -> list[UsageEntry]:
        with self._ledger.lock:
            return list(self._ledger.entries)

    def total_usage(self, stage: str | None = None) -> TokenUsage:
        total = TokenUsage()
        for e in self.usage:
            if stage is None or e.stage == stage:
                total = total + TokenUsage(e.input_tokens, e.output_tokens)
        return total

    def calls_by_stage(self) -> dict[str, int]:
        counts = {s: 0 for s in STAGES}
        for e in self.usage:
            counts[e.stage] += 1
        return counts

    def complete(self, prompt: PromptRecord) -> CompletionResult:
        digest = hash_prompt(prompt)
        mode = self.config.mode
        if mode == "replay":
            result = self._replay(prompt, digest)
        elif mode == "stub":
            result = self._from_stub(prompt, digest)
        else:
            if mode == "record" and self.stub is not None:
                result = self._from_stub(prompt, digest)
            else:
                result = self._live(prompt, digest)
            if mode == "record":
                self._write_record(prompt, digest, result)
        self._account(prompt, result, estimated=result.source != "live")
        return result

    # internals

    def _account(self, prompt: PromptRecord, result: CompletionResult, estimated: bool) -> None:
        entry = UsageEntry(
            stage=prompt.stage,
            meta=prompt.meta,
            prompt_hash=result.prompt_hash,
            input_tokens=result.input_tokens,
            output_tokens=result.output_tokens,
            latency_ms=result.latency_ms,
            source=result.source,
            estimated=estimated,
        )
        with self._ledger.lock:
            self._ledger.entries.append(entry)

    def _estimate_input(self, prompt: PromptRecord) -> int:
        return sum(estimate_tokens(m["content"]) for m in prompt.messages())

    def _from_stub(self, prompt: PromptRecord, digest: str) -> CompletionResult:
        assert self.stub is not None
        text = self.stub.respond(prompt)
        return CompletionResult(text, self._estimate_input(prompt), estimate_tokens(text), 0, "stub", digest)

    def _record_path(self, prompt: PromptRecord, digest: str) -> Path:
        assert self.config.cache_dir is not None
        return Path(self.config.cache_dir) / prompt.stage / f"{digest}.rec"

    def _replay(self, prompt: PromptRecord, digest: str) -> CompletionResult:
        path = self._record_path(prompt, digest)
        if not path.exists():
            raise CacheMiss(f"no recording for {prompt.stage} prompt {digest[:12]} {prompt.meta_dict}")
        data = json.loads(path.read_text(encoding="utf-8"))
        usage = data.get("usage", {})
        return CompletionResult(
            data["response"],
            int(usage.get("input_tokens", self._estimate_input(prompt))),
            int(usage.get("output_tokens", estimate_tokens(data["response"]))),
            0,
            "replay",
            digest,
        )

    def _write_record(self, prompt: PromptRecord, digest: str, result: CompletionResult) -> None:
        path = self._record_path(prompt, digest)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "hash": digest,
            "prompt": prompt.to_dict(),
            "response": result.text,
            "usage": {
                "input_tokens": result.input_tokens,
                "output_tokens": result.output_tokens,
                "estimated": result.source != "live",
            },
        }
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        tmp.replace(path)

    def _live(self, prompt: PromptRecord, digest: str) -> CompletionResult:
        key = os.environ.get(self.config.api_key_env)
        if not key:
            raise GatewayError(f"live mode needs the {self.config.api_key_env} environment variable")
        payload = {
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": prompt.messages(),
        }
        headers = {"Authorization": f"Bearer {key}"}
        delay = self.config.backoff_s
        last: TransportError | None = None
        for attempt in range(1, self.config.max_attempts + 1):
            self._throttle()
            start = self._clock()
            try:
                data = self.transport.post_json(self.config.endpoint, payload, headers, self.config.timeout_s)
            except TransportError as exc:
                last = exc
                log.warning("LLM request failed (attempt %d/%d): %s", attempt, self.config.max_attempts, exc)
                if attempt < self.config.max_attempts:
                    wait = exc.retry_after if exc.status == 429 and exc.retry_after else delay
                    self._sleep(wait)
                    delay *= 2
                continue
            latency = int((self._clock() - start) * 1000)
            try:
                text = data["choices"][0]["message"]["content"] or ""
            except (KeyError, IndexError, TypeError) as exc:
                raise GatewayError(f"malformed completion payload: {exc!r}") from exc
            usage = data.get("usage") or {}
            return CompletionResult(
                text,
                int(usage.get("prompt_tokens", self._estimate_input(prompt))),
                int(usage.get("completion_tokens", estimate_tokens(text))),
                latency,
                "live",
                digest,
            )
        raise GatewayError(f"LLM request failed after {self.config.max_attempts} attempts") from last

    def _throttle(self) -> None:
        interval = 60.0 / self.config.requests_per_minute if self.config.requests_per_minute > 0 else 0.0
        with self._dispatch_lock:
            now = self._clock()
            wait = self._last_dispatch + interval - now
            if wait > 0:
                self._sleep(wait)
                now = self._clock()
            self._last_dispatch = now


def usage_to_dict(entries: Sequence[UsageEntry]) -> list[dict[str, Any]]:
    return [asdict(e) for e in entries]
