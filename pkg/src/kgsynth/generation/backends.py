"""Language-model backends.

A backend is anything with ``complete(messages) -> str`` taking
chat-completion style messages (``[{"role": ..., "content": ...}]``).
:class:`ChatCompletionBackend` talks to an OpenAI-compatible HTTP endpoint;
the other classes are deterministic stand-ins used by tests and ``--mock``.
"""

from __future__ import annotations

import hashlib
import logging
import os
import re
import threading
from dataclasses import dataclass
from typing import Callable, Mapping, Protocol

import httpx

from ..errors import BackendUnavailable, ConfigError

log = logging.getLogger(__name__)

Messages = list[dict[str, str]]


class LLMBackend(Protocol):
    def complete(self, messages: Messages) -> str: ...


@dataclass(frozen=True)
class BackendConfig:
    endpoint: str
    model: str
    temperature: float = 0.7
    max_tokens: int = 256
    timeout_seconds: float = 60.0
    api_key_env: str = "KGSYNTH_API_KEY"
    max_concurrency: int = 4

    @classmethod
    def from_dict(cls, data: Mapping) -> "BackendConfig":
        if any("key" in k.lower() and k != "api_key_env" for k in data):
            raise ConfigError("API keys must come from the environment, not the config file")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(f"bad backend config: {exc}") from None


class ChatCompletionBackend:
    """POSTs ``{model, messages, temperature, max_tokens}`` and reads
    ``choices[0].message.content`` from the response."""

    def __init__(self, config: BackendConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        self._slots = threading.BoundedSemaphore(max(1, config.max_concurrency))
        headers = {}
        key = os.environ.get(config.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self._client = httpx.Client(timeout=config.timeout_seconds, headers=headers, transport=transport)

    def complete(self, messages: Messages) -> str:
        payload = {
            "model": self.config.model,
            "messages": messages,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        }
        with self._slots:
            try:
                resp = self._client.post(self.config.endpoint, json=payload)
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except httpx.HTTPError as exc:
                raise BackendUnavailable(f"request to {self.config.endpoint} failed: {exc}") from None
            except (ValueError, KeyError, IndexError, TypeError):
                raise BackendUnavailable("backend returned an unexpected payload") from None

    def close(self) -> None:
        self._client.close()


class ScriptedBackend:
    """Replies with ``script(prompt, call_index)``; ``prompt`` is the last user message."""

    def __init__(self, script: Callable[[str, int], str]):
        self.script = script
        self.calls = 0
        self._lock = threading.Lock()

    def complete(self, messages: Messages) -> str:
        with self._lock:
            i = self.calls
            self.calls += 1
        return self.script(messages[-1]["content"], i)


class ConstantBackend(ScriptedBackend):
    def __init__(self, score: str = "0"):
        super().__init__(lambda prompt, i: f"That is how it is for me.\nSCORE: {score}")


_SEVERITY_BASE = {"minimal": 0, "mild": 1, "moderate": 2, "severe": 3}
_SEVERITY_RE = re.compile(r"^Severity prior: (\w+)$", re.MULTILINE)
_ALLOWED_RE = re.compile(r"is exactly one of: ([^.\n]+)\.")


class PersonaMockBackend:
    """Deterministic persona-aware responder.

    The score is the persona's severity level (minimal=0 ... severe=3)
    shifted by -1, 0 or +1 according to a hash of the prompt, clipped to the
    allowed scores listed in the prompt.  Identical prompts always get
    identical replies.
    """

    def __init__(self, salt: str = ""):
        self.salt = salt
        self.calls = 0
        self._lock = threading.Lock()

    def complete(self, messages: Messages) -> str:
        with self._lock:
            self.calls += 1
        prompt = messages[-1]["content"]
        first = messages[0]["content"]
        m = _SEVERITY_RE.search(first)
        base = _SEVERITY_BASE.get(m.group(1), 2) if m else 2
        allowed_m = _ALLOWED_RE.search(first)
        allowed = [a.strip() for a in allowed_m.group(1).split(",")] if allowed_m else ["0", "1", "2", "3", "4"]
        h = int.from_bytes(hashlib.sha256((self.salt + prompt).encode()).digest()[:4], "big") % 10
        shift = -1 if h < 2 else (1 if h >= 8 else 0)
        pos = min(max(base + shift, 0), len(allowed) - 1)
        return f"I would say this applies to me at about that level.\nSCORE: {allowed[pos]}"
