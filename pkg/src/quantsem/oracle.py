"""LLM informant interface with mock, replay and HTTP backends.

Every answered request is recorded in a transcript keyed by a hash of the
role and canonical payload. A transcript doubles as a cache: a key already
present is answered from it and never sent to the backend again, so running
against a transcript recorded from the mock reproduces the mock run exactly.
"""

from __future__ import annotations

import fnmatch
import hashlib
import json
import logging
import os
import re
import threading
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from importlib import resources
from pathlib import Path
from typing import Callable

from .sexpr import SexpError, keyword_args, read_all

log = logging.getLogger(__name__)

ROLES = ("rephrase", "relevance", "antonym", "sign", "extract")
MOCK_EPOCH = datetime(2025, 1, 1, tzinfo=timezone.utc)


class OracleError(Exception):
    pass


class OracleUnavailable(OracleError):
    """Transport failure, or a replay transcript lacking the request."""


class ReplayMiss(OracleUnavailable):
    pass


class SignUndetermined(OracleError):
    pass


class KeyCollision(OracleError):
    pass


def canonical_payload(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def request_key(role: str, payload: dict) -> str:
    return hashlib.sha256(f"{role}\n{canonical_payload(payload)}".encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class OracleRequest:
    role: str
    payload: dict

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown oracle role {self.role!r}")

    @property
    def key(self) -> str:
        return request_key(self.role, self.payload)


@dataclass
class OracleResponse:
    value: object
    raw_text: str
    conforming: bool


# ---------------------------------------------------------------------------
# transcript

class Transcript:
    """Append-only request log; at most one record per request key.

    With a path, each new record is appended and flushed immediately so a
    crashed run keeps everything answered so far.
    """

    def __init__(self, path: str | Path | None = None, records: list[dict] | None = None):
        self.path = Path(path) if path is not None else None
        self.records: list[dict] = []
        self._by_key: dict[str, dict] = {}
        self._lock = threading.Lock()
        for r in records or ():
            self._index(r)

    def _index(self, rec: dict):
        prev = self._by_key.get(rec["request_key"])
        if prev is not None:
            if canonical_payload(prev["payload"]) != canonical_payload(rec["payload"]):
                raise KeyCollision(f"request key {rec['request_key']} maps to two payloads")
            return False
        self._by_key[rec["request_key"]] = rec
        self.records.append(rec)
        return True

    @classmethod
    def load(cls, path: str | Path, missing_ok: bool = False) -> "Transcript":
        p = Path(path)
        records = []
        if p.exists():
            for n, line in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
                if not line.strip():
                    continue
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as e:
                    raise OracleError(f"{p}:{n}: bad transcript record: {e}") from e
        elif not missing_ok:
            raise FileNotFoundError(p)
        return cls(p, records)

    def get(self, key: str) -> dict | None:
        return self._by_key.get(key)

    def __contains__(self, key: str) -> bool:
        return key in self._by_key

    def __len__(self) -> int:
        return len(self.records)

    def append(self, rec: dict):
        with self._lock:
            if not self._index(rec):
                return
            if self.path is not None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as f:
                    f.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")
                    f.flush()
                    os.fsync(f.fileno())

    def dumps(self) -> str:
        return "".join(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n" for r in self.records)


# ---------------------------------------------------------------------------
# backends

@dataclass
class MockRule:
    role: str
    patterns: dict[str, str]
    reply: str
    key: str | None = None

    def matches(self, role: str, payload: dict, key: str) -> bool:
        if role != self.role:
            return False
        if self.key is not None and self.key != key:
            return False
        for name, pat in self.patterns.items():
            if name not in payload:
                return False
            if not fnmatch.fnmatchcase(_field_text(payload[name]), pat):
                return False
        return True


def _field_text(v) -> str:
    if v is True:
        return "t"
    return str(v)


def parse_mock_table(text: str) -> list[MockRule]:
    """Rules ``(mock <role> :<field> "<glob>" ... :reply "text")``; a list reply is joined by newlines."""
    rules = []
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith(";"):
            continue
        try:
            forms = read_all(line)
            for form in forms:
                if not (isinstance(form, list) and form and form[0] == "mock" and len(form) >= 2):
                    raise SexpError("expected (mock <role> ...)")
                pos, kw = keyword_args(form, 2)
                if pos:
                    raise SexpError("unexpected positional fields")
                if "reply" not in kw:
                    raise SexpError("missing :reply")
                reply = kw.pop("reply")
                if isinstance(reply, list):
                    reply = "\n".join(str(x) for x in reply)
                key = kw.pop("key", None)
                role = str(form[1])
                if role not in ROLES:
                    raise SexpError(f"unknown role {role}")
                rules.append(MockRule(role, {k: str(v) for k, v in kw.items()}, str(reply),
                                      str(key) if key is not None else None))
        except SexpError as e:
            raise OracleError(f"mock table line {n}: {e}") from e
    return rules


class MockBackend:
    """First matching rule wins; no match replies with empty text."""

    live = False

    def __init__(self, rules: list[MockRule]):
        self.rules = rules

    @classmethod
    def from_file(cls, path) -> "MockBackend":
        return cls(parse_mock_table(Path(path).read_text(encoding="utf-8")))

    def complete(self, role: str, payload: dict) -> str:
        key = request_key(role, payload)
        for r in self.rules:
            if r.matches(role, payload, key):
                return r.reply
        return ""


class ReplayBackend:
    """Backend of last resort for replay mode: every miss is an error."""

    live = False

    def complete(self, role: str, payload: dict) -> str:
        raise ReplayMiss(f"no recorded {role} response for {canonical_payload(payload)}")


def load_prompts() -> dict:
    text = resources.files("quantsem").joinpath("data/prompts.json").read_text(encoding="utf-8")
    return json.loads(text)


class HttpBackend:
    """Minimal chat-completion client; temperature pinned to 0."""

    live = True

    def __init__(self, endpoint: str | None = None, model: str | None = None, key: str | None = None,
                 timeout: float = 60.0, client=None):
        self.endpoint = endpoint or os.environ.get("QUANTSEM_LLM_ENDPOINT")
        self.model = model or os.environ.get("QUANTSEM_LLM_MODEL")
        self.key = key or os.environ.get("QUANTSEM_LLM_KEY")
        if not self.endpoint or not self.model:
            raise OracleUnavailable("QUANTSEM_LLM_ENDPOINT and QUANTSEM_LLM_MODEL must be set")
        self.prompts = load_prompts()
        self.timeout = timeout
        self._client = client

    def build_messages(self, role: str, payload: dict) -> list[dict]:
        fields = {k: v for k, v in payload.items() if k != "strict"}
        user = self.prompts[role].format(**fields)
        if payload.get("strict"):
            user += "\n" + self.prompts["strict_suffix"]
        return [{"role": "system", "content": self.prompts["system"]},
                {"role": "user", "content": user}]

    def complete(self, role: str, payload: dict) -> str:
        import httpx

        body = {"model": self.model, "temperature": 0, "messages": self.build_messages(role, payload)}
        headers = {"Authorization": f"Bearer {self.key}"} if self.key else {}
        try:
            if self._client is not None:
                resp = self._client.post(self.endpoint, json=body, headers=headers)
            else:
                resp = httpx.post(self.endpoint, json=body, headers=headers, timeout=self.timeout)
            resp.raise_for_status()
            return resp.json()["choices"][0]["message"]["content"] or ""
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as e:
            raise OracleUnavailable(f"{role} request failed: {e}") from e


# ---------------------------------------------------------------------------
# response grammars

_BULLET = re.compile(r"^\s*(?:[-*•]|\d+[.)])\s*")
_WORDISH = re.compile(r"^[a-z][a-z'-]*$")


def parse_sentences(raw: str) -> list[str]:
    out = []
    for line in raw.splitlines():
        s = _BULLET.sub("", line).strip().strip('"').strip()
        if s and s not in out:
            out.append(s)
    return out


def parse_yes_no(raw: str) -> bool | None:
    s = raw.strip().lower().rstrip(".!")
    return {"yes": True, "no": False}.get(s)


def parse_word_list(raw: str) -> list[str] | None:
    s = raw.strip().lower()
    if s in ("", "none", "none."):
        return []
    out = []
    for item in re.split(r"[,\n]", s):
        w = _BULLET.sub("", item).strip().rstrip(".")
        if not w:
            continue
        if not _WORDISH.match(w):
            return None
        if w not in out:
            out.append(w)
    return out


def parse_sign(raw: str) -> str | None:
    s = raw.strip().lower().rstrip(".")
    return {"+": "+", "-": "-", "−": "-", "positive": "+", "negative": "-"}.get(s)


# ---------------------------------------------------------------------------
# oracle

class Oracle:
    """Role methods over a backend, with transcript caching and call accounting."""

    def __init__(self, backend, transcript: Transcript | None = None,
                 clock: Callable[[int], str] | None = None):
        self.backend = backend
        self.transcript = transcript if transcript is not None else Transcript()
        self.calls: Counter[str] = Counter()
        self.backend_calls = 0
        self.call_log: list[tuple[str, dict]] = []
        self.diagnostics: list[str] = []
        self._lock = threading.RLock()
        if clock is None:
            clock = _wall_clock if getattr(backend, "live", False) else _logical_clock
        self._clock = clock

    def _ask(self, role: str, payload: dict) -> tuple[str, str]:
        """Raw reply text plus the request key."""
        key = request_key(role, payload)
        with self._lock:
            self.calls[role] += 1
            self.call_log.append((role, dict(payload)))
            rec = self.transcript.get(key)
            if rec is not None:
                if canonical_payload(rec["payload"]) != canonical_payload(payload):
                    raise KeyCollision(f"request key {key} maps to two payloads")
                return rec["raw_text"], key
            raw = self.backend.complete(role, payload)
            self.backend_calls += 1
            self.transcript.append({
                "request_key": key, "role": role, "payload": payload,
                "raw_text": raw, "timestamp": self._clock(len(self.transcript)),
            })
            return raw, key

    def timestamp_of(self, key: str) -> str | None:
        rec = self.transcript.get(key)
        return rec["timestamp"] if rec else None

    def note(self, msg: str):
        with self._lock:
            self.diagnostics.append(msg)
        log.info(msg)

    # -- roles -------------------------------------------------------------
    def rephrase(self, fact: str, template_check: Callable[[str], bool] | None = None
                 ) -> OracleResponse:
        if template_check is not None and template_check(fact):
            self.note(f"rephrase pass-through: {fact}")
            return OracleResponse([], "", True)
        payload = {"fact": fact}
        raw, _ = self._ask("rephrase", payload)
        cands = parse_sentences(raw)
        ok = self._guard(cands, template_check)
        if cands and not ok:
            self.note(f"rephrase: no candidate passed the template guard; retrying strictly: {fact}")
            raw, _ = self._ask("rephrase", {**payload, "strict": True})
            cands = parse_sentences(raw)
            ok = self._guard(cands, template_check)
        return OracleResponse(ok, raw, len(ok) == len(cands))

    def _guard(self, cands: list[str], check) -> list[str]:
        if check is None:
            return list(cands)
        kept = []
        for c in cands:
            if check(c):
                kept.append(c)
            else:
                self.note(f"rephrase candidate dropped: {c}")
        return kept

    def _strict(self, role: str, payload: dict, parse):
        raw, key = self._ask(role, payload)
        value = parse(raw)
        if value is None:
            self.note(f"{role}: non-conforming reply {raw!r}; retrying strictly")
            raw, key = self._ask(role, {**payload, "strict": True})
            value = parse(raw)
        return value, raw, key

    def judge_relevance(self, frame_name: str, qtype_name: str, comparative: str, fact: str) -> bool:
        payload = {"frame": frame_name, "qtype": qtype_name, "word": comparative, "fact": fact}
        value, raw, _ = self._strict("relevance", payload, parse_yes_no)
        if value is None:
            self.note(f"relevance: non-conforming twice, treating as not relevant: {raw!r}")
            return False
        return value

    def antonyms(self, word: str) -> list[str]:
        value, raw, _ = self._strict("antonym", {"word": word}, parse_word_list)
        if value is None:
            self.note(f"antonym: non-conforming twice for {word}: {raw!r}")
            return []
        return value

    def influence_sign(self, qtype_name: str, comparative: str, fact: str) -> tuple[str, str]:
        """Sign plus the request key of the answering record."""
        payload = {"qtype": qtype_name, "word": comparative, "fact": fact}
        value, raw, key = self._strict("sign", payload, parse_sign)
        if value is None:
            raise SignUndetermined(f"no sign for ({qtype_name}, {comparative}): {raw!r}")
        return value, key

    def extract_logical_form(self, fact: str) -> str:
        raw, _ = self._ask("extract", {"fact": fact})
        return raw


def _logical_clock(n: int) -> str:
    return (MOCK_EPOCH + timedelta(seconds=n)).strftime("%Y-%m-%dT%H:%M:%SZ")


def _wall_clock(n: int) -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def default_mock_table() -> Path:
    return Path(str(resources.files("quantsem").joinpath("data/mock_oracle.sx")))


def make_oracle(kind: str, transcript_path=None, mock_table=None) -> Oracle:
    """Build an oracle for the CLI: ``mock``, ``replay`` or ``http``."""
    if kind == "replay":
        if transcript_path is None:
            raise OracleError("replay needs a transcript")
        return Oracle(ReplayBackend(), Transcript.load(transcript_path))
    transcript = (Transcript.load(transcript_path, missing_ok=True)
                  if transcript_path is not None else Transcript())
    if kind == "mock":
        return Oracle(MockBackend.from_file(mock_table or default_mock_table()), transcript)
    if kind == "http":
        return Oracle(HttpBackend(), transcript)
    raise OracleError(f"unknown oracle kind {kind!r}")


__all__ = [
    "ROLES", "Oracle", "OracleRequest", "OracleResponse", "Transcript", "MockBackend", "MockRule",
    "ReplayBackend", "HttpBackend", "OracleError", "OracleUnavailable", "ReplayMiss",
    "SignUndetermined", "KeyCollision", "request_key", "canonical_payload", "parse_mock_table",
    "make_oracle",
]
