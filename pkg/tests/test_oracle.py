import json
import os

import httpx
import pytest

from conftest import GOLDEN, mock_oracle, replay_oracle
from quantsem.kb import load_seed_kb
from quantsem.oracle import (HttpBackend, KeyCollision, MockBackend, Oracle, OracleError, OracleRequest,
                             OracleUnavailable, ReplayBackend, ReplayMiss, SignUndetermined, Transcript,
                             make_oracle, parse_mock_table, parse_sign, parse_word_list, request_key)
from quantsem.parser import is_template_sentence

COOLING = "When particles move more slowly, temperature is lower and an object feels cooler."
_KB = load_seed_kb().snapshot()


def check(s):
    return is_template_sentence(s, _KB)


def default_mock():
    return make_oracle("mock")


# ---- rephrase ---------------------------------------------------------------

def test_rephrase_example():
    r = default_mock().rephrase(COOLING, check)
    assert r.value == ["Particles that move more slowly are cooler than particles."]
    assert r.conforming


def test_rephrase_multiple_and_numbered():
    r = default_mock().rephrase("Water density increases as salinity increases.", check)
    assert r.value == ["Water that is saltier is denser than water.", "Water that is colder is denser than water."]


def test_rephrase_pass_through():
    o = default_mock()
    r = o.rephrase("Particles that are cooler are denser than particles.", check)
    assert r.value == [] and o.backend_calls == 0
    assert any("pass-through" in d for d in o.diagnostics)


def test_rephrase_guard_retries_strictly_then_empty():
    o = default_mock()
    r = o.rephrase("Convection on early Earth was faster and so plate tectonics was faster.", check)
    assert r.value == []
    assert [p.get("strict") for role, p in o.call_log if role == "rephrase"] == [None, True]


def test_rephrase_without_guard_keeps_everything():
    o = mock_oracle('(mock rephrase :reply ("a b" "- c d"))')
    assert o.rephrase("x").value == ["a b", "c d"]


# ---- relevance, antonyms, sign ------------------------------------------------

def test_relevance_examples():
    o = default_mock()
    assert o.judge_relevance("temperature", "temperature", "cooler", COOLING) is True
    assert o.judge_relevance("usefulness", "effectiveness", "cooler", COOLING) is False


def test_relevance_malformed_twice_is_false():
    o = mock_oracle('(mock relevance :reply "perhaps")')
    assert o.judge_relevance("f", "q", "w", "fact") is False
    assert o.calls["relevance"] == 2
    assert any("non-conforming twice" in d for d in o.diagnostics)


def test_relevance_strict_retry_recovers():
    o = mock_oracle('(mock relevance :strict "t" :reply "Yes.")\n(mock relevance :reply "I think so")')
    assert o.judge_relevance("f", "q", "w", "fact") is True


def test_antonyms():
    o = default_mock()
    assert o.antonyms("closer") == ["farther", "further"]
    assert o.antonyms("bluxer") == []


@pytest.mark.parametrize("raw,out", [("farther, further", ["farther", "further"]), ("none", []),
                                     ("- hot\n- warm.", ["hot", "warm"]), ("I cannot say!", None)])
def test_parse_word_list(raw, out):
    assert parse_word_list(raw) == out


def test_sign():
    o = default_mock()
    assert o.influence_sign("density", "denser", "fact")[0] == "+"
    assert o.influence_sign("temperature", "cooler", "fact")[0] == "-"


@pytest.mark.parametrize("raw,out", [("+", "+"), (" - ", "-"), ("Negative.", "-"), ("−", "-"), ("up", None)])
def test_parse_sign(raw, out):
    assert parse_sign(raw) == out


def test_sign_gibberish_raises():
    o = mock_oracle('(mock sign :reply "it depends")')
    with pytest.raises(SignUndetermined):
        o.influence_sign("q", "w", "f")
    assert o.calls["sign"] == 2


def test_extract_returns_raw_text():
    o = default_mock()
    assert o.extract_logical_form("Older layers are found deeper.").startswith("((cause age)")


# ---- transcript and caching ---------------------------------------------------

def test_cache_one_backend_call_per_key():
    o = default_mock()
    for _ in range(3):
        o.influence_sign("density", "denser", "fact")
    assert o.calls["sign"] == 3 and o.backend_calls == 1 and len(o.transcript) == 1


def test_request_key_canonical():
    assert request_key("sign", {"a": 1, "b": 2}) == request_key("sign", {"b": 2, "a": 1})
    assert request_key("sign", {"a": 1}) != request_key("relevance", {"a": 1})
    with pytest.raises(ValueError):
        OracleRequest("poem", {})


def test_logical_timestamps():
    o = default_mock()
    _, k1 = o.influence_sign("density", "denser", "f")
    _, k2 = o.influence_sign("density", "louder", "f")
    assert o.timestamp_of(k1) == "2025-01-01T00:00:00Z"
    assert o.timestamp_of(k2) == "2025-01-01T00:00:01Z"


def test_transcript_file_roundtrip(tmp_path):
    p = tmp_path / "t.jsonl"
    o = make_oracle("mock", p)
    o.antonyms("closer")
    o.influence_sign("distance", "closer", "f")
    replay = make_oracle("replay", p)
    assert replay.antonyms("closer") == ["farther", "further"]
    assert replay.influence_sign("distance", "closer", "f")[0] == "-"
    assert replay.backend_calls == 0
    with pytest.raises(ReplayMiss):
        replay.antonyms("stronger")


def test_golden_transcript_replays():
    o = replay_oracle()
    assert o.rephrase(COOLING, check).value == ["Particles that move more slowly are cooler than particles."]
    assert o.backend_calls == 0


def test_key_collision():
    rec = {"request_key": "k", "role": "sign", "payload": {"a": 1}, "raw_text": "+", "timestamp": "t"}
    with pytest.raises(KeyCollision):
        Transcript(records=[rec, {**rec, "payload": {"a": 2}}])


def test_transcript_duplicate_append_ignored(tmp_path):
    t = Transcript(tmp_path / "t.jsonl")
    rec = {"request_key": "k", "role": "sign", "payload": {}, "raw_text": "+", "timestamp": "t"}
    t.append(rec)
    t.append(rec)
    assert len((tmp_path / "t.jsonl").read_text().splitlines()) == 1


def test_bad_transcript_record(tmp_path):
    p = tmp_path / "t.jsonl"
    p.write_text("{not json\n")
    with pytest.raises(OracleError):
        Transcript.load(p)


# ---- mock table -----------------------------------------------------------------

@pytest.mark.parametrize("text", ['(mock sign :word "x")', '(mock poem :reply "x")', "(mock", '(other sign :reply "x")'])
def test_mock_table_errors(text):
    with pytest.raises(OracleError):
        parse_mock_table(text)


def test_mock_first_match_and_default():
    b = MockBackend(parse_mock_table('(mock sign :word "co*" :reply "-")\n(mock sign :reply "+")'))
    assert b.complete("sign", {"word": "cooler"}) == "-"
    assert b.complete("sign", {"word": "hotter"}) == "+"
    assert b.complete("antonym", {"word": "x"}) == ""


def test_unknown_oracle_kind():
    with pytest.raises(OracleError):
        make_oracle("telepathy")
    with pytest.raises(OracleError):
        make_oracle("replay")


# ---- http backend ---------------------------------------------------------------

def _http(handler):
    client = httpx.Client(transport=httpx.MockTransport(handler))
    return HttpBackend("http://llm.test/v1/chat/completions", "m", "secret", client=client)


def test_http_backend_request_shape():
    seen = {}

    def handler(req):
        seen["body"] = json.loads(req.content)
        seen["auth"] = req.headers.get("authorization")
        return httpx.Response(200, json={"choices": [{"message": {"content": "yes"}}]})

    o = Oracle(_http(handler))
    assert o.judge_relevance("temperature", "temperature", "cooler", COOLING) is True
    body = seen["body"]
    assert body["temperature"] == 0 and body["model"] == "m"
    assert "cooler" in body["messages"][1]["content"]
    assert seen["auth"] == "Bearer secret"


def test_http_backend_failure():
    o = Oracle(_http(lambda req: httpx.Response(500)))
    with pytest.raises(OracleUnavailable):
        o.antonyms("closer")


def test_http_backend_needs_config(monkeypatch):
    monkeypatch.delenv("QUANTSEM_LLM_ENDPOINT", raising=False)
    monkeypatch.delenv("QUANTSEM_LLM_MODEL", raising=False)
    with pytest.raises(OracleUnavailable):
        HttpBackend()


@pytest.mark.skipif(not (os.environ.get("QUANTSEM_LLM_ENDPOINT") and os.environ.get("QUANTSEM_LLM_MODEL")),
                    reason="no live LLM endpoint configured")
def test_live_smoke():
    o = make_oracle("http")
    assert isinstance(o.antonyms("hotter"), list)


def test_replay_backend_always_misses():
    with pytest.raises(ReplayMiss):
        ReplayBackend().complete("sign", {})


def test_golden_transcript_is_valid():
    lines = (GOLDEN / "transcript.jsonl").read_text().splitlines()
    for line in lines:
        rec = json.loads(line)
        assert rec["request_key"] == request_key(rec["role"], rec["payload"])
