import pytest
from hypothesis import given, strategies as st

from quantsem.sexpr import SexpError, Symbol, dumps, find_form, keyword_args, read_all, read_one

symbols = st.from_regex(r"[A-Za-z:+\-][A-Za-z0-9_\-:+]{0,8}", fullmatch=True).map(Symbol)
strings = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=12)
forms = st.recursive(symbols | strings, lambda kids: st.lists(kids, max_size=4), max_leaves=20)


@given(forms)
def test_dumps_read_round_trip(form):
    assert read_one(dumps(form)) == form


def test_symbols_and_strings_are_distinct():
    a, b = read_all('foo "foo"')
    assert isinstance(a, Symbol) and not isinstance(b, Symbol)


def test_comments_and_escapes():
    assert read_all('(a "x\\"y") ;; note\n(b)') == [["a", 'x"y'], ["b"]]


@pytest.mark.parametrize("bad", ["(a", "a)", '"open'])
def test_malformed(bad):
    with pytest.raises(SexpError):
        read_all(bad)


def test_find_form_skips_chatter():
    assert find_form("Sure! Here it is: ((cause a) (effect b))") == [["cause", "a"], ["effect", "b"]]
    assert find_form("no form here") is None
    assert find_form("(unclosed") is None
    # a truncated outer form falls back to the first balanced inner one
    assert find_form("((cause a) (effect") == ["cause", "a"]


def test_keyword_args():
    pos, kw = keyword_args(read_one('(x "w" adj :frame F :qtype Q)'), 1)
    assert pos == ["w", "adj"] and kw == {"frame": "F", "qtype": "Q"}
    with pytest.raises(SexpError):
        keyword_args(read_one("(x :frame)"), 1)
