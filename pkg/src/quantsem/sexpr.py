"""Small s-expression reader and writer.

Every file format in the package (KB, gold specs, logical forms, mock
tables) is one parenthesized record per line, so the reader works on single
strings and reports character offsets; callers attach line numbers.
"""

from __future__ import annotations

import re


class SexpError(ValueError):
    def __init__(self, msg: str, pos: int = 0):
        super().__init__(msg)
        self.pos = pos


class Symbol(str):
    """A bare token. Keywords are symbols starting with ':'."""

    __slots__ = ()

    def __repr__(self):
        return f"Symbol({str.__repr__(self)})"

    @property
    def is_keyword(self) -> bool:
        return self.startswith(":")


_TOKEN = re.compile(
    r'\s+|;[^\n]*|(\()|(\))|"((?:[^"\\]|\\.)*)"|([^\s()";]+)', re.S
)
_UNESCAPE = re.compile(r"\\(.)", re.S)


def _tokens(text: str):
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise SexpError(f"unterminated string at offset {pos}", pos)
        if m.group(1):
            yield "(", None, pos
        elif m.group(2):
            yield ")", None, pos
        elif m.group(3) is not None:
            yield "str", _UNESCAPE.sub(r"\1", m.group(3)), pos
        elif m.group(4):
            yield "sym", Symbol(m.group(4)), pos
        pos = m.end()


def read_all(text: str) -> list:
    """Read every top-level form in ``text``."""
    stack: list[list] = [[]]
    for kind, value, pos in _tokens(text):
        if kind == "(":
            stack.append([])
        elif kind == ")":
            if len(stack) == 1:
                raise SexpError(f"unbalanced ')' at offset {pos}", pos)
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(value)
    if len(stack) != 1:
        raise SexpError("unclosed '('", len(text))
    return stack[0]


def read_one(text: str):
    forms = read_all(text)
    if len(forms) != 1:
        raise SexpError(f"expected exactly one form, found {len(forms)}")
    return forms[0]


def find_form(text: str):
    """Leniently read the first parenthesized form, skipping leading chatter.

    Returns None when no balanced form can be read.
    """
    start = text.find("(")
    while start != -1:
        depth = 0
        try:
            for kind, _, pos in _tokens(text[start:]):
                if kind == "(":
                    depth += 1
                elif kind == ")":
                    depth -= 1
                    if depth == 0:
                        return read_one(text[start : start + pos + 1])
        except SexpError:
            pass
        start = text.find("(", start + 1)
    return None


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def dumps(form) -> str:
    if isinstance(form, Symbol):
        return str(form)
    if isinstance(form, str):
        return _quote(form)
    if form is None:
        return "nil"
    if form is True:
        return "t"
    if isinstance(form, (int, float)):
        return repr(form)
    if isinstance(form, (list, tuple)):
        return "(" + " ".join(dumps(x) for x in form) + ")"
    raise TypeError(f"cannot serialize {type(form).__name__}")


def keyword_args(items: list, start: int = 0) -> tuple[list, dict]:
    """Split ``items[start:]`` into positional args and ``:key value`` pairs."""
    positional, kw = [], {}
    i = start
    while i < len(items):
        x = items[i]
        if isinstance(x, Symbol) and x.is_keyword:
            if i + 1 >= len(items):
                raise SexpError(f"keyword {x} has no value")
            kw[x[1:]] = items[i + 1]
            i += 2
        else:
            if kw:
                raise SexpError(f"positional argument after keywords: {dumps(x)}")
            positional.append(x)
            i += 1
    return positional, kw
