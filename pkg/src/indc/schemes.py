"""Textual scheme specifications.

Grammar:  ``<pred>[+<corr>[*<count>]...]:M=<m>[,K=<k>]``

Examples:
  ``BE:M=3,K=2``        backward Euler prediction and two BE corrections
  ``DIRK2SA+DIRK2SA:M=4``  one DIRK2-SA correction
  ``Radau3+BE*2:M=6``   RadauIIA3 prediction, two BE corrections

When only a prediction is given, K defaults to 0 and ``K=k`` repeats the
prediction method k times in the corrections.
"""
from __future__ import annotations

import re

from .solver import IndcScheme
from .tableau import builtin, builtin_names

__all__ = ["parse_scheme", "format_scheme", "SchemeParseError"]

_SPEC_RE = re.compile(
    r"^(?P<methods>[^:]+):M=(?P<M>\d+)(?:,K=(?P<K>\d+))?$")
_TERM_RE = re.compile(r"^(?P<name>[A-Za-z0-9\-]+)(?:\*(?P<count>\d+))?$")


class SchemeParseError(ValueError):
    pass


def parse_scheme(text: str, **newton_kwargs) -> IndcScheme:
    """Parse a scheme spec string into an IndcScheme."""
    text = text.strip()
    if not text:
        raise SchemeParseError("empty scheme spec")
    m = _SPEC_RE.match(text)
    if m is None:
        raise SchemeParseError(
            f"cannot parse scheme spec {text!r}; expected "
            "'<pred>[+<corr>[*<count>]...]:M=<m>[,K=<k>]'")
    methods = []
    terms = m.group("methods").split("+")
    for pos, term in enumerate(terms):
        t = _TERM_RE.match(term.strip())
        if t is None:
            raise SchemeParseError(
                f"bad method term {term!r} at position {pos} in {text!r}")
        count = int(t.group("count") or 1)
        if count < 1:
            raise SchemeParseError(f"count must be >= 1 in {term!r}")
        try:
            tab = builtin(t.group("name"))
        except KeyError:
            raise SchemeParseError(
                f"unknown method {t.group('name')!r}; known: "
                f"{', '.join(builtin_names())}") from None
        methods.extend([tab] * count)
    M = int(m.group("M"))
    k_given = m.group("K")
    if k_given is not None:
        K = int(k_given)
        if len(methods) == 1 and K > 0:
            methods = methods * (K + 1)
        elif len(methods) - 1 != K:
            raise SchemeParseError(
                f"K={K} inconsistent with {len(methods) - 1} correction "
                f"method(s) in {text!r}")
    return IndcScheme(M=M, methods=methods, **newton_kwargs)


def format_scheme(scheme: IndcScheme) -> str:
    """Canonical spec string; parse(format(s)) reproduces the scheme."""
    parts = []
    for tab in scheme.methods:
        if parts and parts[-1][0] == tab.name:
            parts[-1][1] += 1
        else:
            parts.append([tab.name, 1])
    text = "+".join(name if cnt == 1 else f"{name}*{cnt}"
                    for name, cnt in parts)
    return f"{text}:M={scheme.M},K={scheme.K}"
