"""LIWC-style word-category counting.

A lexicon maps category names to word patterns; a trailing ``*`` matches any
suffix. Feature values are percentages of total words, except
``CountTotalWords`` which is the raw token count.

Lexicon file format::

    %categories
    we: we we're us our*
    posemo: happ* good nice
    %summaries
    tone = 50 + 4*posemo - 4*negemo
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

_TOKEN_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*")
_TERM_RE = re.compile(r"([+-])\s*(?:([0-9.eE+-]+)\s*\*\s*)?([A-Za-z_][\w]*)")

# schema feature -> lexicon category
CONTENT_FEATURES = {
    "CountWordsAnalytic": "analytic",
    "CountWordsClout": "clout",
    "CountWordsAuthentic": "authentic",
    "CountWordsTone": "tone",
    "CountWordsPronounI": "i",
    "CountWordsPronounWe": "we",
    "CountWordsPronounYou": "you",
    "CountWordsNumber": "number",
    "CountWordsAffect": "affect",
    "CountWordsPosEmo": "posemo",
    "CountWordsNegEmo": "negemo",
    "CountWordsSocial": "social",
    "CountWordsAffilitation": "affiliation",
    "CountWordsMotion": "motion",
    "CountWordsSpace": "space",
    "CountWordsTime": "time",
}
SUMMARY_DIMENSIONS = ("analytic", "clout", "authentic", "tone")


class LexiconError(ValueError):
    """Malformed lexicon file or a lexicon missing a required category."""


@dataclass(frozen=True)
class SummaryFormula:
    name: str
    intercept: float
    terms: tuple[tuple[str, float], ...]


@dataclass(frozen=True)
class Lexicon:
    categories: dict[str, tuple[str, ...]]
    summary_formulas: tuple[SummaryFormula, ...] = ()
    _exact: dict = field(default=None, init=False, repr=False, compare=False)
    _stems: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        exact: dict[str, set[str]] = {}
        stems: dict[str, list[str]] = {}
        for name, patterns in self.categories.items():
            exact[name] = set()
            stems[name] = []
            for p in patterns:
                if p != p.lower():
                    raise LexiconError(f"pattern {p!r} in {name!r} must be lowercase")
                if "*" in p[:-1]:
                    raise LexiconError(f"pattern {p!r} in {name!r}: '*' only allowed at the end")
                if p.endswith("*"):
                    stems[name].append(p[:-1])
                else:
                    exact[name].add(p)
        object.__setattr__(self, "_exact", exact)
        object.__setattr__(self, "_stems", stems)

    def matches(self, category: str, token: str) -> bool:
        if token in self._exact[category]:
            return True
        return any(token.startswith(s) for s in self._stems[category])

    def formula(self, name: str) -> SummaryFormula | None:
        for f in self.summary_formulas:
            if f.name == name:
                return f
        return None


def _parse_formula(line: str, lineno: int) -> SummaryFormula:
    name, _, rhs = line.partition("=")
    name = name.strip()
    rhs = rhs.strip()
    if not name or not rhs:
        raise LexiconError(f"line {lineno}: expected 'name = intercept + w*category ...'")
    m = re.match(r"^([+-]?\s*[0-9.]+(?:[eE][+-]?\d+)?)\s*(?=[+-]|$)", rhs)
    if m:
        intercept = float(m.group(1).replace(" ", ""))
        rest = rhs[m.end():]
    else:
        intercept, rest = 0.0, rhs
    if not rest.strip().startswith(("+", "-")) and rest.strip():
        rest = "+" + rest
    terms = []
    pos = 0
    rest = rest.strip()
    while pos < len(rest):
        t = _TERM_RE.match(rest, pos)
        if not t:
            raise LexiconError(f"line {lineno}: cannot parse {rest[pos:]!r}")
        sign = -1.0 if t.group(1) == "-" else 1.0
        weight = float(t.group(2)) if t.group(2) else 1.0
        terms.append((t.group(3).lower(), sign * weight))
        pos = t.end()
        while pos < len(rest) and rest[pos].isspace():
            pos += 1
    return SummaryFormula(name.lower(), intercept, tuple(terms))


def parse_lexicon(text: str) -> Lexicon:
    categories: dict[str, tuple[str, ...]] = {}
    formulas = []
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("%"):
            section = line[1:].strip().lower()
            if section not in ("categories", "summaries"):
                raise LexiconError(f"line {lineno}: unknown section {line!r}")
            continue
        if section == "categories":
            name, sep, patterns = line.partition(":")
            if not sep:
                raise LexiconError(f"line {lineno}: expected 'name: pattern pattern ...'")
            name = name.strip().lower()
            if name in categories:
                raise LexiconError(f"line {lineno}: duplicate category {name!r}")
            categories[name] = tuple(patterns.split())
        elif section == "summaries":
            formulas.append(_parse_formula(line, lineno))
        else:
            raise LexiconError(f"line {lineno}: content outside a section")
    lex = Lexicon(categories, tuple(formulas))
    for f in lex.summary_formulas:
        for cat, _ in f.terms:
            if cat not in categories:
                raise LexiconError(f"summary {f.name!r} refers to unknown category {cat!r}")
    return lex


def load_lexicon(path: str | Path) -> Lexicon:
    return parse_lexicon(Path(path).read_text(encoding="utf-8"))


def demo_lexicon() -> Lexicon:
    """The small open lexicon shipped with the package (not LIWC 2015)."""
    text = resources.files("affiliation.data").joinpath("demo_lexicon.txt").read_text("utf-8")
    return parse_lexicon(text)


def tokenize(text: str) -> list[str]:
    """Lowercased runs of letters and digits, keeping internal apostrophes."""
    text = text.replace("’", "'")
    return [t.lower() for t in _TOKEN_RE.findall(text)]


def content_features(tokens: list[str], lexicon: Lexicon) -> tuple[dict[str, float], dict[str, bool]]:
    """The 17 communication-content features and their validity flags."""
    needed = set()
    for feat, cat in CONTENT_FEATURES.items():
        if cat in SUMMARY_DIMENSIONS and lexicon.formula(cat) is not None:
            continue
        needed.add(cat)
    missing = sorted(needed - set(lexicon.categories))
    if missing:
        raise LexiconError(f"lexicon lacks categories required by the schema: {missing}")

    total = len(tokens)
    feats: dict[str, float] = {"CountTotalWords": float(total)}
    valid: dict[str, bool] = {"CountTotalWords": True}
    if total == 0:
        for feat in CONTENT_FEATURES:
            feats[feat] = 0.0
            valid[feat] = False
        return feats, valid

    counts = {cat: 0 for cat in lexicon.categories}
    for tok in tokens:
        for cat in lexicon.categories:
            if lexicon.matches(cat, tok):
                counts[cat] += 1
    rates = {cat: 100.0 * c / total for cat, c in counts.items()}

    for feat, cat in CONTENT_FEATURES.items():
        formula = lexicon.formula(cat) if cat in SUMMARY_DIMENSIONS else None
        if formula is not None:
            v = formula.intercept + sum(w * rates[c] for c, w in formula.terms)
            feats[feat] = min(100.0, max(0.0, v))
        else:
            feats[feat] = rates[cat]
        valid[feat] = True
    return feats, valid
