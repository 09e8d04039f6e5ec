"""Rule-based four-dimension satisfaction scoring for review texts.

Each review is cut into sub-sentences at punctuation, segmented by forward
maximum matching against the lexicons, and every sentiment term found is
credited to one of four satisfaction dimensions:

* the nearest target term in its own sub-sentence (ties go to the earlier
  target), or
* when its sub-sentence has no target, the last target of the nearest
  preceding sub-sentence at most two fragments back.

A sentiment term contributes ``weight * degree * (-1) ** negations`` where
``degree`` multiplies the degree adverbs among the two preceding tokens and
``negations`` counts negation terms among the three preceding tokens. The
dimension score is the sign of the summed contributions.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable

log = logging.getLogger(__name__)

DIMENSIONS = ("activities", "built_environment", "service_facilities", "business_formats")
_DIMENSION_ALIASES = {
    "activities": "activities",
    "tourist_activities": "activities",
    "builtenvironment": "built_environment",
    "built_environment": "built_environment",
    "servicefacilities": "service_facilities",
    "service_facilities": "service_facilities",
    "businessformats": "business_formats",
    "business_formats": "business_formats",
}

DELIMITERS = frozenset("，。！？；,.!?;~\n")
NEGATION_WINDOW = 3
DEGREE_WINDOW = 2
ATTACH_DISTANCE = 2


def normalize_dimension(name: str) -> str:
    key = name.strip().replace(" ", "_").lower()
    try:
        return _DIMENSION_ALIASES[key]
    except KeyError:
        raise ValueError(f"unknown dimension {name!r}; expected one of {DIMENSIONS}") from None


def _fold(text: str) -> str:
    # lower-case without changing string length so offsets stay valid
    return "".join(c.lower() if len(c.lower()) == 1 else c for c in text)


def _is_word_char(c: str) -> bool:
    return (c.isalnum() or c == "'") and ord(c) < 0x2E80


@dataclass(frozen=True)
class LexiconSet:
    target_terms: dict[str, str]
    sentiment_terms: dict[str, float]
    negation_terms: frozenset[str]
    degree_adverbs: dict[str, float]
    user_dictionary: frozenset[str] = frozenset()

    def __post_init__(self):
        targets = {_fold(t): normalize_dimension(d) for t, d in self.target_terms.items()}
        sentiments = {_fold(t): float(w) for t, w in self.sentiment_terms.items()}
        negations = frozenset(_fold(t) for t in self.negation_terms)
        degrees = {_fold(t): float(m) for t, m in self.degree_adverbs.items()}
        user = frozenset(_fold(t) for t in self.user_dictionary)

        sections = {
            "target_terms": set(targets),
            "sentiment_terms": set(sentiments),
            "negation_terms": set(negations),
            "degree_adverbs": set(degrees),
        }
        names = list(sections)
        for i, a in enumerate(names):
            for b in names[i + 1 :]:
                both = sections[a] & sections[b]
                if both:
                    raise ValueError(f"terms appear in both {a} and {b}: {sorted(both)}")
        bad = {t: m for t, m in degrees.items() if not m > 0}
        if bad:
            raise ValueError(f"degree multipliers must be positive: {bad}")
        if any(not t for s in sections.values() for t in s):
            raise ValueError("lexicon terms must be nonempty")

        object.__setattr__(self, "target_terms", targets)
        object.__setattr__(self, "sentiment_terms", sentiments)
        object.__setattr__(self, "negation_terms", negations)
        object.__setattr__(self, "degree_adverbs", degrees)
        object.__setattr__(self, "user_dictionary", user)
        vocab = set(user).union(*sections.values())
        object.__setattr__(self, "_vocab", frozenset(vocab))
        object.__setattr__(self, "_max_len", max((len(t) for t in vocab), default=1))

    @classmethod
    def from_dict(cls, data: dict) -> "LexiconSet":
        missing = [k for k in ("target_terms", "sentiment_terms", "negation_terms", "degree_adverbs") if k not in data]
        if missing:
            raise ValueError(f"lexicon is missing sections: {missing}")
        return cls(
            target_terms=dict(data["target_terms"]),
            sentiment_terms=dict(data["sentiment_terms"]),
            negation_terms=frozenset(data["negation_terms"]),
            degree_adverbs=dict(data["degree_adverbs"]),
            user_dictionary=frozenset(data.get("user_dictionary", ())),
        )

    @classmethod
    def load(cls, path) -> "LexiconSet":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def demo_lexicon() -> LexiconSet:
    """The small bundled lexicon. Illustrative only, not a research lexicon."""
    text = resources.files("urbanperception.data").joinpath("demo_lexicon.json").read_text(encoding="utf-8")
    return LexiconSet.from_dict(json.loads(text))


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int


@dataclass
class SubSentence:
    start: int
    end: int
    text: str
    tokens: list[Token]
    # (token index, term, dimension)
    targets: list[tuple[int, str, str]] = field(default_factory=list)
    # (token index, term, weight)
    sentiments: list[tuple[int, str, float]] = field(default_factory=list)
    # dimension credited for each entry of ``sentiments``
    attributed: list[str | None] = field(default_factory=list)
    attached_to: int | None = None


@dataclass(frozen=True)
class DimensionScores:
    activities: int = 0
    built_environment: int = 0
    service_facilities: int = 0
    business_formats: int = 0

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.activities, self.built_environment, self.service_facilities, self.business_formats)

    def __str__(self) -> str:
        return " ".join(str(v) for v in self.as_tuple())


def tokenize(text: str, lex: LexiconSet, offset: int = 0) -> list[Token]:
    """Forward maximum matching over all lexicon terms.

    Unmatched CJK characters become single-character tokens; unmatched Latin
    text falls back to whole words. Whitespace is dropped.
    """
    folded = _fold(text)
    vocab = lex._vocab
    n = len(text)
    tokens = []
    i = 0
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        match = 0
        for length in range(min(lex._max_len, n - i), 0, -1):
            cand = folded[i : i + length]
            if cand not in vocab:
                continue
            end = i + length
            # Latin terms must end on a word boundary
            if _is_word_char(cand[-1]) and end < n and _is_word_char(text[end]):
                continue
            match = length
            break
        if not match:
            if _is_word_char(c):
                match = 1
                while i + match < n and _is_word_char(text[i + match]):
                    match += 1
            else:
                match = 1
        tokens.append(Token(folded[i : i + match], offset + i, offset + i + match))
        i += match
    return tokens


def _fragments(text: str) -> list[tuple[int, int]]:
    spans = []
    start = 0
    for i, c in enumerate(text):
        if c in DELIMITERS:
            spans.append((start, i))
            start = i + 1
    spans.append((start, len(text)))
    return [(a, b) for a, b in spans if text[a:b].strip()]


def _nearest_target(targets, idx):
    best = None
    for t_idx, _, dim in targets:
        dist = abs(t_idx - idx)
        # strict < keeps the earlier target on ties
        if best is None or dist < best[0]:
            best = (dist, dim)
    return best[1]


def split_subsentences(text: str, lex: LexiconSet) -> list[SubSentence]:
    subs = []
    for a, b in _fragments(text):
        toks = tokenize(text[a:b], lex, offset=a)
        sub = SubSentence(a, b, text[a:b], toks)
        for idx, tok in enumerate(toks):
            if tok.text in lex.target_terms:
                sub.targets.append((idx, tok.text, lex.target_terms[tok.text]))
            elif tok.text in lex.sentiment_terms:
                sub.sentiments.append((idx, tok.text, lex.sentiment_terms[tok.text]))
        subs.append(sub)

    for pos, sub in enumerate(subs):
        if not sub.sentiments:
            continue
        if sub.targets:
            sub.attributed = [_nearest_target(sub.targets, idx) for idx, _, _ in sub.sentiments]
            continue
        dim = None
        for back in range(1, ATTACH_DISTANCE + 1):
            if pos - back >= 0 and subs[pos - back].targets:
                sub.attached_to = pos - back
                dim = subs[pos - back].targets[-1][2]
                break
        sub.attributed = [dim] * len(sub.sentiments)
    return subs


def raw_scores(
    text: str,
    lex: LexiconSet,
    negation_window: int = NEGATION_WINDOW,
    degree_window: int = DEGREE_WINDOW,
) -> dict[str, float]:
    raw = dict.fromkeys(DIMENSIONS, 0.0)
    for sub in split_subsentences(text, lex):
        toks = sub.tokens
        for (idx, _, weight), dim in zip(sub.sentiments, sub.attributed):
            if dim is None:
                continue
            degree = 1.0
            for tok in toks[max(0, idx - degree_window) : idx]:
                degree *= lex.degree_adverbs.get(tok.text, 1.0)
            negations = sum(tok.text in lex.negation_terms for tok in toks[max(0, idx - negation_window) : idx])
            raw[dim] += weight * degree * (-1) ** negations
    return raw


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def score_review(text: str, lex: LexiconSet, **windows) -> DimensionScores:
    """Ternary score per dimension; ``windows`` are passed to :func:`raw_scores`."""
    raw = raw_scores(text, lex, **windows)
    return DimensionScores(**{d: _sign(raw[d]) for d in DIMENSIONS})


@dataclass(frozen=True)
class Review:
    id: str
    quarter: str
    text: str


@dataclass
class BatchResult:
    scores: list[tuple[str, str, DimensionScores]]
    quarter_means: dict[str, dict[str, float]]
    quarter_counts: dict[str, int]


def load_reviews(path) -> list[Review]:
    """Read line-delimited JSON records with ``id``, ``quarter`` and ``text``."""
    reviews = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                reviews.append(Review(str(rec["id"]), str(rec.get("quarter", "")), str(rec["text"])))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad review record ({exc})") from exc
    return reviews


def _as_review(rec) -> Review:
    if isinstance(rec, Review):
        return rec
    return Review(str(rec["id"]), str(rec.get("quarter", "")), str(rec["text"]))


def score_batch(reviews: Iterable, lex: LexiconSet, workers: int = 1) -> BatchResult:
    reviews = [_as_review(r) for r in reviews]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scored = list(pool.map(lambda r: score_review(r.text, lex), reviews))
    else:
        scored = [score_review(r.text, lex) for r in reviews]

    sums: dict[str, list[int]] = {}
    counts: dict[str, int] = {}
    for r, s in zip(reviews, scored):
        acc = sums.setdefault(r.quarter, [0, 0, 0, 0])
        for i, v in enumerate(s.as_tuple()):
            acc[i] += v
        counts[r.quarter] = counts.get(r.quarter, 0) + 1
    means = {q: {d: acc[i] / counts[q] for i, d in enumerate(DIMENSIONS)} for q, acc in sums.items()}
    return BatchResult([(r.id, r.quarter, s) for r, s in zip(reviews, scored)], means, counts)
