"""Word-by-word dictionary substitution (HRL text -> pseudo-LRL text).

Each whitespace token is split into leading punctuation, core, and trailing
punctuation (Unicode categories ``P*``). Only the core is looked up; on a hit
the core is replaced and the punctuation re-attached. Punctuation inside the
core (hyphens, apostrophes) stays part of it. Whitespace between tokens is
kept byte for byte.
"""

import re
import unicodedata
from dataclasses import asdict, dataclass

from .corpus import MonolingualCorpus, ParallelCorpus

_WS = re.compile(r"(\s+)")


def _is_punct(ch):
    return unicodedata.category(ch).startswith("P")


def split_punctuation(token):
    """Return (leading, core, trailing). A token made only of punctuation has an empty core."""
    n = len(token)
    i = 0
    while i < n and _is_punct(token[i]):
        i += 1
    if i == n:
        return token, "", ""
    j = n
    while j > i and _is_punct(token[j - 1]):
        j -= 1
    return token[:i], token[i:j], token[j:]


@dataclass(frozen=True)
class SubstitutionReport:
    injected_types: int
    injected_tokens: int
    total_tokens: int

    @property
    def coverage(self):
        if self.total_tokens == 0:
            return 0.0
        return self.injected_tokens / self.total_tokens

    @property
    def degenerate(self):
        return self.total_tokens == 0

    def to_dict(self):
        d = asdict(self)
        d["coverage"] = self.coverage
        d["degenerate"] = self.degenerate
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["injected_types"], d["injected_tokens"], d["total_tokens"])


def substitution_stats(report):
    text = f"WT={report.injected_types} WN={report.injected_tokens} coverage={report.coverage:.4f}"
    if report.degenerate:
        text += " degenerate=empty-corpus"
    return text


class Substituter:
    """Holds the lookup tables; call :meth:`line` per sentence."""

    def __init__(self, dictionary, fold_case=False):
        mapping = dictionary.as_mapping() if hasattr(dictionary, "as_mapping") else dict(dictionary)
        self.mapping = mapping
        self.fold_case = fold_case
        self.folded = {}
        if fold_case:
            # exact lowercase keys win over folded capitalized ones
            for key, value in mapping.items():
                low = key.lower()
                if low == key or low not in self.folded:
                    self.folded[low] = (key, value)
        self.hits = {}
        self.injected = 0
        self.total = 0

    def _lookup(self, core):
        if core in self.mapping:
            return core, self.mapping[core]
        if self.fold_case and core:
            hit = self.folded.get(core.lower())
            if hit is not None:
                key, value = hit
                if core[0].isupper():
                    value = value[:1].upper() + value[1:]
                return key, value
        return None, None

    def token(self, tok):
        self.total += 1
        lead, core, trail = split_punctuation(tok)
        if not core:
            return tok
        key, value = self._lookup(core)
        if key is None:
            return tok
        self.hits[key] = self.hits.get(key, 0) + 1
        self.injected += 1
        return lead + value + trail

    def line(self, line):
        parts = _WS.split(line)
        # even positions hold tokens (possibly "" at the ends), odd ones whitespace
        for i in range(0, len(parts), 2):
            if parts[i]:
                parts[i] = self.token(parts[i])
        return "".join(parts)

    def report(self):
        return SubstitutionReport(len(self.hits), self.injected, self.total)


def substitute_corpus(corpus, dictionary, fold_case=False):
    """Replace dictionary words in ``corpus``; returns (new corpus, report)."""
    sub = Substituter(dictionary, fold_case=fold_case)
    lines = [sub.line(line) for line in corpus.lines]
    return MonolingualCorpus(lines), sub.report()


def substitute_parallel(parallel, dictionary, fold_case=False):
    """Substitute the source side only; the target side is passed through untouched."""
    src, report = substitute_corpus(parallel.src, dictionary, fold_case=fold_case)
    return ParallelCorpus(src, parallel.tgt), report
