"""BLEU (used for pivot BLEU), type frequency tables and rare-word address rate.

Everything works on whitespace tokens; the caller decides the segmentation
level. Pivot BLEU numbers in reports are computed on detokenized text.
"""

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass
from fractions import Fraction

from .corpus import MonolingualCorpus
from .errors import LineCountMismatchError, ValidationError

MAX_ORDER = 4
PRECISION_FLOOR = 1e-9
RARE_PERCENTILE = 10


def _lines(corpus):
    if isinstance(corpus, MonolingualCorpus):
        return corpus.lines
    if isinstance(corpus, str):
        return MonolingualCorpus.from_text(corpus).lines
    return tuple(corpus)


def _report_text(d):
    out = []
    for key, value in d.items():
        if isinstance(value, float):
            value = f"{value:.6f}"
        elif isinstance(value, (list, tuple)):
            value = ",".join(f"{v:.6f}" if isinstance(v, float) else str(v) for v in value)
        out.append(f"{key}={value}")
    return "\n".join(out)


@dataclass(frozen=True)
class BleuReport:
    score: float
    precisions: tuple
    brevity_penalty: float
    hyp_len: int
    ref_len: int
    # a zero precision was floored before taking the log
    smoothed: bool = False
    # orders that had at least one hypothesis n-gram; normally 4
    effective_order: int = MAX_ORDER

    def to_dict(self):
        d = asdict(self)
        d["precisions"] = list(self.precisions)
        return d

    def to_text(self):
        return _report_text(self.to_dict()) + "\n" + json.dumps(self.to_dict(), sort_keys=True)


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(hypotheses, references, floor=PRECISION_FLOOR):
    """Single-reference corpus BLEU with uniform weights over orders 1-4.

    Clipped matches and n-gram totals are summed over lines. A zero precision is
    floored at ``floor`` and the report is marked as smoothed. Orders for which
    the hypothesis has no n-grams at all (every line shorter than n) are left
    out of the geometric mean, so BLEU(x, x) is 100 for any non-empty x.
    """
    hyps = _lines(hypotheses)
    refs = _lines(references)
    if len(hyps) != len(refs):
        raise LineCountMismatchError("hypotheses vs references", len(hyps), len(refs))
    matches = [0] * MAX_ORDER
    totals = [0] * MAX_ORDER
    hyp_len = ref_len = 0
    for h, r in zip(hyps, refs):
        ht, rt = h.split(), r.split()
        hyp_len += len(ht)
        ref_len += len(rt)
        for n in range(1, MAX_ORDER + 1):
            if len(ht) < n:
                break
            hc = _ngrams(ht, n)
            rc = _ngrams(rt, n)
            matches[n - 1] += sum(min(c, rc[g]) for g, c in hc.items())
            totals[n - 1] += len(ht) - n + 1
    if hyp_len == 0:
        raise ValidationError("empty hypothesis corpus")

    precisions = tuple(m / t if t else 0.0 for m, t in zip(matches, totals))
    used = [i for i in range(MAX_ORDER) if totals[i] > 0]
    smoothed = any(precisions[i] == 0.0 for i in used)
    log_mean = sum(math.log(max(precisions[i], floor)) for i in used) / len(used)
    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    score = 100.0 * bp * math.exp(log_mean)
    return BleuReport(score, precisions, bp, hyp_len, ref_len, smoothed, len(used))


class FrequencyTable:
    """Whitespace-token counts; iteration order is order of first appearance."""

    def __init__(self, counts=None):
        self.counts = Counter()
        if counts:
            self.counts.update(counts)

    @classmethod
    def from_corpus(cls, corpus):
        table = cls()
        for line in _lines(corpus):
            table.counts.update(line.split())
        return table

    def __getitem__(self, token):
        return self.counts.get(token, 0)

    def __len__(self):
        return len(self.counts)

    def __add__(self, other):
        out = FrequencyTable(self.counts)
        out.counts.update(other.counts)
        return out

    def __eq__(self, other):
        return isinstance(other, FrequencyTable) and dict(self.counts) == dict(other.counts)

    def percentile_threshold(self, p):
        """Frequency of the type at rank ceil(p*T/100), types sorted by ascending count.

        Returns 0 for an empty table. Ranks are clamped to [1, T].
        """
        n_types = len(self.counts)
        if n_types == 0:
            return 0
        frac = Fraction(str(p)) if isinstance(p, float) else Fraction(p)
        if not 0 <= frac <= 100:
            raise ValidationError(f"percentile must lie in [0, 100], got {p}")
        rank = min(max(math.ceil(frac * n_types / 100), 1), n_types)
        ordered = sorted(self.counts.values())
        return ordered[rank - 1]


def build_frequency_table(training):
    return FrequencyTable.from_corpus(training)


@dataclass(frozen=True)
class AddressRateReport:
    rare_count: int
    addressed_count: int
    base_threshold: int = 0
    combined_threshold: int = 0

    @property
    def address_rate(self):
        return self.addressed_count / self.rare_count if self.rare_count else 0.0

    @property
    def degenerate(self):
        return self.rare_count == 0

    def to_dict(self):
        d = asdict(self)
        d["address_rate"] = self.address_rate
        d["degenerate"] = self.degenerate
        return d

    def to_text(self):
        return _report_text(self.to_dict()) + "\n" + json.dumps(self.to_dict(), sort_keys=True)


def address_rate(test, base_training, augmented, percentile=RARE_PERCENTILE):
    """Share of rare test word types that stop being rare once ``augmented`` is added.

    A test type is rare if its base-training count (0 when absent) is at most
    the base table's percentile threshold; it is addressed if its count in
    base + augmented exceeds the threshold recomputed on the combined table.
    """
    base = FrequencyTable.from_corpus(base_training)
    combined = base + FrequencyTable.from_corpus(augmented)
    base_thr = base.percentile_threshold(percentile)
    comb_thr = combined.percentile_threshold(percentile)

    test_types = dict.fromkeys(tok for line in _lines(test) for tok in line.split())
    rare = [t for t in test_types if base[t] <= base_thr]
    addressed = [t for t in rare if combined[t] > comb_thr]
    return AddressRateReport(len(rare), len(addressed), base_thr, comb_thr)
