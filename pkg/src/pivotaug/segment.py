"""Joint byte-pair subword segmentation.

Learning follows greedy BPE: words start as character sequences and the most
frequent adjacent pair is merged until the piece inventory (characters plus
merged units) reaches the target size or no pair occurs at least twice. Ties
go to the lexicographically smallest ``(left, right)``. Pairs never cross
whitespace.

Applying a model replays its merges in priority order, each one as a
left-to-right scan over the word, which reproduces the training-time
segmentation exactly. All pieces of a word except the last carry the marker
suffix, so ``"lower"`` becomes ``"low@@ er"``.
"""

import heapq
import re
from collections import Counter
from dataclasses import dataclass

from .corpus import MonolingualCorpus
from .errors import SegmentationError

DEFAULT_MARKER = "@@"
DEFAULT_VOCAB = 20000
HEADER = "#bpe v1"

_WS = re.compile(r"(\s+)")


@dataclass(frozen=True)
class SubwordModel:
    merges: tuple
    vocab_size: int
    marker: str = DEFAULT_MARKER
    # full piece inventory; only known for freshly learned models
    vocab: frozenset = None

    def __post_init__(self):
        merges = tuple((str(a), str(b)) for a, b in self.merges)
        if len(set(merges)) != len(merges):
            raise SegmentationError("merge list contains duplicates")
        if not self.marker:
            raise SegmentationError("marker must be non-empty")
        object.__setattr__(self, "merges", merges)

    @property
    def ranks(self):
        r = self.__dict__.get("_ranks")
        if r is None:
            r = {pair: i for i, pair in enumerate(self.merges)}
            object.__setattr__(self, "_ranks", r)
        return r


def _merge_word(symbols, left, right):
    out = []
    i = 0
    n = len(symbols)
    while i < n:
        if i < n - 1 and symbols[i] == left and symbols[i + 1] == right:
            out.append(left + right)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return out


def _pairs(symbols):
    return zip(symbols, symbols[1:])


def learn_joint_subwords(corpora, target_vocab=DEFAULT_VOCAB, marker=DEFAULT_MARKER):
    """Learn one BPE model on the concatenation of ``corpora``."""
    if isinstance(corpora, MonolingualCorpus):
        corpora = [corpora]
    word_freq = Counter()
    for corpus in corpora:
        for toks in corpus.tokens():
            word_freq.update(toks)
    if not word_freq:
        raise SegmentationError("cannot learn subwords from empty corpora")

    vocab = set()
    for word in word_freq:
        vocab.update(word)
    if target_vocab < len(vocab):
        raise SegmentationError(
            f"target_vocab={target_vocab} is smaller than the {len(vocab)} distinct characters"
        )

    words = [list(w) for w in word_freq]
    freqs = list(word_freq.values())
    pair_counts = Counter()
    where = {}
    for idx, (symbols, f) in enumerate(zip(words, freqs)):
        for p in _pairs(symbols):
            pair_counts[p] += f
            where.setdefault(p, set()).add(idx)

    heap = [(-c, a, b) for (a, b), c in pair_counts.items()]
    heapq.heapify(heap)
    merges = []

    while len(vocab) < target_vocab and heap:
        negc, a, b = heapq.heappop(heap)
        pair = (a, b)
        if pair_counts.get(pair, 0) != -negc:
            continue  # stale heap entry
        if -negc < 2:
            break
        merges.append(pair)
        vocab.add(a + b)
        touched = set()
        for idx in where.pop(pair, ()):
            old = words[idx]
            new = _merge_word(old, a, b)
            f = freqs[idx]
            old_pairs = set(_pairs(old))
            for p in _pairs(old):
                pair_counts[p] -= f
                touched.add(p)
            for p in _pairs(new):
                pair_counts[p] += f
                touched.add(p)
            new_pairs = set(_pairs(new))
            for p in old_pairs - new_pairs:
                s = where.get(p)
                if s is not None:
                    s.discard(idx)
            for p in new_pairs - old_pairs:
                where.setdefault(p, set()).add(idx)
            words[idx] = new
        for p in touched:
            c = pair_counts[p]
            if c > 0:
                heapq.heappush(heap, (-c, p[0], p[1]))
            else:
                del pair_counts[p]
                where.pop(p, None)

    return SubwordModel(tuple(merges), vocab_size=len(vocab), marker=marker, vocab=frozenset(vocab))


def segment_word(model, word, cache=None):
    if cache is not None and word in cache:
        return cache[word]
    symbols = list(word)
    ranks = model.ranks
    last = -1
    while len(symbols) > 1:
        best = None
        for p in _pairs(symbols):
            r = ranks.get(p)
            if r is not None and r > last and (best is None or r < best):
                best = r
        if best is None:
            break
        a, b = model.merges[best]
        symbols = _merge_word(symbols, a, b)
        last = best
    if cache is not None:
        cache[word] = symbols
    return symbols


def segment_line(model, line, cache=None):
    joiner = model.marker + " "
    parts = _WS.split(line)
    for i in range(0, len(parts), 2):
        if parts[i]:
            parts[i] = joiner.join(segment_word(model, parts[i], cache))
    return "".join(parts)


def apply_segmentation(model, corpus):
    cache = {}
    return MonolingualCorpus([segment_line(model, line, cache) for line in corpus.lines])


def detokenize_line(line, marker=DEFAULT_MARKER):
    return line.replace(marker + " ", "")


def detokenize(corpus, marker=DEFAULT_MARKER):
    if not marker:
        raise SegmentationError("marker must be non-empty")
    return MonolingualCorpus([detokenize_line(line, marker) for line in corpus.lines])


def save_model(model, path):
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"{HEADER} marker={model.marker} vocab={model.vocab_size}\n")
        for a, b in model.merges:
            f.write(f"{a} {b}\n")


def load_model(path):
    with open(path, encoding="utf-8", newline="") as f:
        header = f.readline().rstrip("\r\n")
        if not header.startswith(HEADER):
            raise SegmentationError(f"{path}: missing '{HEADER}' header")
        fields = dict(item.partition("=")[::2] for item in header[len(HEADER):].split())
        try:
            marker = fields["marker"]
            vocab_size = int(fields["vocab"])
        except (KeyError, ValueError):
            raise SegmentationError(f"{path}: malformed header {header!r}") from None
        merges = []
        for lineno, line in enumerate(f, 2):
            line = line.rstrip("\r\n")
            if not line:
                continue
            parts = line.split(" ")
            if len(parts) != 2 or not all(parts):
                raise SegmentationError(f"{path}:{lineno}: expected '<left> <right>'")
            merges.append((parts[0], parts[1]))
    return SubwordModel(tuple(merges), vocab_size=vocab_size, marker=marker)
