"""Synthetic fixtures with known ground truth.

Real embedding dumps and corpora are large and licensed, so tests and the demo
command use generated data where the correct answer is planted.
"""

import string
from dataclasses import dataclass

import numpy as np

from .corpus import MonolingualCorpus
from .embed import EmbeddingTable
from .induce import InducedDictionary


def random_orthogonal(d, rng):
    """Haar-distributed orthogonal matrix (QR of a Gaussian with sign fix)."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def random_unit_vectors(n, d, rng):
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_words(n, rng, min_len=3, max_len=9, alphabet=string.ascii_lowercase, exclude=()):
    """``n`` distinct random lowercase strings not in ``exclude``."""
    letters = np.array(list(alphabet))
    taken = set(exclude)
    out = []
    while len(out) < n:
        length = int(rng.integers(min_len, max_len + 1))
        w = "".join(letters[rng.integers(0, len(letters), length)])
        if w not in taken:
            taken.add(w)
            out.append(w)
    return out


def planted_rotation(n, d, rng, noise=0.0, tokens=None):
    """Source table X and target table Y = Q X (+ noise) sharing token strings.

    Returns (src, tgt, Q). Both tables are unit-normalized.
    """
    tokens = tokens or [f"w{i}" for i in range(n)]
    x = random_unit_vectors(n, d, rng)
    q = random_orthogonal(d, rng)
    y = x @ q.T
    if noise:
        y = y + noise * rng.standard_normal(y.shape)
        y /= np.linalg.norm(y, axis=1, keepdims=True)
    return EmbeddingTable(tokens, x), EmbeddingTable(tokens, y), q


def zipf_sentences(words, n_sentences, rng, min_len=5, max_len=15, exponent=1.1):
    ranks = np.arange(1, len(words) + 1)
    p = ranks ** -exponent
    p /= p.sum()
    lines = []
    for _ in range(n_sentences):
        length = int(rng.integers(min_len, max_len + 1))
        idx = rng.choice(len(words), size=length, p=p)
        lines.append(" ".join(words[i] for i in idx))
    return MonolingualCorpus(lines)


@dataclass
class RelatedLanguages:
    hrl_emb: EmbeddingTable
    lrl_emb: EmbeddingTable
    planted: dict  # HRL word -> its LRL counterpart (identical for cognates)
    cognates: list
    hrl_corpus: MonolingualCorpus
    lrl_corpus: MonolingualCorpus
    rotation: np.ndarray


def related_languages(rng, n_shared=3000, cognate_rate=0.6, n_private=300, dim=64,
                      noise=0.01, n_sentences=5000):
    """Two related languages whose embeddings differ by a rotation plus noise.

    ``n_shared`` concepts exist in both languages; a ``cognate_rate`` share of
    them is spelled identically (the seed), the rest get unrelated LRL
    spellings. Each side also has ``n_private`` words with no counterpart.
    """
    n_cog = int(round(n_shared * cognate_rate))
    hrl_shared = random_words(n_shared, rng)
    hrl_private = random_words(n_private, rng, exclude=hrl_shared)
    taken = set(hrl_shared) | set(hrl_private)
    lrl_distinct = random_words(n_shared - n_cog, rng, exclude=taken)
    taken |= set(lrl_distinct)
    lrl_private = random_words(n_private, rng, exclude=taken)

    order = rng.permutation(n_shared)
    cognates = [hrl_shared[i] for i in order[:n_cog]]
    planted = {w: w for w in cognates}
    for w, l in zip((hrl_shared[i] for i in order[n_cog:]), lrl_distinct):
        planted[w] = l

    q = random_orthogonal(dim, rng)
    hrl_vecs = random_unit_vectors(n_shared + n_private, dim, rng)
    shared_vecs = hrl_vecs[:n_shared] @ q.T
    shared_vecs = shared_vecs + noise * rng.standard_normal(shared_vecs.shape)
    lrl_vecs = np.vstack([shared_vecs, random_unit_vectors(n_private, dim, rng)])
    lrl_vecs /= np.linalg.norm(lrl_vecs, axis=1, keepdims=True)

    hrl_tokens = hrl_shared + hrl_private
    lrl_tokens = [planted[w] for w in hrl_shared] + lrl_private
    # shuffle the LRL table so that row order carries no signal
    perm = rng.permutation(len(lrl_tokens))
    lrl_emb = EmbeddingTable([lrl_tokens[i] for i in perm], lrl_vecs[perm])
    hrl_emb = EmbeddingTable(hrl_tokens, hrl_vecs)

    hrl_corpus = zipf_sentences(hrl_tokens, n_sentences, rng)
    lrl_corpus = zipf_sentences(lrl_tokens, n_sentences, rng)
    return RelatedLanguages(hrl_emb, lrl_emb, planted, cognates, hrl_corpus, lrl_corpus, q)


def planted_key_corpus(n_lines, rng, tokens_per_line=10, keys_per_line=4, n_keys=50, n_fillers=200):
    """Corpus where exactly ``keys_per_line`` tokens per line are dictionary keys.

    Returns (corpus, dictionary, n_planted).
    """
    keys = random_words(n_keys, rng)
    fillers = random_words(n_fillers, rng, exclude=keys)
    images = random_words(n_keys, rng, alphabet="ABCDEFGHIJ", exclude=keys + fillers)
    lines = []
    for _ in range(n_lines):
        toks = [fillers[i] for i in rng.integers(0, n_fillers, tokens_per_line)]
        pos = rng.choice(tokens_per_line, size=keys_per_line, replace=False)
        for p in pos:
            toks[p] = keys[int(rng.integers(0, n_keys))]
        lines.append(" ".join(toks))
    dictionary = InducedDictionary.from_pairs(dict(zip(keys, images)))
    return MonolingualCorpus(lines), dictionary, n_lines * keys_per_line


_FUZZ_CHARS = string.ascii_letters + string.digits + ".,;:!?'-@\"()" + "çãéñóşğıüöäßжыў"


def fuzz_lines(n, rng, max_words=12, max_word_len=10, marker="@@"):
    """Random single-line texts that never contain ``marker``.

    Words are separated by spaces, occasionally doubled or tabs, to exercise
    whitespace preservation.
    """
    chars = np.array(list(_FUZZ_CHARS))
    seps = [" ", " ", " ", " ", "  ", "\t"]
    lines = []
    while len(lines) < n:
        n_words = int(rng.integers(0, max_words + 1))
        parts = []
        for i in range(n_words):
            if i:
                parts.append(seps[int(rng.integers(0, len(seps)))])
            length = int(rng.integers(1, max_word_len + 1))
            parts.append("".join(chars[rng.integers(0, len(chars), length)]))
        line = "".join(parts)
        if marker not in line:
            lines.append(line)
    return lines
