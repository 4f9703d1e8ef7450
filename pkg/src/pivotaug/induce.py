"""CSLS retrieval and bilingual dictionary induction.

For a mapped source vector ``u`` and a target vector ``v`` (both unit norm)::

    CSLS(u, v) = 2 cos(u, v) - r_T(u) - r_S(v)

``r_T(u)`` is the mean cosine of ``u`` to its K nearest target vectors and
``r_S(v)`` the mean cosine of ``v`` to its K nearest mapped source vectors.

All similarity products are computed in fixed row tiles of ``TILE`` rows
anchored at absolute row indices. BLAS kernels round differently depending on
operand shape, so the tiling is what makes results bit-identical across block
sizes and worker counts. ``block_size`` only controls how many tiles form one
unit of work (and peak memory: ``block_size * V * 8`` bytes per worker).
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import CslsParameterError, ValidationError

TILE = 128
DEFAULT_K = 10
DEFAULT_BLOCK_SIZE = 1024


class Mode(str, Enum):
    BIDIRECTIONAL = "bi"
    UNIDIRECTIONAL = "uni"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {"bi": cls.BIDIRECTIONAL, "bidirectional": cls.BIDIRECTIONAL,
                   "uni": cls.UNIDIRECTIONAL, "unidirectional": cls.UNIDIRECTIONAL}
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValidationError(f"unknown induction mode {value!r}") from None


@dataclass(frozen=True)
class CslsParams:
    k_neighborhood: int = DEFAULT_K

    def __post_init__(self):
        if not isinstance(self.k_neighborhood, (int, np.integer)) or self.k_neighborhood < 1:
            raise CslsParameterError(f"k_neighborhood must be >= 1, got {self.k_neighborhood!r}")

    def check(self, n_src, n_tgt):
        k = self.k_neighborhood
        if k > n_tgt:
            raise CslsParameterError(f"K={k} exceeds target vocabulary size {n_tgt}")
        if k > n_src:
            raise CslsParameterError(f"K={k} exceeds source vocabulary size {n_src}")


def _blocks(n, block_size):
    if block_size < 1:
        raise ValidationError("block_size must be positive")
    step = -(-block_size // TILE) * TILE
    return [(s, min(s + step, n)) for s in range(0, n, step)]


def _products(queries, base_t, start, stop):
    """queries[start:stop] @ base_t, computed tile by tile."""
    out = np.empty((stop - start, base_t.shape[1]))
    for t in range(start, stop, TILE):
        e = min(t + TILE, stop)
        out[t - start:e - start] = queries[t:e] @ base_t
    return out


def _run(fn, blocks, workers):
    if workers <= 1 or len(blocks) <= 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, blocks))


def _topk_mean(sims, k):
    n = sims.shape[1]
    top = np.partition(sims, n - k, axis=1)[:, n - k:]
    top.sort(axis=1)
    return top.sum(axis=1) / k


def neighborhood_density(queries, base, k, block_size=DEFAULT_BLOCK_SIZE, workers=1):
    """Mean similarity of every query row to its ``k`` most similar base rows."""
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    base_t = np.ascontiguousarray(np.asarray(base, dtype=np.float64).T)
    if not 1 <= k <= base_t.shape[1]:
        raise CslsParameterError(f"K={k} outside [1, {base_t.shape[1]}]")

    def work(block):
        return _topk_mean(_products(queries, base_t, *block), k)

    parts = _run(work, _blocks(len(queries), block_size), workers)
    return np.concatenate(parts) if parts else np.zeros(0)


@dataclass(frozen=True, eq=False)
class CslsDensities:
    k: int
    src: np.ndarray  # r_T of each mapped source vector
    tgt: np.ndarray  # r_S of each target vector


def compute_densities(mapped_src, tgt_vectors, k, block_size=DEFAULT_BLOCK_SIZE, workers=1):
    return CslsDensities(
        k=k,
        src=neighborhood_density(mapped_src, tgt_vectors, k, block_size, workers),
        tgt=neighborhood_density(tgt_vectors, mapped_src, k, block_size, workers),
    )


def csls_score(mapped_src_vec, tgt_vec, src_density, tgt_density):
    """CSLS for one pair, given the precomputed densities of both words."""
    return 2.0 * float(np.dot(mapped_src_vec, tgt_vec)) - src_density - tgt_density


def csls_matrix(mapped_src, tgt_vectors, k, block_size=DEFAULT_BLOCK_SIZE):
    """Dense CSLS matrix (sources x targets). Only meant for small vocabularies."""
    mapped_src = np.ascontiguousarray(mapped_src, dtype=np.float64)
    tgt_vectors = np.ascontiguousarray(tgt_vectors, dtype=np.float64)
    CslsParams(k).check(len(mapped_src), len(tgt_vectors))
    dens = compute_densities(mapped_src, tgt_vectors, k, block_size)
    sims = _products(mapped_src, np.ascontiguousarray(tgt_vectors.T), 0, len(mapped_src))
    return 2.0 * sims - dens.src[:, None] - dens.tgt[None, :]


class DictEntry(NamedTuple):
    src: str
    tgt: str
    score: float


@dataclass(frozen=True)
class InducedDictionary:
    entries: tuple
    mode: Mode = None
    k: int = None
    projected_token_count: int = field(default=None, compare=False)

    def __post_init__(self):
        entries = tuple(DictEntry(*e) for e in self.entries)
        srcs = [e.src for e in entries]
        if len(set(srcs)) != len(srcs):
            dup = next(s for s in srcs if srcs.count(s) > 1)
            raise ValidationError(f"dictionary repeats source token {dup!r}")
        object.__setattr__(self, "entries", entries)
        if self.mode is not None:
            object.__setattr__(self, "mode", Mode.parse(self.mode))

    @classmethod
    def from_pairs(cls, pairs, **kw):
        """Build from (src, tgt) pairs or a mapping; scores are left as NaN."""
        if hasattr(pairs, "items"):
            pairs = pairs.items()
        return cls([(s, t, float("nan")) for s, t in pairs], **kw)

    @property
    def word_types(self):
        return len(self.entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def as_mapping(self):
        return {e.src: e.tgt for e in self.entries}

    def pairs(self):
        return {(e.src, e.tgt) for e in self.entries}


@dataclass(frozen=True, eq=False)
class _Argmaxes:
    fwd_idx: np.ndarray
    fwd_score: np.ndarray
    bwd_idx: np.ndarray


def _csls_argmaxes(mapped_src, tgt_vectors, dens, block_size, workers):
    tgt_t = np.ascontiguousarray(tgt_vectors.T)

    def work(block):
        start, stop = block
        scores = 2.0 * _products(mapped_src, tgt_t, start, stop)
        scores -= dens.src[start:stop, None]
        scores -= dens.tgt[None, :]
        rows = np.arange(stop - start)
        fwd = scores.argmax(axis=1)
        col = scores.argmax(axis=0)
        return fwd, scores[rows, fwd], col + start, scores[col, np.arange(scores.shape[1])]

    results = _run(work, _blocks(len(mapped_src), block_size), workers)
    fwd_idx = np.concatenate([r[0] for r in results])
    fwd_score = np.concatenate([r[1] for r in results])
    # Strict ">" in block order keeps the lowest source index on ties.
    bwd_idx = results[0][2].copy()
    bwd_best = results[0][3].copy()
    for _, _, idx, best in results[1:]:
        better = best > bwd_best
        bwd_idx[better] = idx[better]
        bwd_best[better] = best[better]
    return _Argmaxes(fwd_idx, fwd_score, bwd_idx)


def induce_dictionary(omap, src, tgt, params=None, mode=Mode.BIDIRECTIONAL,
                      block_size=DEFAULT_BLOCK_SIZE, workers=1):
    """Induce a dictionary from normalized source/target tables and a fitted map.

    Unidirectional mode keeps every source word with its CSLS-best target;
    bidirectional mode keeps only mutual best pairs. Entries are sorted by
    descending score, ties by source load order. Argmax ties go to the lowest
    index.
    """
    params = params or CslsParams()
    mode = Mode.parse(mode)
    if len(src) == 0 or len(tgt) == 0:
        raise ValidationError("cannot induce a dictionary from an empty vocabulary")
    if omap.dim != src.dim or src.dim != tgt.dim:
        raise ValidationError(
            f"dimension mismatch: map {omap.dim}, source {src.dim}, target {tgt.dim}"
        )
    k = params.k_neighborhood
    params.check(len(src), len(tgt))

    mapped = np.ascontiguousarray(omap.apply(src.vectors))
    tgt_vectors = np.ascontiguousarray(tgt.vectors)
    dens = compute_densities(mapped, tgt_vectors, k, block_size, workers)
    am = _csls_argmaxes(mapped, tgt_vectors, dens, block_size, workers)

    src_ids = np.arange(len(src))
    if mode is Mode.BIDIRECTIONAL:
        src_ids = src_ids[am.bwd_idx[am.fwd_idx] == src_ids]
    scores = am.fwd_score[src_ids]
    order = np.lexsort((src_ids, -scores))
    entries = [
        (src.tokens[i], tgt.tokens[am.fwd_idx[i]], float(am.fwd_score[i]))
        for i in src_ids[order]
    ]
    return InducedDictionary(entries, mode=mode, k=k)


def save_dictionary(dictionary, path):
    k = dictionary.k if dictionary.k is not None else "na"
    mode = dictionary.mode.value if dictionary.mode is not None else "na"
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"#csls k={k} mode={mode}\n")
        for e in dictionary.entries:
            f.write(f"{e.src}\t{e.tgt}\t{e.score:.9g}\n")


def load_dictionary(path):
    """Read a dictionary TSV. The header and the score column are optional."""
    entries = []
    k = mode = None
    with open(path, encoding="utf-8", newline="") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            if lineno == 1 and line.startswith("#csls"):
                for item in line.split()[1:]:
                    key, _, value = item.partition("=")
                    if key == "k" and value != "na":
                        k = int(value)
                    elif key == "mode" and value != "na":
                        mode = Mode.parse(value)
                continue
            parts = line.split("\t")
            if len(parts) == 2:
                entries.append((parts[0], parts[1], float("nan")))
            elif len(parts) == 3:
                try:
                    entries.append((parts[0], parts[1], float(parts[2])))
                except ValueError:
                    raise ValidationError(f"{path}:{lineno}: bad score {parts[2]!r}") from None
            else:
                raise ValidationError(f"{path}:{lineno}: expected 'src<TAB>tgt[<TAB>score]'")
    return InducedDictionary(entries, mode=mode, k=k)
