"""Identical-string seed lexicons and the orthogonal Procrustes map.

Embeddings enter the least-squares system as columns: with ``X`` (d x n) the
seed source vectors and ``Y`` (d x n) the seed target vectors, the map is
``W = U Vt`` where ``U S Vt = svd(Y X^T)``. A source row vector ``x`` is mapped
as ``W x``; for a row matrix that is ``X_rows @ W.T``.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .embed import EmbeddingTable, load_embeddings, save_embeddings
from .errors import (
    DimensionMismatchError,
    EmptySeedError,
    ProcrustesError,
    ValidationError,
)

ORTHO_TOL = 1e-6
MAP_PRECISION = 17


class RankDeficiencyWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SeedLexicon:
    pairs: tuple

    def __post_init__(self):
        pairs = tuple((str(s), str(t)) for s, t in self.pairs)
        if len(set(pairs)) != len(pairs):
            raise ValidationError("seed lexicon contains duplicate pairs")
        object.__setattr__(self, "pairs", pairs)

    @property
    def size(self):
        return len(self.pairs)

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


def extract_identical_seed(src, tgt, min_len=1, min_count=None, src_counts=None, tgt_counts=None):
    """Tokens present in both vocabularies, matched by exact (case-sensitive) equality.

    Pairs come out in source-table order. ``min_count`` filters by corpus
    frequency and needs at least one of the count mappings; it is off by default.
    """
    if min_len < 0:
        raise ValidationError("min_len must be non-negative")
    if min_count is not None and src_counts is None and tgt_counts is None:
        raise ValidationError("min_count requires src_counts and/or tgt_counts")

    tgt_vocab = tgt.index
    pairs = []
    for tok in src.tokens:
        if tok not in tgt_vocab or len(tok) < min_len:
            continue
        if min_count is not None:
            if src_counts is not None and src_counts.get(tok, 0) < min_count:
                continue
            if tgt_counts is not None and tgt_counts.get(tok, 0) < min_count:
                continue
        pairs.append((tok, tok))
    if not pairs:
        raise EmptySeedError(
            "no identical tokens shared by the two vocabularies; load a larger "
            "vocabulary (raise --limit) or pass an explicit seed file"
        )
    return SeedLexicon(pairs)


def load_seed_file(path):
    """Read a ``src<TAB>tgt`` seed override; repeated pairs are collapsed."""
    pairs = []
    seen = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValidationError(f"{path}:{lineno}: expected 'src<TAB>tgt'")
            pair = (parts[0], parts[1])
            if pair not in seen:
                seen.add(pair)
                pairs.append(pair)
    if not pairs:
        raise EmptySeedError(f"{path}: seed file holds no pairs")
    return SeedLexicon(pairs)


@dataclass(frozen=True, eq=False)
class OrthogonalMap:
    matrix: np.ndarray
    fit_residual: float = float("nan")
    seed_size: int = 0
    rank_deficient: bool = False

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64, copy=True)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"map must be square, got shape {m.shape}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def orthogonality_error(self):
        w = self.matrix
        return float(np.linalg.norm(w.T @ w - np.eye(self.dim)))

    def apply(self, vectors):
        """Map row vectors (n x d) from the source space into the target space."""
        return np.asarray(vectors, dtype=np.float64) @ self.matrix.T

    def map_table(self, table):
        return EmbeddingTable(table.tokens, self.apply(table.vectors))


def _seed_columns(seed, src, tgt):
    src_idx, tgt_idx = [], []
    for s, t in seed:
        if s not in src.index:
            raise ValidationError(f"seed pair ({s!r}, {t!r}): source token missing")
        if t not in tgt.index:
            raise ValidationError(f"seed pair ({s!r}, {t!r}): target token missing")
        src_idx.append(src.index[s])
        tgt_idx.append(tgt.index[t])
    return src.vectors[src_idx].T, tgt.vectors[tgt_idx].T


def fit_procrustes(seed, src, tgt):
    """Solve min ||W X - Y||_F subject to W^T W = I over the seed pairs."""
    if src.dim != tgt.dim:
        raise DimensionMismatchError(f"source dim {src.dim} != target dim {tgt.dim}")
    if len(seed) == 0:
        raise EmptySeedError("cannot fit a map on an empty seed lexicon")
    for name, table in (("source", src), ("target", tgt)):
        if not table.is_normalized():
            raise ValidationError(f"{name} embeddings must be unit-normalized before fitting")

    x, y = _seed_columns(seed, src, tgt)
    d, n = x.shape
    rank_deficient = n < d
    if rank_deficient:
        warnings.warn(
            f"seed has {n} pairs for dimension {d}; the map is underdetermined",
            RankDeficiencyWarning,
            stacklevel=2,
        )
    try:
        u, _, vt = np.linalg.svd(y @ x.T)
    except np.linalg.LinAlgError as exc:
        raise ProcrustesError(f"SVD failed: {exc}") from exc
    w = u @ vt
    if not np.isfinite(w).all():
        raise ProcrustesError("SVD produced non-finite values")
    residual = float(np.linalg.norm(w @ x - y))
    return OrthogonalMap(w, fit_residual=residual, seed_size=n, rank_deficient=rank_deficient)


def save_map(omap, path):
    tokens = [f"row_{i}" for i in range(omap.dim)]
    save_embeddings(EmbeddingTable(tokens, omap.matrix), path, precision=MAP_PRECISION)


def load_map(path):
    table = load_embeddings(path)
    expected = tuple(f"row_{i}" for i in range(table.dim))
    if table.tokens != expected:
        raise ValidationError(f"{path}: not a map file (rows must be row_0..row_{table.dim - 1})")
    omap = OrthogonalMap(table.vectors)
    if omap.orthogonality_error() >= ORTHO_TOL:
        raise ValidationError(f"{path}: stored matrix is not orthogonal")
    return omap
