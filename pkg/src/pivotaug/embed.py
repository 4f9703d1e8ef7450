"""Word-embedding tables: loading, validation, normalization and persistence.

The on-disk format is the usual word2vec/fastText text dump::

    <count> <dim>
    <token> <f1> ... <fdim>
    ...

Vectors are held in float64. Files written by :func:`save_embeddings` use six
significant digits unless told otherwise.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    ArityError,
    EmptyFileError,
    MalformedHeaderError,
    NonNumericError,
    TruncatedFileError,
    ValidationError,
    ZeroNormError,
)

log = logging.getLogger(__name__)

DEFAULT_DIM = 256
DEFAULT_PRECISION = 6


@dataclass(frozen=True, eq=False)
class EmbeddingTable:
    tokens: tuple
    vectors: np.ndarray
    # (token, line number) for every duplicate row dropped while loading
    duplicates: tuple = field(default=(), repr=False)

    def __post_init__(self):
        tokens = tuple(self.tokens)
        vectors = np.array(self.vectors, dtype=np.float64, copy=True)
        if vectors.ndim != 2:
            raise ValidationError(f"vectors must be a 2-d matrix, got shape {vectors.shape}")
        if vectors.shape[0] != len(tokens):
            raise ValidationError(
                f"{len(tokens)} tokens but {vectors.shape[0]} vector rows"
            )
        if vectors.shape[1] < 1:
            raise ValidationError("embedding dimension must be positive")
        if len(set(tokens)) != len(tokens):
            raise ValidationError("token list contains duplicates")
        if not np.isfinite(vectors).all():
            bad = int(np.flatnonzero(~np.isfinite(vectors).all(axis=1))[0])
            raise ValidationError(f"non-finite entry in vector for token {tokens[bad]!r}")
        vectors.flags.writeable = False
        object.__setattr__(self, "tokens", tokens)
        object.__setattr__(self, "vectors", vectors)

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.tokens)

    @cached_property
    def index(self):
        return {tok: i for i, tok in enumerate(self.tokens)}

    def __contains__(self, token):
        return token in self.index

    def vector(self, token):
        return self.vectors[self.index[token]]

    def subset(self, indices):
        indices = list(indices)
        return EmbeddingTable([self.tokens[i] for i in indices], self.vectors[indices])

    def is_normalized(self, tol=1e-6):
        norms = np.linalg.norm(self.vectors, axis=1)
        return bool(np.all(np.abs(norms - 1.0) <= tol))


def _split_row(line):
    return line.rstrip("\r\n").rstrip(" ").split(" ")


def load_embeddings(path, limit=None):
    """Read an embedding text file.

    Reads ``min(count, limit)`` data rows in file order. Repeated tokens keep
    their first row; the dropped ones are listed in ``table.duplicates`` and
    logged.
    """
    if limit is not None and (not isinstance(limit, (int, np.integer)) or limit < 1):
        raise ValidationError(f"limit must be a positive integer, got {limit!r}")

    with open(path, encoding="utf-8", newline="") as f:
        header = f.readline()
        if not header:
            raise EmptyFileError("empty embedding file", lineno=1, path=path)
        fields = header.split()
        try:
            if len(fields) != 2:
                raise ValueError
            count, dim = int(fields[0]), int(fields[1])
        except ValueError:
            raise MalformedHeaderError(
                f"expected '<count> <dim>' header, got {header.rstrip()!r}", lineno=1, path=path
            ) from None
        if count < 0 or dim < 1:
            raise MalformedHeaderError(
                f"header values out of range: count={count} dim={dim}", lineno=1, path=path
            )

        wanted = count if limit is None else min(count, limit)
        tokens = []
        rows = []
        seen = set()
        duplicates = []
        lineno = 1
        while len(rows) + len(duplicates) < wanted:
            line = f.readline()
            lineno += 1
            if not line:
                raise TruncatedFileError(
                    f"header declares {count} rows but file ends after {lineno - 2}",
                    lineno=lineno,
                    path=path,
                )
            parts = _split_row(line)
            if len(parts) != dim + 1:
                raise ArityError(
                    f"expected token plus {dim} values, got {len(parts) - 1} values",
                    lineno=lineno,
                    path=path,
                )
            token = parts[0]
            try:
                vec = np.array(parts[1:], dtype=np.float64)
            except ValueError:
                raise NonNumericError("non-numeric vector field", lineno=lineno, path=path) from None
            if not np.isfinite(vec).all():
                raise NonNumericError("non-finite vector field", lineno=lineno, path=path)
            if token in seen:
                duplicates.append((token, lineno))
                continue
            seen.add(token)
            tokens.append(token)
            rows.append(vec)

    if duplicates:
        log.warning("%s: dropped %d duplicate token rows (first: %r at line %d)",
                    path, len(duplicates), duplicates[0][0], duplicates[0][1])
    vectors = np.vstack(rows) if rows else np.zeros((0, dim))
    return EmbeddingTable(tokens, vectors, duplicates=tuple(duplicates))


def format_vector(vec, precision=DEFAULT_PRECISION):
    fmt = f"%.{precision}g"
    return " ".join(fmt % v for v in vec)


def save_embeddings(table, path, precision=DEFAULT_PRECISION):
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"{len(table)} {table.dim}\n")
        for token, vec in zip(table.tokens, table.vectors):
            if not token or any(ch.isspace() for ch in token):
                raise ValidationError(f"token {token!r} cannot be written in the text format")
            f.write(token)
            f.write(" ")
            f.write(format_vector(vec, precision))
            f.write("\n")


def normalize_embeddings(table):
    """Scale every row to unit L2 norm. Mean-centering is deliberately not applied."""
    v = table.vectors
    scale = np.abs(v).max(axis=1) if len(v) else np.zeros(0)
    zero = np.flatnonzero(scale == 0.0)
    if zero.size:
        raise ZeroNormError(table.tokens[int(zero[0])])
    # pre-scaling keeps tiny (subnormal) rows from underflowing to norm 0
    v = v / scale[:, None]
    v = v / np.linalg.norm(v, axis=1, keepdims=True)
    return EmbeddingTable(table.tokens, v, duplicates=table.duplicates)
