import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pivotaug.align import OrthogonalMap, extract_identical_seed, fit_procrustes
from pivotaug.embed import EmbeddingTable
from pivotaug.errors import CslsParameterError, ValidationError
from pivotaug.induce import (
    CslsParams,
    InducedDictionary,
    Mode,
    compute_densities,
    csls_matrix,
    csls_score,
    induce_dictionary,
    load_dictionary,
    save_dictionary,
)
from pivotaug.synthetic import planted_rotation, random_unit_vectors


def brute_csls(u, v, k):
    """Reference: plain Python loops, no numpy reductions."""
    u = [list(map(float, r)) for r in u]
    v = [list(map(float, r)) for r in v]

    def dot(a, b):
        return math.fsum(x * y for x, y in zip(a, b))

    cos = [[dot(a, b) for b in v] for a in u]
    r_t = [math.fsum(sorted(row, reverse=True)[:k]) / k for row in cos]
    cols = [[cos[i][j] for i in range(len(u))] for j in range(len(v))]
    r_s = [math.fsum(sorted(col, reverse=True)[:k]) / k for col in cols]
    return [[2 * cos[i][j] - r_t[i] - r_s[j] for j in range(len(v))] for i in range(len(u))]


def brute_dictionary(scores, mode):
    n_src, n_tgt = len(scores), len(scores[0])
    fwd = [max(range(n_tgt), key=lambda j: (scores[i][j], -j)) for i in range(n_src)]
    bwd = [max(range(n_src), key=lambda i: (scores[i][j], -i)) for j in range(n_tgt)]
    keep = [i for i in range(n_src) if mode == "uni" or bwd[fwd[i]] == i]
    return {(i, fwd[i]) for i in keep}


def tables(n_src, n_tgt, d, rng):
    src = EmbeddingTable([f"s{i}" for i in range(n_src)], random_unit_vectors(n_src, d, rng))
    tgt = EmbeddingTable([f"t{i}" for i in range(n_tgt)], random_unit_vectors(n_tgt, d, rng))
    return src, tgt


def identity(d):
    return OrthogonalMap(np.eye(d))


def test_two_token_hand_example():
    e = np.eye(2)
    m = csls_matrix(e, e, 1)
    np.testing.assert_array_equal(m, [[0.0, -2.0], [-2.0, 0.0]])
    dens = compute_densities(e, e, 1)
    assert csls_score(e[0], e[0], dens.src[0], dens.tgt[0]) == 0.0
    assert csls_score(e[0], e[1], dens.src[0], dens.tgt[1]) == -2.0
    src = EmbeddingTable(["s1", "s2"], e)
    tgt = EmbeddingTable(["t1", "t2"], e)
    d = induce_dictionary(identity(2), src, tgt, CslsParams(1), mode="bi")
    assert d.pairs() == {("s1", "t1"), ("s2", "t2")}


def test_constant_field_cancels():
    # all pairwise cosines equal: rows are the same vector
    v = np.tile([0.6, 0.8], (5, 1))
    np.testing.assert_allclose(csls_matrix(v, v, 5), 0.0, atol=1e-15)


@pytest.mark.parametrize("k", [1, 5, 10])
@pytest.mark.parametrize("shape", [(50, 50), (200, 150), (37, 200)])
def test_matrix_matches_brute_force(k, shape):
    rng = np.random.default_rng(k * 1000 + shape[0])
    u = random_unit_vectors(shape[0], 16, rng)
    v = random_unit_vectors(shape[1], 16, rng)
    got = csls_matrix(u, v, k, block_size=64)
    want = np.array(brute_csls(u, v, k))
    assert np.abs(got - want).max() < 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 40), st.integers(2, 40), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_dictionary_matches_brute_force(n_src, n_tgt, d, seed_value):
    rng = np.random.default_rng(seed_value)
    src, tgt = tables(n_src, n_tgt, d, rng)
    k = int(rng.integers(1, min(n_src, n_tgt) + 1))
    scores = brute_csls(src.vectors, tgt.vectors, k)
    for mode in ("uni", "bi"):
        got = induce_dictionary(identity(d), src, tgt, CslsParams(k), mode=mode)
        want = {(f"s{i}", f"t{j}") for i, j in brute_dictionary(scores, mode)}
        assert got.pairs() == want


def test_bidirectional_subset_on_random_instances():
    rng = np.random.default_rng(100)
    for _ in range(100):
        n_src, n_tgt, d = (int(x) for x in rng.integers(2, 60, 3))
        src, tgt = tables(n_src, n_tgt, d, rng)
        k = int(rng.integers(1, min(n_src, n_tgt, 10) + 1))
        bi = induce_dictionary(identity(d), src, tgt, CslsParams(k), mode="bi")
        uni = induce_dictionary(identity(d), src, tgt, CslsParams(k), mode="uni")
        assert bi.pairs() <= uni.pairs()
        assert len(bi) <= len(uni) == n_src


def test_mutual_argmax_invariant():
    rng = np.random.default_rng(4)
    src, tgt = tables(120, 90, 8, rng)
    d = induce_dictionary(identity(8), src, tgt, CslsParams(5), mode="bi")
    m = csls_matrix(src.vectors, tgt.vectors, 5)
    for e in d:
        i, j = src.index[e.src], tgt.index[e.tgt]
        assert m[i].argmax() == j
        assert m[:, j].argmax() == i
        assert e.score == pytest.approx(m[i, j], abs=1e-12)


def test_entries_sorted_by_descending_score():
    rng = np.random.default_rng(5)
    src, tgt = tables(300, 300, 8, rng)
    d = induce_dictionary(identity(8), src, tgt, mode="uni")
    scores = [e.score for e in d]
    assert scores == sorted(scores, reverse=True)


def test_planted_rotation_gives_identity_pairing():
    rng = np.random.default_rng(6)
    src, tgt, _ = planted_rotation(1000, 32, rng)
    omap = fit_procrustes(extract_identical_seed(src, tgt), src, tgt)
    d = induce_dictionary(omap, src, tgt, mode="bi")
    assert len(d) == 1000
    assert all(e.src == e.tgt for e in d)


def test_partitioning_does_not_change_results():
    rng = np.random.default_rng(7)
    src, tgt, _ = planted_rotation(700, 24, rng, noise=0.5)
    omap = fit_procrustes(extract_identical_seed(src, tgt), src, tgt)
    ref = induce_dictionary(omap, src, tgt, block_size=10**6, workers=1)
    for block_size, workers in [(1, 1), (128, 3), (300, 2), (513, 4)]:
        got = induce_dictionary(omap, src, tgt, block_size=block_size, workers=workers)
        assert got.entries == ref.entries


def test_argmax_invariant_under_positive_scaling():
    rng = np.random.default_rng(8)
    m = csls_matrix(random_unit_vectors(40, 6, rng), random_unit_vectors(30, 6, rng), 3)
    for c in (0.5, 3.0, 1e6):
        assert np.array_equal((m * c).argmax(axis=1), m.argmax(axis=1))


def test_ties_go_to_lowest_index():
    # two identical targets: every source prefers the first one
    src = EmbeddingTable(["a", "b"], [[1.0, 0.0], [0.0, 1.0]])
    tgt = EmbeddingTable(["x", "x2", "y"], [[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    d = induce_dictionary(identity(2), src, tgt, CslsParams(1), mode="uni")
    assert d.as_mapping() == {"a": "x", "b": "y"}
    # two identical sources: only the first survives the backward check
    src = EmbeddingTable(["a", "a2"], [[1.0, 0.0], [1.0, 0.0]])
    tgt = EmbeddingTable(["x", "y"], [[1.0, 0.0], [0.0, 1.0]])
    d = induce_dictionary(identity(2), src, tgt, CslsParams(1), mode="bi")
    assert d.as_mapping() == {"a": "x"}


def test_parameter_errors():
    e = EmbeddingTable(["a", "b"], np.eye(2))
    with pytest.raises(CslsParameterError):
        CslsParams(0)
    with pytest.raises(CslsParameterError):
        induce_dictionary(identity(2), e, e, CslsParams(3))
    with pytest.raises(CslsParameterError):
        csls_matrix(np.eye(2), np.eye(2), 5)
    with pytest.raises(ValidationError):
        induce_dictionary(identity(2), EmbeddingTable([], np.zeros((0, 2))), e)
    with pytest.raises(ValidationError):
        induce_dictionary(identity(3), e, e)
    with pytest.raises(ValidationError):
        Mode.parse("sideways")
    assert Mode.parse("Bidirectional") is Mode.BIDIRECTIONAL


def test_dictionary_rejects_repeated_source():
    with pytest.raises(ValidationError):
        InducedDictionary.from_pairs([("a", "x"), ("a", "y")])


def test_dictionary_file_roundtrip(tmp_path):
    rng = np.random.default_rng(9)
    src, tgt = tables(60, 60, 5, rng)
    d = induce_dictionary(identity(5), src, tgt, CslsParams(4), mode="bi")
    save_dictionary(d, tmp_path / "d.tsv")
    lines = (tmp_path / "d.tsv").read_text().splitlines()
    assert lines[0] == "#csls k=4 mode=bi"
    assert len(lines) == len(d) + 1
    loaded = load_dictionary(tmp_path / "d.tsv")
    assert loaded.k == 4 and loaded.mode is Mode.BIDIRECTIONAL
    assert [e[:2] for e in loaded] == [e[:2] for e in d]
    for a, b in zip(loaded, d):
        assert a.score == pytest.approx(b.score, rel=1e-8, abs=1e-12)


def test_load_plain_two_column_dictionary(tmp_path):
    (tmp_path / "d.tsv").write_text("casa\tcasa\nnão\tnon\n", encoding="utf-8")
    d = load_dictionary(tmp_path / "d.tsv")
    assert d.as_mapping() == {"casa": "casa", "não": "non"}
    assert d.mode is None
    (tmp_path / "bad.tsv").write_text("a\tb\tc\td\n")
    with pytest.raises(ValidationError):
        load_dictionary(tmp_path / "bad.tsv")
