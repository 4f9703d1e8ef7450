import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pivotaug.align import (
    OrthogonalMap,
    RankDeficiencyWarning,
    SeedLexicon,
    extract_identical_seed,
    fit_procrustes,
    load_map,
    load_seed_file,
    save_map,
)
from pivotaug.embed import EmbeddingTable
from pivotaug.errors import DimensionMismatchError, EmptySeedError, ValidationError
from pivotaug.synthetic import planted_rotation, random_orthogonal, random_unit_vectors, random_words


def table(tokens, d=2, rng=None):
    rng = rng or np.random.default_rng(0)
    return EmbeddingTable(tokens, random_unit_vectors(len(tokens), d, rng))


def test_seed_is_intersection_in_source_order():
    seed = extract_identical_seed(table(["casa", "de", "qax"]), table(["mova", "de", "casa"]))
    assert seed.pairs == (("casa", "casa"), ("de", "de"))
    assert seed.size == 2


def test_disjoint_vocabularies_raise():
    with pytest.raises(EmptySeedError, match="seed file"):
        extract_identical_seed(table(["a", "b"]), table(["c", "d"]))


def test_seed_is_case_sensitive_and_respects_min_len():
    src, tgt = table(["Casa", "de", "a"]), table(["casa", "de", "a"])
    assert extract_identical_seed(src, tgt).pairs == (("de", "de"), ("a", "a"))
    assert extract_identical_seed(src, tgt, min_len=2).pairs == (("de", "de"),)


def test_seed_min_count_filter():
    src, tgt = table(["x", "y", "z"]), table(["x", "y", "z"])
    seed = extract_identical_seed(src, tgt, min_count=3, src_counts={"x": 5, "y": 1, "z": 3})
    assert seed.pairs == (("x", "x"), ("z", "z"))
    with pytest.raises(ValidationError):
        extract_identical_seed(src, tgt, min_count=3)


def test_planted_shared_strings_at_scale():
    rng = np.random.default_rng(11)
    words = random_words(20000 - 1237, rng)
    shared = random_words(1237, rng, exclude=words)
    half = (20000 - 1237) // 2
    a_tokens = words[:half] + shared
    b_tokens = shared[::-1] + words[half:]
    a_tokens = [a_tokens[i] for i in rng.permutation(len(a_tokens))]
    a = EmbeddingTable(a_tokens, np.ones((len(a_tokens), 1)))
    b = EmbeddingTable(b_tokens, np.ones((len(b_tokens), 1)))
    # oracle: hash-set intersection from the generator side
    expected = set(a_tokens) & set(b_tokens)
    assert len(expected) == 1237
    seed = extract_identical_seed(a, b)
    assert seed.size == 1237
    assert {s for s, _ in seed} == expected


def test_identity_map_when_spaces_agree():
    rng = np.random.default_rng(1)
    src, _, _ = planted_rotation(50, 8, rng)
    seed = extract_identical_seed(src, src)
    omap = fit_procrustes(seed, src, src)
    assert np.linalg.norm(omap.matrix - np.eye(8)) < 1e-6
    assert omap.fit_residual < 1e-12


def test_one_dimensional_sign_flip():
    src = EmbeddingTable(["x"], [[1.0]])
    tgt = EmbeddingTable(["x"], [[-1.0]])
    omap = fit_procrustes(SeedLexicon([("x", "x")]), src, tgt)
    np.testing.assert_allclose(omap.matrix, [[-1.0]], atol=1e-12)


def test_planted_rotation_recovered():
    rng = np.random.default_rng(2024)
    src, tgt, q = planted_rotation(5000, 64, rng)
    omap = fit_procrustes(extract_identical_seed(src, tgt), src, tgt)
    assert np.linalg.norm(omap.matrix - q) < 1e-6
    assert omap.orthogonality_error() < 1e-6
    assert abs(abs(np.linalg.det(omap.matrix)) - 1) < 1e-6
    assert not omap.rank_deficient


def test_planted_precision_at_one():
    rng = np.random.default_rng(5)
    src, tgt, _ = planted_rotation(2000, 32, rng)
    omap = fit_procrustes(extract_identical_seed(src, tgt), src, tgt)
    nn = (omap.apply(src.vectors) @ tgt.vectors.T).argmax(axis=1)
    assert np.array_equal(nn, np.arange(2000))


def test_fit_is_optimal_against_random_rotations():
    rng = np.random.default_rng(7)
    d, n = 6, 40
    src = EmbeddingTable([f"w{i}" for i in range(n)], random_unit_vectors(n, d, rng))
    tgt = EmbeddingTable(src.tokens, random_unit_vectors(n, d, rng))
    seed = extract_identical_seed(src, tgt)
    omap = fit_procrustes(seed, src, tgt)
    x, y = src.vectors.T, tgt.vectors.T
    best = np.linalg.norm(omap.matrix @ x - y)
    assert best == pytest.approx(omap.fit_residual)
    for _ in range(100):
        r = random_orthogonal(d, rng)
        assert best <= np.linalg.norm(r @ x - y) + 1e-9


def test_seed_order_does_not_matter():
    rng = np.random.default_rng(8)
    src, tgt, _ = planted_rotation(300, 16, rng, noise=0.3)
    seed = extract_identical_seed(src, tgt)
    w1 = fit_procrustes(seed, src, tgt).matrix
    shuffled = SeedLexicon([seed.pairs[i] for i in rng.permutation(seed.size)])
    w2 = fit_procrustes(shuffled, src, tgt).matrix
    assert np.abs(w1 - w2).max() < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(1, 30), st.integers(0, 2**32 - 1))
def test_orthogonality_on_any_input(d, n, seed_value):
    rng = np.random.default_rng(seed_value)
    tokens = [f"w{i}" for i in range(n)]
    src = EmbeddingTable(tokens, random_unit_vectors(n, d, rng))
    tgt = EmbeddingTable(tokens, random_unit_vectors(n, d, rng))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeficiencyWarning)
        omap = fit_procrustes(extract_identical_seed(src, tgt), src, tgt)
    assert omap.orthogonality_error() < 1e-6
    assert abs(abs(np.linalg.det(omap.matrix)) - 1) < 1e-6


def test_rank_deficiency_warns_but_fits():
    rng = np.random.default_rng(9)
    src, tgt, _ = planted_rotation(3, 10, rng)
    with pytest.warns(RankDeficiencyWarning):
        omap = fit_procrustes(extract_identical_seed(src, tgt), src, tgt)
    assert omap.rank_deficient
    assert omap.orthogonality_error() < 1e-6
    # still maps the seed exactly
    np.testing.assert_allclose(omap.apply(src.vectors), tgt.vectors, atol=1e-9)


def test_fit_errors():
    a = EmbeddingTable(["x"], [[1.0, 0.0]])
    b = EmbeddingTable(["x"], [[1.0, 0.0, 0.0]])
    with pytest.raises(DimensionMismatchError):
        fit_procrustes(SeedLexicon([("x", "x")]), a, b)
    with pytest.raises(ValidationError, match="missing"):
        fit_procrustes(SeedLexicon([("x", "y")]), a, a)
    with pytest.raises(EmptySeedError):
        fit_procrustes(SeedLexicon([]), a, a)
    unnormalized = EmbeddingTable(["x"], [[2.0, 0.0]])
    with pytest.raises(ValidationError, match="normalized"):
        fit_procrustes(SeedLexicon([("x", "x")]), unnormalized, a)


def test_map_file_roundtrip(tmp_path):
    rng = np.random.default_rng(10)
    q = random_orthogonal(12, rng)
    save_map(OrthogonalMap(q), tmp_path / "w.txt")
    first = (tmp_path / "w.txt").read_text().splitlines()
    assert first[0] == "12 12"
    assert first[1].startswith("row_0 ")
    loaded = load_map(tmp_path / "w.txt")
    np.testing.assert_array_equal(loaded.matrix, q)
    assert loaded.orthogonality_error() < 1e-12


def test_load_map_rejects_non_orthogonal(tmp_path):
    (tmp_path / "w.txt").write_text("2 2\nrow_0 1 1\nrow_1 0 1\n")
    with pytest.raises(ValidationError, match="orthogonal"):
        load_map(tmp_path / "w.txt")


def test_seed_file(tmp_path):
    (tmp_path / "seed.tsv").write_text("casa\tcasa\ncão\tcan\ncasa\tcasa\n\n", encoding="utf-8")
    seed = load_seed_file(tmp_path / "seed.tsv")
    assert seed.pairs == (("casa", "casa"), ("cão", "can"))
    (tmp_path / "bad.tsv").write_text("one column\n")
    with pytest.raises(ValidationError):
        load_seed_file(tmp_path / "bad.tsv")
