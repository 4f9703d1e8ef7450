"""Inputs for modified-UMT initialization.

Builds the pseudo-LRL monolingual corpus by dictionary substitution, learns a
joint subword model on the real and pseudo LRL corpora, and writes a job
bundle (segmented corpora, model, config) for an external trainer. Also holds
the noise function used for denoising auto-encoding inputs.

Random numbers come from numpy's Philox4x64-10 counter-based generator keyed
with ``(seed XOR line_index, 0)`` and a zero counter; uniforms are the
standard 53-bit doubles. Stage 1 draws one uniform per token only when
``p_drop > 0``; stage 2 draws one per surviving token only when
``k_shuffle > 0``.
"""

import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .corpus import MonolingualCorpus
from .errors import ValidationError
from .segment import DEFAULT_VOCAB, apply_segmentation, learn_joint_subwords, save_model
from .subst import substitute_corpus

PRNG_NAME = "numpy-philox4x64-10"
UINT64_MAX = 2**64 - 1

LOSS_NOTES = (
    "L = lambda1 * (E_{x~M_l}[-log P_s->s(x|C(x))] + E_{y~pseudo_M_l}[-log P_t->t(y|C(y))])"
    " + lambda2 * (E_{x~M_l}[-log P_t->s(x|u*(y|x))] + E_{y~pseudo_M_l}[-log P_s->t(y|u*(x|y))]);"
    " C = token drop + bounded shuffle; u* = greedy-decoded translations"
)

CONFIG_NAME = "umt.conf"
MODEL_NAME = "joint.bpe"
CORPUS_A_NAME = "lrl.bpe.txt"
CORPUS_B_NAME = "pseudo_lrl.bpe.txt"


@dataclass(frozen=True)
class NoiseSpec:
    p_drop: float = 0.1
    k_shuffle: int = 3
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p_drop <= 1.0:
            raise ValidationError(f"p_drop must lie in [0, 1], got {self.p_drop}")
        if int(self.k_shuffle) != self.k_shuffle or self.k_shuffle < 0:
            raise ValidationError(f"k_shuffle must be a non-negative integer, got {self.k_shuffle}")
        if int(self.seed) != self.seed or not 0 <= self.seed <= UINT64_MAX:
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


def rng_for_line(seed, line_index=0):
    return np.random.Generator(np.random.Philox(key=(int(seed) ^ int(line_index)) & UINT64_MAX))


def corrupt_sentence(tokens, noise, rng=None):
    """Drop tokens at random, then shuffle with displacement at most ``k_shuffle``.

    If every token would be dropped the first one is kept. The shuffle sorts on
    ``i + u_i * (k_shuffle + 1)`` with stable ties.
    """
    tokens = list(tokens)
    if not tokens:
        return []
    if rng is None:
        rng = rng_for_line(noise.seed)

    if noise.p_drop > 0:
        keep = rng.random(len(tokens)) >= noise.p_drop
        kept = [t for t, k in zip(tokens, keep) if k]
        if not kept:
            kept = tokens[:1]
        tokens = kept

    if noise.k_shuffle > 0 and len(tokens) > 1:
        keys = np.arange(len(tokens)) + rng.random(len(tokens)) * (noise.k_shuffle + 1)
        order = np.argsort(keys, kind="stable")
        tokens = [tokens[i] for i in order]
    return tokens


def corrupt_corpus(corpus, noise):
    """Apply :func:`corrupt_sentence` per line with per-line generator keys."""
    out = []
    for i, line in enumerate(corpus.lines):
        out.append(" ".join(corrupt_sentence(line.split(), noise, rng_for_line(noise.seed, i))))
    return MonolingualCorpus(out)


def build_pseudo_monolingual(hrl_mono, dictionary, fold_case=False):
    corpus, _ = substitute_corpus(hrl_mono, dictionary, fold_case=fold_case)
    return corpus


@dataclass(frozen=True)
class UmtTrainingConfig:
    lambda1: float = 1.0
    lambda2: float = 1.0
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    corpus_a: str = None
    corpus_b: str = None
    segmentation_model: str = None
    notes: str = LOSS_NOTES

    def __post_init__(self):
        for name in ("lambda1", "lambda2"):
            value = getattr(self, name)
            if not value >= 0:
                raise ValidationError(f"{name} must be non-negative, got {value}")

    def to_text(self):
        lines = [
            "# modified-UMT initialization job",
            f"# prng: {PRNG_NAME}, key = seed XOR line_index",
            f"lambda1={float(self.lambda1)!r}",
            f"lambda2={float(self.lambda2)!r}",
            f"p_drop={float(self.noise.p_drop)!r}",
            f"k_shuffle={int(self.noise.k_shuffle)}",
            f"seed={int(self.noise.seed)}",
            f"corpus_a={self.corpus_a or ''}",
            f"corpus_b={self.corpus_b or ''}",
            f"segmentation_model={self.segmentation_model or ''}",
            f"prng={PRNG_NAME}",
            f"notes={' '.join(self.notes.split())}",
        ]
        return "\n".join(lines) + "\n"


def read_config(path):
    values = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\r\n")
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValidationError(f"{path}: expected key=value, got {line!r}")
            values[key] = value
    try:
        noise = NoiseSpec(float(values["p_drop"]), int(values["k_shuffle"]), int(values["seed"]))
        return UmtTrainingConfig(
            lambda1=float(values["lambda1"]),
            lambda2=float(values["lambda2"]),
            noise=noise,
            corpus_a=values.get("corpus_a") or None,
            corpus_b=values.get("corpus_b") or None,
            segmentation_model=values.get("segmentation_model") or None,
            notes=values.get("notes", ""),
        )
    except KeyError as exc:
        raise ValidationError(f"{path}: missing config key {exc.args[0]}") from None


@dataclass(frozen=True)
class UmtJob:
    out_dir: Path
    config: UmtTrainingConfig
    model: object

    @property
    def config_path(self):
        return self.out_dir / CONFIG_NAME

    @property
    def model_path(self):
        return self.out_dir / MODEL_NAME

    @property
    def corpus_a_path(self):
        return self.out_dir / CORPUS_A_NAME

    @property
    def corpus_b_path(self):
        return self.out_dir / CORPUS_B_NAME


def _non_empty(corpus):
    return any(line.split() for line in corpus.lines)


def emit_umt_job(lrl_mono, pseudo_lrl, target_vocab=DEFAULT_VOCAB, config=None, out_dir="."):
    """Write the job bundle: both segmented corpora, the joint model and the config.

    Paths inside the config are relative to ``out_dir``.
    """
    config = config or UmtTrainingConfig()
    if not _non_empty(lrl_mono):
        raise ValidationError("LRL monolingual corpus is empty")
    if not _non_empty(pseudo_lrl):
        raise ValidationError("pseudo-LRL monolingual corpus is empty")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")

    model = learn_joint_subwords([lrl_mono, pseudo_lrl], target_vocab)
    apply_segmentation(model, lrl_mono).to_file(out / CORPUS_A_NAME)
    apply_segmentation(model, pseudo_lrl).to_file(out / CORPUS_B_NAME)
    save_model(model, out / MODEL_NAME)

    config = replace(
        config,
        corpus_a=CORPUS_A_NAME,
        corpus_b=CORPUS_B_NAME,
        segmentation_model=MODEL_NAME,
    )
    for name in (CORPUS_A_NAME, CORPUS_B_NAME):
        if (out / name).stat().st_size == 0:
            raise ValidationError(f"segmented corpus {name} came out empty")
    (out / CONFIG_NAME).write_text(config.to_text(), encoding="utf-8")
    return UmtJob(out, config, model)
