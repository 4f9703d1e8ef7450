"""Command-line entry point: ``pivotaug <command> ...``.

Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from .align import extract_identical_seed, fit_procrustes, load_map, load_seed_file, save_map
from .corpus import MonolingualCorpus
from .embed import load_embeddings, normalize_embeddings, save_embeddings
from .errors import ValidationError
from .induce import DEFAULT_BLOCK_SIZE, DEFAULT_K, CslsParams, induce_dictionary, load_dictionary, save_dictionary
from .metrics import address_rate, corpus_bleu
from .pipeline import (
    SCENARIOS,
    AugmentationTag,
    combine_datasets,
    ingest_external_translations,
    open_manifest,
    run_scenario,
)
from .segment import (
    DEFAULT_MARKER,
    DEFAULT_VOCAB,
    apply_segmentation,
    detokenize,
    learn_joint_subwords,
    load_model,
    save_model,
)
from .subst import substitute_corpus, substitution_stats
from .umtprep import NoiseSpec, UmtTrainingConfig, build_pseudo_monolingual, emit_umt_job

log = logging.getLogger("pivotaug")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _load_normalized(path, limit):
    return normalize_embeddings(load_embeddings(path, limit=limit))


def cmd_embed(args):
    table = load_embeddings(args.src_emb, limit=args.limit)
    if not args.no_normalize:
        table = normalize_embeddings(table)
    print(f"tokens={len(table)} dim={table.dim} duplicates={len(table.duplicates)}")
    if args.out:
        save_embeddings(table, args.out)


def cmd_align(args):
    src = _load_normalized(args.src_emb, args.limit)
    tgt = _load_normalized(args.tgt_emb, args.limit)
    if args.seed_file:
        seed = load_seed_file(args.seed_file)
    else:
        seed = extract_identical_seed(src, tgt, min_len=args.min_len)
    omap = fit_procrustes(seed, src, tgt)
    save_map(omap, args.out)
    print(f"seed={seed.size} dim={omap.dim} residual={omap.fit_residual:.6f} "
          f"orthogonality_error={omap.orthogonality_error():.3e}"
          + (" rank_deficient=1" if omap.rank_deficient else ""))


def cmd_induce(args):
    src = _load_normalized(args.src_emb, args.limit)
    tgt = _load_normalized(args.tgt_emb, args.limit)
    omap = load_map(args.map)
    d = induce_dictionary(omap, src, tgt, CslsParams(args.k), mode=args.mode,
                          block_size=args.block_size, workers=args.workers)
    save_dictionary(d, args.out)
    print(f"mode={d.mode.value} k={d.k} entries={len(d)}")


def cmd_substitute(args):
    dictionary = load_dictionary(args.dict)
    corpus, report = substitute_corpus(MonolingualCorpus.from_file(args.input), dictionary,
                                       fold_case=args.fold_case)
    corpus.to_file(args.out)
    print(substitution_stats(report))
    if args.report:
        Path(args.report).write_text(json.dumps(report.to_dict(), sort_keys=True) + "\n")


def cmd_segment(args):
    if args.action == "learn":
        corpora = [MonolingualCorpus.from_file(p) for p in args.input]
        model = learn_joint_subwords(corpora, args.vocab_size)
        save_model(model, args.out)
        print(f"merges={len(model.merges)} vocab={model.vocab_size}")
    elif args.action == "apply":
        model = load_model(args.model)
        apply_segmentation(model, MonolingualCorpus.from_file(args.input[0])).to_file(args.out)
    else:
        detokenize(MonolingualCorpus.from_file(args.input[0]), args.marker).to_file(args.out)


def _umt_config(args):
    noise = NoiseSpec(args.p_drop, args.k_shuffle, args.seed)
    return UmtTrainingConfig(lambda1=args.lambda1, lambda2=args.lambda2, noise=noise)


def cmd_umt_prep(args):
    dictionary = load_dictionary(args.dict)
    config = _umt_config(args)
    if args.manifest:
        with open_manifest(args.manifest) as manifest:
            run_scenario(manifest, "umt_prep", args.out, lrl=args.lrl_mono, hrl=args.hrl_mono,
                         dictionary=dictionary, target_vocab=args.vocab_size, umt_config=config)
        print(f"manifest={args.manifest}")
        return
    lrl = MonolingualCorpus.from_file(args.lrl_mono)
    pseudo = build_pseudo_monolingual(MonolingualCorpus.from_file(args.hrl_mono), dictionary)
    job = emit_umt_job(lrl, pseudo, args.vocab_size, config, args.out)
    print(f"config={job.config_path}")


def cmd_bleu(args):
    hyp = MonolingualCorpus.from_file(args.hyp)
    ref = MonolingualCorpus.from_file(args.ref)
    if args.detok:
        hyp, ref = detokenize(hyp, args.detok), detokenize(ref, args.detok)
    print(corpus_bleu(hyp, ref).to_text())


def cmd_address_rate(args):
    report = address_rate(MonolingualCorpus.from_file(args.test),
                          MonolingualCorpus.from_file(args.base),
                          MonolingualCorpus.from_file(args.augmented),
                          percentile=args.percentile)
    print(report.to_text())


def cmd_pipeline(args):
    with open_manifest(args.manifest) as manifest:
        if args.action == "register":
            entry = manifest.register(AugmentationTag.parse(args.tag), args.src, args.tgt,
                                      name=args.name)
            print(f"{entry.name} lines={entry.line_count}")
        elif args.action == "ingest":
            entry = ingest_external_translations(manifest, args.source, args.translated,
                                                 AugmentationTag.parse(args.tag), name=args.name)
            print(f"{entry.name} lines={entry.line_count}")
        elif args.action == "run":
            dictionary = load_dictionary(args.dict)
            before = set(manifest.entries)
            kw = dict(parent=args.parent, dictionary=dictionary, translated=args.translated,
                      source=args.source, lrl=args.lrl_mono, hrl=args.hrl_mono,
                      target_vocab=args.vocab_size, fold_case=args.fold_case)
            if args.scenario == "umt_prep":
                kw["umt_config"] = _umt_config(args)
            run_scenario(manifest, args.scenario, args.out, **kw)
            for name in manifest.entries:
                if name not in before:
                    e = manifest.entries[name]
                    print(f"{name} lines={e.line_count}")
        elif args.action == "combine":
            entry = combine_datasets(manifest, args.names, args.out, name=args.name)
            print(f"{entry.name} lines={entry.line_count}")
        else:
            problems = manifest.validate()
            for p in problems:
                print(p)
            if problems:
                raise ValidationError(f"{len(problems)} manifest problem(s)")
            print(f"ok entries={len(manifest)}")


def build_parser():
    p = _Parser(prog="pivotaug", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("embed", help="validate and normalize an embedding file")
    s.add_argument("--src-emb", required=True)
    s.add_argument("--out")
    s.add_argument("--limit", type=int)
    s.add_argument("--no-normalize", action="store_true")
    s.set_defaults(func=cmd_embed)

    s = sub.add_parser("align", help="fit the orthogonal map on identical-word seeds")
    s.add_argument("--src-emb", required=True)
    s.add_argument("--tgt-emb", required=True)
    s.add_argument("--seed-file", help="TSV seed lexicon overriding identical words")
    s.add_argument("--min-len", type=int, default=1)
    s.add_argument("--limit", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_align)

    s = sub.add_parser("induce", help="induce a CSLS dictionary")
    s.add_argument("--src-emb", required=True)
    s.add_argument("--tgt-emb", required=True)
    s.add_argument("--map", required=True)
    s.add_argument("--mode", choices=["bi", "uni"], default="bi")
    s.add_argument("--k", type=int, default=DEFAULT_K)
    s.add_argument("--block-size", type=int, default=DEFAULT_BLOCK_SIZE)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--limit", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_induce)

    s = sub.add_parser("substitute", help="word-by-word dictionary substitution")
    s.add_argument("--dict", required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--report", help="write the substitution report as JSON")
    s.add_argument("--fold-case", action="store_true")
    s.set_defaults(func=cmd_substitute)

    s = sub.add_parser("segment", help="learn/apply/undo joint BPE segmentation")
    s.add_argument("action", choices=["learn", "apply", "detok"])
    s.add_argument("--input", action="append", required=True)
    s.add_argument("--model")
    s.add_argument("--vocab-size", type=int, default=DEFAULT_VOCAB)
    s.add_argument("--marker", default=DEFAULT_MARKER)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_segment)

    def noise_args(s):
        s.add_argument("--vocab-size", type=int, default=DEFAULT_VOCAB)
        s.add_argument("--p-drop", type=float, default=0.1)
        s.add_argument("--k-shuffle", type=int, default=3)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--lambda1", type=float, default=1.0)
        s.add_argument("--lambda2", type=float, default=1.0)

    s = sub.add_parser("umt-prep", help="emit the modified-UMT job bundle")
    s.add_argument("--lrl-mono", required=True)
    s.add_argument("--hrl-mono", required=True)
    s.add_argument("--dict", required=True)
    s.add_argument("--manifest")
    s.add_argument("--out", required=True)
    noise_args(s)
    s.set_defaults(func=cmd_umt_prep)

    s = sub.add_parser("bleu", help="corpus BLEU (pivot BLEU)")
    s.add_argument("--hyp", required=True)
    s.add_argument("--ref", required=True)
    s.add_argument("--detok", metavar="MARKER", help="detokenize both sides first")
    s.set_defaults(func=cmd_bleu)

    s = sub.add_parser("address-rate", help="rare-word address rate")
    s.add_argument("--test", required=True)
    s.add_argument("--base", required=True)
    s.add_argument("--augmented", required=True)
    s.add_argument("--percentile", type=float, default=10)
    s.set_defaults(func=cmd_address_rate)

    s = sub.add_parser("pipeline", help="manifest-tracked augmentation scenarios")
    s.add_argument("action", choices=["register", "run", "combine", "ingest", "validate"])
    s.add_argument("--manifest", required=True)
    s.add_argument("--tag", help="dataset tag such as S.h, M.e or S.s.e-h")
    s.add_argument("--name")
    s.add_argument("--src")
    s.add_argument("--tgt")
    s.add_argument("--scenario", choices=SCENARIOS)
    s.add_argument("--parent")
    s.add_argument("--dict")
    s.add_argument("--source")
    s.add_argument("--translated")
    s.add_argument("--lrl-mono")
    s.add_argument("--hrl-mono")
    s.add_argument("--fold-case", action="store_true")
    s.add_argument("--names", nargs="+")
    s.add_argument("--out", default=".")
    noise_args(s)
    s.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "pipeline":
        required = {"register": ["tag", "src"], "ingest": ["tag", "source", "translated"],
                    "run": ["scenario", "dict"], "combine": ["names"], "validate": []}
        missing = [r for r in required[args.action] if getattr(args, r) is None]
        if missing:
            parser.error(f"pipeline {args.action} needs --" + ", --".join(missing))
    if args.command == "segment" and args.action == "apply" and not args.model:
        parser.error("segment apply needs --model")
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
