"""Pivot-based data augmentation for low-resource machine translation.

Converts high-resource-language text into pseudo-low-resource text through an
induced bilingual dictionary, prepares modified-UMT training inputs, and
scores the results (pivot BLEU, rare-word address rate).
"""

from .align import OrthogonalMap, SeedLexicon, extract_identical_seed, fit_procrustes
from .corpus import MonolingualCorpus, ParallelCorpus
from .embed import EmbeddingTable, load_embeddings, normalize_embeddings, save_embeddings
from .induce import CslsParams, InducedDictionary, Mode, csls_score, induce_dictionary
from .metrics import address_rate, build_frequency_table, corpus_bleu
from .pipeline import AugmentationTag, DatasetManifest, combine_datasets, ingest_external_translations, run_scenario
from .segment import SubwordModel, apply_segmentation, detokenize, learn_joint_subwords
from .subst import SubstitutionReport, substitute_corpus, substitution_stats
from .umtprep import NoiseSpec, UmtTrainingConfig, build_pseudo_monolingual, corrupt_sentence, emit_umt_job

__version__ = "0.1.0"
