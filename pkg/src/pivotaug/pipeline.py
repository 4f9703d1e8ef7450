"""Augmentation scenarios and the dataset provenance manifest.

Dataset tags follow the usual augmentation notation: ``S`` (parallel) or ``M``
(monolingual), an optional method letter, and the translation route through
``l`` (low-resource), ``h`` (high-resource) and ``e`` (English). Rendered
tags double as file names, e.g. ``S.w.h-l`` is word-substituted HRL->LRL data
paired with the HRL corpus's English side, and ``S.s.e-h`` is English
back-translated to HRL by a supervised system.

Method letters: ``s`` supervised translation, ``w`` word substitution,
``u`` unsupervised MT, ``m`` modified (substitution-initialized) UMT.
"""

import hashlib
import json
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

from filelock import FileLock

from .corpus import MonolingualCorpus, count_lines
from .errors import LineCountMismatchError, ManifestError, ValidationError
from .segment import DEFAULT_VOCAB
from .subst import substitute_corpus
from .umtprep import emit_umt_job

LANGS = ("l", "h", "e")
METHODS = ("s", "w", "u", "m")
EXTERNAL_METHODS = ("s", "u", "m")
ORIGINS = ("parallel", "monolingual")
SCENARIOS = ("hrl_to_lrl_subst", "eng_to_hrl_to_lrl_subst", "umt_prep")

MANIFEST_FORMAT = "pivotaug-manifest"
MANIFEST_VERSION = 1


@dataclass(frozen=True)
class AugmentationTag:
    path: tuple
    method: str = None
    origin: str = "parallel"

    def __post_init__(self):
        path = tuple(self.path)
        object.__setattr__(self, "path", path)
        if not path:
            raise ValidationError("tag path must name at least one language")
        bad = [p for p in path if p not in LANGS]
        if bad:
            raise ValidationError(f"unknown language code(s) {bad} in tag path")
        if self.origin not in ORIGINS:
            raise ValidationError(f"tag origin must be one of {ORIGINS}, got {self.origin!r}")
        if len(path) >= 2 and self.method is None:
            raise ValidationError("a generated dataset (path length >= 2) needs a method")
        if self.method is not None and self.method not in METHODS:
            raise ValidationError(f"unknown augmentation method {self.method!r}")
        if len(path) == 1 and self.method is not None:
            raise ValidationError("an original dataset (path length 1) takes no method")

    def render(self):
        parts = ["S" if self.origin == "parallel" else "M"]
        if self.method:
            parts.append(self.method)
        parts.append("-".join(self.path))
        return ".".join(parts)

    __str__ = render

    @classmethod
    def parse(cls, text):
        parts = text.split(".")
        if len(parts) not in (2, 3) or parts[0] not in ("S", "M"):
            raise ValidationError(f"cannot parse dataset tag {text!r}")
        origin = "parallel" if parts[0] == "S" else "monolingual"
        method = parts[1] if len(parts) == 3 else None
        return cls(tuple(parts[-1].split("-")), method, origin)

    def to_dict(self):
        return {"path": list(self.path), "method": self.method, "origin": self.origin}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["path"]), d.get("method"), d.get("origin", "parallel"))


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        while chunk := f.read(1 << 20):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class ManifestEntry:
    name: str
    tag: AugmentationTag  # None for concatenations
    src_path: Path
    tgt_path: Path  # None for monolingual data
    line_count: int
    content_hash: str  # of the source-side file
    tgt_hash: str = None
    parents: list = field(default_factory=list)
    report: dict = None
    extra: dict = field(default_factory=dict)

    @property
    def parallel(self):
        return self.tgt_path is not None

    @property
    def origin(self):
        return "parallel" if self.parallel else "monolingual"

    def check_files(self):
        """Return a list of problems found by re-reading the files."""
        problems = []
        for side, path, digest in (("src", self.src_path, self.content_hash),
                                   ("tgt", self.tgt_path, self.tgt_hash)):
            if path is None:
                continue
            if not Path(path).is_file():
                problems.append(f"{self.name}: {side} file {path} is missing")
                continue
            n = count_lines(path)
            if n != self.line_count:
                problems.append(f"{self.name}: {side} has {n} lines, manifest says {self.line_count}")
            if sha256_file(path) != digest:
                problems.append(f"{self.name}: {side} content hash changed")
        return problems


def _measure(src_path, tgt_path=None):
    n = count_lines(src_path)
    tgt_hash = None
    if tgt_path is not None:
        m = count_lines(tgt_path)
        if m != n:
            raise LineCountMismatchError(f"{Path(src_path).name} vs {Path(tgt_path).name}", n, m)
        tgt_hash = sha256_file(tgt_path)
    return n, sha256_file(src_path), tgt_hash


class DatasetManifest:
    """Ordered record of datasets; entries may only reference earlier entries."""

    def __init__(self, path=None, lock=None):
        self.path = Path(path) if path is not None else None
        self.entries = {}
        self._lock = lock

    # persistence -----------------------------------------------------------

    @property
    def base_dir(self):
        return self.path.parent if self.path is not None else Path.cwd()

    def _rel(self, p):
        if p is None:
            return None
        return os.path.relpath(Path(p).resolve(), self.base_dir.resolve())

    def _abs(self, p):
        if p is None:
            return None
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    def to_dict(self):
        entries = []
        for e in self.entries.values():
            entries.append({
                "name": e.name,
                "tag": e.tag.to_dict() if e.tag else None,
                "tag_str": e.tag.render() if e.tag else None,
                "origin": e.origin,
                "src_path": self._rel(e.src_path),
                "tgt_path": self._rel(e.tgt_path),
                "line_count": e.line_count,
                "content_hash": e.content_hash,
                "tgt_hash": e.tgt_hash,
                "parents": list(e.parents),
                "report": e.report,
                "extra": e.extra,
            })
        return {"format": MANIFEST_FORMAT, "version": MANIFEST_VERSION, "entries": entries}

    @classmethod
    def load(cls, path, lock=None):
        m = cls(path, lock)
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
        if data.get("format") != MANIFEST_FORMAT:
            raise ManifestError(f"{path}: not a dataset manifest")
        for d in data["entries"]:
            entry = ManifestEntry(
                name=d["name"],
                tag=AugmentationTag.from_dict(d["tag"]) if d.get("tag") else None,
                src_path=m._abs(d["src_path"]),
                tgt_path=m._abs(d.get("tgt_path")),
                line_count=d["line_count"],
                content_hash=d["content_hash"],
                tgt_hash=d.get("tgt_hash"),
                parents=list(d.get("parents", [])),
                report=d.get("report"),
                extra=d.get("extra") or {},
            )
            m.entries[entry.name] = entry
        return m

    @classmethod
    def open(cls, path, lock=None):
        """Load ``path`` if it exists, otherwise start an empty manifest there."""
        path = Path(path)
        return cls.load(path, lock) if path.exists() else cls(path, lock)

    def lock(self):
        # one reentrant lock object per manifest; a second FileLock on the
        # same file from this process would block on itself
        if self._lock is None:
            self._lock = FileLock(str(self.path) + ".lock")
        return self._lock

    def save(self):
        if self.path is None:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
        tmp = self.path.with_name(self.path.name + ".tmp")
        with self.lock():
            tmp.write_text(text, encoding="utf-8")
            os.replace(tmp, self.path)

    # entries ----------------------------------------------------------------

    def __contains__(self, name):
        return name in self.entries

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries.values())

    def get(self, name):
        try:
            return self.entries[name]
        except KeyError:
            raise ManifestError(f"no manifest entry named {name!r}") from None

    def unique_name(self, base):
        if base not in self.entries:
            return base
        i = 2
        while f"{base}.{i}" in self.entries:
            i += 1
        return f"{base}.{i}"

    def add(self, entry):
        if entry.name in self.entries:
            raise ManifestError(f"duplicate entry name {entry.name!r}")
        for p in entry.parents:
            if p not in self.entries:
                raise ManifestError(f"{entry.name}: parent {p!r} is not in the manifest")
        self.entries[entry.name] = entry
        self.save()
        return entry

    def register(self, tag, src_path, tgt_path=None, parents=(), name=None, report=None, extra=None):
        """Record an existing dataset, measuring line counts and hashes."""
        if (tgt_path is None) != (tag.origin == "monolingual"):
            raise ManifestError(f"tag {tag} origin does not match the number of files given")
        n, h, th = _measure(src_path, tgt_path)
        entry = ManifestEntry(
            name=name or self.unique_name(tag.render()),
            tag=tag,
            src_path=Path(src_path),
            tgt_path=Path(tgt_path) if tgt_path is not None else None,
            line_count=n,
            content_hash=h,
            tgt_hash=th,
            parents=list(parents),
            report=report,
            extra=dict(extra or {}),
        )
        return self.add(entry)

    def validate(self):
        """Re-check files, parent references and acyclicity; returns a list of problems."""
        problems = []
        seen = set()
        for e in self.entries.values():
            for p in e.parents:
                if p not in self.entries:
                    problems.append(f"{e.name}: unknown parent {p!r}")
                elif p not in seen:
                    problems.append(f"{e.name}: parent {p!r} does not precede it (cycle?)")
            problems.extend(e.check_files())
            seen.add(e.name)
        return problems

    def ancestry(self, name):
        """Names of all ancestors of ``name``, nearest first (duplicates kept once)."""
        out = []
        frontier = list(self.get(name).parents)
        while frontier:
            p = frontier.pop(0)
            if p not in out:
                out.append(p)
                frontier.extend(self.get(p).parents)
        return out


@contextmanager
def open_manifest(path):
    """Hold the manifest's advisory lock for a whole load-modify-save cycle."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lock = FileLock(str(path) + ".lock")
    with lock:
        manifest = DatasetManifest.open(path, lock)
        yield manifest
        manifest.save()


# operations -------------------------------------------------------------------


def _resolve_source(manifest, source, lang):
    """Entry for ``source``: an entry name, or a raw monolingual file to register."""
    if isinstance(source, ManifestEntry):
        return source
    if source in manifest:
        return manifest.get(source)
    if Path(source).is_file():
        return manifest.register(AugmentationTag((lang,), None, "monolingual"), source)
    raise ManifestError(f"{source!r} is neither a manifest entry nor an existing file")


def ingest_external_translations(manifest, source, translated, tag, name=None):
    """Register text translated by an external system.

    The translation becomes the source side of a new parallel entry. Its target
    side is the original text: the monolingual file itself, or the target side
    of a parallel source entry.
    """
    if isinstance(tag, str):
        tag = AugmentationTag.parse(tag)
    if tag.method not in EXTERNAL_METHODS:
        raise ManifestError(
            f"ingested data must use method s, u or m, not {tag.method!r}"
        )
    if tag.origin != "parallel":
        raise ManifestError("ingested translations form parallel data; use an 'S.' tag")
    src_entry = _resolve_source(manifest, source, tag.path[0])
    if src_entry.tag is not None:
        prefix = src_entry.tag.path
        if tag.path[:len(prefix)] != prefix or len(tag.path) != len(prefix) + 1:
            raise ManifestError(
                f"tag route {'-'.join(tag.path)} does not extend source route {'-'.join(prefix)}"
            )
    original = src_entry.tgt_path if src_entry.parallel else src_entry.src_path
    n_src = count_lines(original)
    n_tr = count_lines(translated)
    if n_src != n_tr:
        raise LineCountMismatchError(
            f"translated {Path(translated).name} vs source {src_entry.name}", n_tr, n_src
        )
    return manifest.register(tag, translated, original, parents=[src_entry.name], name=name)


def _substitute_entry(manifest, parent, dictionary, out_dir, fold_case):
    pt = parent.tag
    if pt is None or not parent.parallel or pt.path[-1] != "h":
        raise ManifestError(f"{parent.name}: substitution needs parallel data with an HRL source side")
    n_src = count_lines(parent.src_path)
    n_tgt = count_lines(parent.tgt_path)
    if n_src != n_tgt:
        raise LineCountMismatchError(f"pivot source vs target of {parent.name}", n_src, n_tgt)
    problems = parent.check_files()
    if problems:
        raise ManifestError("; ".join(problems))

    tag = AugmentationTag(pt.path + ("l",), "w", "parallel")
    name = manifest.unique_name(tag.render())
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus, report = substitute_corpus(MonolingualCorpus.from_file(parent.src_path), dictionary,
                                       fold_case=fold_case)
    src_path = corpus.to_file(out / f"{name}.src")
    return manifest.register(tag, src_path, parent.tgt_path, parents=[parent.name], name=name,
                             report=report.to_dict())


def run_scenario(manifest, scenario, out_dir, *, parent=None, dictionary=None,
                 translated=None, source=None, lrl=None, hrl=None,
                 target_vocab=DEFAULT_VOCAB, umt_config=None, fold_case=False):
    """Run one augmentation scenario and record its outputs in ``manifest``.

    ``hrl_to_lrl_subst``
        ``parent`` names an HRL-ENG parallel entry (tag ``S.h``).
    ``eng_to_hrl_to_lrl_subst``
        ``parent`` names a back-translated entry (tag ``S.*.e-h``); or pass
        ``translated`` (pseudo-HRL file) and ``source`` (English entry or file)
        to ingest it first as ``S.s.e-h``.
    ``umt_prep``
        ``lrl`` and ``hrl`` name monolingual entries or files; writes the UMT
        job bundle under ``out_dir/umt`` and registers the pseudo-LRL corpus.
    """
    if scenario not in SCENARIOS:
        raise ValidationError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
    if dictionary is None:
        raise ValidationError(f"scenario {scenario} needs a dictionary")

    if scenario == "hrl_to_lrl_subst":
        entry = manifest.get(parent)
        if entry.tag is None or entry.tag.path != ("h",):
            raise ManifestError(f"{parent}: expected an original HRL-ENG entry (S.h)")
        _substitute_entry(manifest, entry, dictionary, out_dir, fold_case)

    elif scenario == "eng_to_hrl_to_lrl_subst":
        if parent is None:
            if translated is None or source is None:
                raise ValidationError("give either parent or translated + source")
            entry = ingest_external_translations(
                manifest, source, translated, AugmentationTag(("e", "h"), "s"))
        else:
            entry = manifest.get(parent)
        if entry.tag is None or entry.tag.path != ("e", "h"):
            raise ManifestError(f"{entry.name}: expected a back-translated e->h entry")
        _substitute_entry(manifest, entry, dictionary, out_dir, fold_case)

    else:
        if lrl is None or hrl is None:
            raise ValidationError("umt_prep needs lrl and hrl monolingual inputs")
        lrl_entry = _resolve_source(manifest, lrl, "l")
        hrl_entry = _resolve_source(manifest, hrl, "h")
        for e in (lrl_entry, hrl_entry):
            problems = e.check_files()
            if problems:
                raise ManifestError("; ".join(problems))
        lrl_corpus = MonolingualCorpus.from_file(lrl_entry.src_path)
        pseudo, report = substitute_corpus(MonolingualCorpus.from_file(hrl_entry.src_path),
                                           dictionary, fold_case=fold_case)
        tag = AugmentationTag(("h", "l"), "w", "monolingual")
        name = manifest.unique_name(tag.render())
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        pseudo_path = pseudo.to_file(out / f"{name}.txt")
        job_dir = out / f"{name}.umt"
        job = emit_umt_job(lrl_corpus, pseudo, target_vocab, umt_config, job_dir)
        extra = {
            "umt_job": manifest._rel(job_dir),
            "umt_config": manifest._rel(job.config_path),
            "lrl_entry": lrl_entry.name,
        }
        manifest.register(tag, pseudo_path, parents=[hrl_entry.name], name=name,
                          report=report.to_dict(), extra=extra)
    return manifest


def combine_datasets(manifest, names, out_dir, name=None):
    """Concatenate entries in the given order; repeating an entry is allowed."""
    if not names:
        raise ValidationError("nothing to combine")
    parts = [manifest.get(n) for n in names]
    origins = {p.origin for p in parts}
    if len(origins) > 1:
        raise ManifestError("cannot combine parallel and monolingual entries")
    parallel = parts[0].parallel

    name = name or manifest.unique_name("C." + "+".join(names))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    safe = name.replace(os.sep, "_")
    sides = [("src_path", out / f"{safe}.src")]
    if parallel:
        sides.append(("tgt_path", out / f"{safe}.tgt"))
    for attr, dest in sides:
        with open(dest, "wb") as w:
            for p in parts:
                data = Path(getattr(p, attr)).read_bytes()
                if data and not data.endswith(b"\n"):
                    raise ManifestError(f"{p.name}: {attr} does not end with a newline")
                w.write(data)
    n, h, th = _measure(*(dest for _, dest in sides))
    expected = sum(p.line_count for p in parts)
    if n != expected:
        raise ManifestError(f"combined file has {n} lines, parts sum to {expected}")
    entry = ManifestEntry(
        name=name,
        tag=None,
        src_path=sides[0][1],
        tgt_path=sides[1][1] if parallel else None,
        line_count=n,
        content_hash=h,
        tgt_hash=th,
        parents=list(names),
    )
    return manifest.add(entry)
