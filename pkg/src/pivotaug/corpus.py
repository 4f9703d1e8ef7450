"""Plain-text corpora: UTF-8, one sentence per line, ``\\n`` terminated."""

from dataclasses import dataclass
from pathlib import Path

from .errors import LineCountMismatchError, ValidationError


def read_lines(path):
    # newline="" keeps \r and exotic separators inside the line; only \n splits.
    with open(path, encoding="utf-8", newline="") as f:
        text = f.read()
    if not text:
        return []
    lines = text.split("\n")
    if lines[-1] == "":
        lines.pop()
    return lines


def write_lines(path, lines):
    with open(path, "w", encoding="utf-8", newline="") as f:
        for line in lines:
            f.write(line)
            f.write("\n")


def count_lines(path):
    n = 0
    last = b"\n"
    with open(path, "rb") as f:
        while chunk := f.read(1 << 20):
            n += chunk.count(b"\n")
            last = chunk[-1:]
    return n + (last != b"\n")


@dataclass(frozen=True)
class MonolingualCorpus:
    lines: tuple

    def __post_init__(self):
        lines = tuple(self.lines)
        for i, line in enumerate(lines):
            if "\n" in line:
                raise ValidationError(f"line {i + 1} contains an embedded newline")
        object.__setattr__(self, "lines", lines)

    @classmethod
    def from_file(cls, path):
        return cls(read_lines(path))

    @classmethod
    def from_text(cls, text):
        if not text:
            return cls(())
        lines = text.split("\n")
        if lines[-1] == "":
            lines.pop()
        return cls(lines)

    def to_file(self, path):
        write_lines(path, self.lines)
        return Path(path)

    @property
    def line_count(self):
        return len(self.lines)

    def tokens(self):
        """Yield the whitespace-token list of every line."""
        for line in self.lines:
            yield line.split()

    def __len__(self):
        return len(self.lines)

    def __iter__(self):
        return iter(self.lines)


@dataclass(frozen=True)
class ParallelCorpus:
    src: MonolingualCorpus
    tgt: MonolingualCorpus

    def __post_init__(self):
        if self.src.line_count != self.tgt.line_count:
            raise LineCountMismatchError(
                "parallel corpus", self.src.line_count, self.tgt.line_count
            )

    @classmethod
    def from_files(cls, src_path, tgt_path):
        return cls(MonolingualCorpus.from_file(src_path), MonolingualCorpus.from_file(tgt_path))

    @property
    def line_count(self):
        return self.src.line_count
