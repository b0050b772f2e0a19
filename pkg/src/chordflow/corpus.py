"""Corpus model: composers, dated works, and deterministic persistence.

A corpus directory holds two CSV files and one sequence file per work:

    works.csv      header ``work_id,composer_id,year,title,sequence_file``
    composers.csv  header ``composer_id,name,birth_year,death_year,period``
    sequences/     UTF-8 text, one codeword per line (``60,64,67``),
                   pitches ascending; blank lines and ``#`` comments ignored

This layout is the interchange contract: saving and reloading a corpus is
the identity, byte for byte on re-save.
"""

from __future__ import annotations

import csv
import enum
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal

import numpy as np

from .codeword import (
    Codeword,
    CodewordSequence,
    CodewordError,
    format_codeword,
    make_codeword,
    parse_codeword,
)

WORKS_CSV = "works.csv"
COMPOSERS_CSV = "composers.csv"
SEQUENCE_DIR = "sequences"

_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")


class CorpusError(ValueError):
    """Raised for malformed corpus files or inconsistent corpus contents."""


class Period(enum.Enum):
    BAROQUE = "Baroque"
    CLASSICAL = "Classical"
    TRANSITION = "Transition"
    ROMANTIC = "Romantic"
    OTHER = "Other"


@dataclass(frozen=True)
class Composer:
    id: str
    name: str
    birth_year: int
    death_year: int
    period: Period

    def __post_init__(self) -> None:
        if not _ID_RE.match(self.id):
            raise CorpusError(f"invalid composer id {self.id!r}")
        if self.death_year < self.birth_year:
            raise CorpusError(f"composer {self.id}: death year precedes birth year")

    @property
    def midpoint_year(self) -> float:
        """Timeline position: midpoint of the composer's birth and death years."""
        return (self.birth_year + self.death_year) / 2


@dataclass(frozen=True)
class Work:
    id: str
    composer_id: str
    year: int
    title: str
    sequence: CodewordSequence

    def __post_init__(self) -> None:
        if not _ID_RE.match(self.id):
            raise CorpusError(f"invalid work id {self.id!r}")
        if len(self.sequence) < 1:
            raise CorpusError(f"work {self.id}: empty sequence")

    @property
    def length(self) -> int:
        return len(self.sequence)


@dataclass(frozen=True)
class _WorkVectors:
    """Interned views of one work's sequence, shared by the scoring paths.

    ``ids`` maps each codeword to its vocabulary index; ``pairs`` packs each
    consecutive transition as ``from_id * vocab_size + to_id``. The u-arrays
    are the unique transitions / unique from-codewords with multiplicities.
    """

    m: int
    first_id: int
    ids: np.ndarray
    pairs: np.ndarray
    ukeys: np.ndarray
    umults: np.ndarray
    urow_ids: np.ndarray
    urow_counts: np.ndarray


class Corpus:
    """An immutable set of composers and dated works over a fixed vocabulary.

    The vocabulary defaults to every codeword observed in the loaded works
    and stays fixed afterwards; an explicit superset can be supplied for
    sensitivity runs.
    """

    def __init__(self, composers: Iterable[Composer], works: Iterable[Work],
                 vocabulary: Iterable[Codeword] | None = None) -> None:
        self.composers: dict[str, Composer] = {}
        for comp in sorted(composers, key=lambda c: c.id):
            if comp.id in self.composers:
                raise CorpusError(f"duplicate composer id {comp.id!r}")
            self.composers[comp.id] = comp

        self.works: dict[str, Work] = {}
        for work in sorted(works, key=lambda w: w.id):
            if work.id in self.works:
                raise CorpusError(f"duplicate work id {work.id!r}")
            if work.composer_id not in self.composers:
                raise CorpusError(
                    f"work {work.id}: unknown composer id {work.composer_id!r}")
            self.works[work.id] = work

        observed = {cw for w in self.works.values() for cw in w.sequence}
        if vocabulary is None:
            vocab = sorted(observed)
        else:
            vocab = sorted({make_codeword(cw) for cw in vocabulary})
            missing = observed.difference(vocab)
            if missing:
                raise CorpusError(
                    f"explicit vocabulary misses {len(missing)} observed codewords, "
                    f"e.g. {format_codeword(sorted(missing)[0])}")
        self.vocabulary: tuple[Codeword, ...] = tuple(vocab)
        self._vocab_index: dict[Codeword, int] = {cw: i for i, cw in enumerate(vocab)}
        self._vectors: dict[str, _WorkVectors] = {
            w.id: self._build_vectors(w) for w in self.works.values()}

    @property
    def vocab_size(self) -> int:
        return len(self.vocabulary)

    def _build_vectors(self, work: Work) -> _WorkVectors:
        index = self._vocab_index
        ids = np.fromiter((index[cw] for cw in work.sequence),
                          dtype=np.int64, count=len(work.sequence))
        pairs = ids[:-1] * len(self.vocabulary) + ids[1:]
        ukeys, umults = np.unique(pairs, return_counts=True)
        urow_ids, urow_counts = np.unique(ids[:-1], return_counts=True)
        return _WorkVectors(m=len(ids), first_id=int(ids[0]), ids=ids, pairs=pairs,
                            ukeys=ukeys, umults=umults,
                            urow_ids=urow_ids, urow_counts=urow_counts)

    def work(self, work_id: str) -> Work:
        try:
            return self.works[work_id]
        except KeyError:
            raise CorpusError(f"unknown work id {work_id!r}") from None

    def composer(self, composer_id: str) -> Composer:
        try:
            return self.composers[composer_id]
        except KeyError:
            raise CorpusError(f"unknown composer id {composer_id!r}") from None

    def works_sorted(self) -> list[Work]:
        """Works in (year, work_id) order, the corpus's canonical time order."""
        return sorted(self.works.values(), key=lambda w: (w.year, w.id))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return (self.composers == other.composers
                and self.works == other.works
                and self.vocabulary == other.vocabulary)

    def __repr__(self) -> str:
        return (f"Corpus({len(self.composers)} composers, {len(self.works)} works, "
                f"{len(self.vocabulary)} codewords)")


def works_before(corpus: Corpus, work: Work | str,
                 mode: Literal["history", "self"]) -> list[Work]:
    """Works strictly earlier in time than ``work``.

    ``history`` returns every work with a strictly smaller year; ``self``
    restricts that to the same composer. Works dated to the same year are
    excluded either way, so the result never contains the query work.
    """
    if isinstance(work, str):
        work = corpus.work(work)
    elif work.id not in corpus.works:
        raise CorpusError(f"unknown work id {work.id!r}")
    if mode not in ("history", "self"):
        raise ValueError(f"mode must be 'history' or 'self', got {mode!r}")
    earlier = [w for w in corpus.works_sorted() if w.year < work.year]
    if mode == "self":
        earlier = [w for w in earlier if w.composer_id == work.composer_id]
    return earlier


def _read_csv(path: Path, required: tuple[str, ...]) -> list[dict[str, str]]:
    if not path.is_file():
        raise CorpusError(f"missing file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in required:
            if col not in header:
                raise CorpusError(f"{path}: missing column {col!r}")
        return list(reader)


def _parse_year(raw: str, context: str) -> int:
    raw = raw.strip()
    try:
        return int(raw)
    except ValueError:
        raise CorpusError(f"{context}: undated or malformed year {raw!r}") from None


def _read_sequence(path: Path, work_id: str) -> CodewordSequence:
    if not path.is_file():
        raise CorpusError(f"work {work_id}: missing sequence file {path}")
    codewords = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            try:
                codewords.append(parse_codeword(stripped))
            except CodewordError as exc:
                raise CorpusError(
                    f"work {work_id}: {path}:{lineno}: {exc}") from None
    if not codewords:
        raise CorpusError(f"work {work_id}: empty sequence in {path}")
    return tuple(codewords)


def load_corpus(corpus_dir: str | Path,
                vocabulary: Iterable[Codeword] | None = None) -> Corpus:
    """Load and validate a corpus directory (see module docstring for layout)."""
    root = Path(corpus_dir)
    composer_rows = _read_csv(root / COMPOSERS_CSV,
                              ("composer_id", "name", "birth_year", "death_year", "period"))
    composers = []
    for row in composer_rows:
        cid = row["composer_id"].strip()
        try:
            period = Period(row["period"].strip())
        except ValueError:
            raise CorpusError(
                f"composer {cid}: unknown period {row['period']!r}") from None
        composers.append(Composer(
            id=cid,
            name=row["name"],
            birth_year=_parse_year(row["birth_year"], f"composer {cid}"),
            death_year=_parse_year(row["death_year"], f"composer {cid}"),
            period=period,
        ))

    work_rows = _read_csv(root / WORKS_CSV,
                          ("work_id", "composer_id", "year", "title", "sequence_file"))
    works = []
    for row in work_rows:
        wid = row["work_id"].strip()
        sequence = _read_sequence(root / row["sequence_file"], wid)
        works.append(Work(
            id=wid,
            composer_id=row["composer_id"].strip(),
            year=_parse_year(row["year"], f"work {wid}"),
            title=row["title"],
            sequence=sequence,
        ))
    return Corpus(composers, works, vocabulary=vocabulary)


def save_corpus(corpus: Corpus, corpus_dir: str | Path) -> None:
    """Write the corpus directory layout; output is byte-deterministic."""
    root = Path(corpus_dir)
    (root / SEQUENCE_DIR).mkdir(parents=True, exist_ok=True)

    with open(root / COMPOSERS_CSV, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["composer_id", "name", "birth_year", "death_year", "period"])
        for comp in sorted(corpus.composers.values(), key=lambda c: c.id):
            writer.writerow([comp.id, comp.name, comp.birth_year,
                             comp.death_year, comp.period.value])

    with open(root / WORKS_CSV, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["work_id", "composer_id", "year", "title", "sequence_file"])
        for work in sorted(corpus.works.values(), key=lambda w: w.id):
            rel = f"{SEQUENCE_DIR}/{work.id}.txt"
            writer.writerow([work.id, work.composer_id, work.year, work.title, rel])

    for work in corpus.works.values():
        lines = "\n".join(format_codeword(cw) for cw in work.sequence)
        path = root / SEQUENCE_DIR / f"{work.id}.txt"
        path.write_text(lines + "\n", encoding="utf-8")
