"""Shared fixtures: hand-built corpora and a seeded random-corpus generator."""

from __future__ import annotations

import random

import pytest

from chordflow.corpus import Composer, Corpus, Period, Work


def cw(*pitches: int) -> tuple[int, ...]:
    return tuple(sorted(pitches))


A = cw(60)
B = cw(64)
C = cw(67)
AB = cw(60, 64)


def make_composer(cid: str, birth: int = 1700, death: int = 1760,
                  period: Period = Period.BAROQUE) -> Composer:
    return Composer(id=cid, name=cid.title(), birth_year=birth, death_year=death,
                    period=period)


def make_work(wid: str, composer: str, year: int, seq) -> Work:
    return Work(id=wid, composer_id=composer, year=year, title=f"Piece {wid}",
                sequence=tuple(seq))


@pytest.fixture
def tiny_corpus() -> Corpus:
    """Three dated works by two composers, with shared and private codewords."""
    composers = [make_composer("alba", 1680, 1750),
                 make_composer("bruno", 1700, 1770, Period.CLASSICAL)]
    works = [
        make_work("w1", "alba", 1700, (A, B, A, B)),
        make_work("w2", "bruno", 1750, (A, B, AB)),
        make_work("w3", "alba", 1800, (AB, A, C)),
    ]
    return Corpus(composers, works)


def random_corpus(rng: random.Random, max_composers: int = 3, max_works: int = 5,
                  max_vocab: int = 20, max_len: int = 30,
                  year_span: tuple[int, int] = (1700, 1705)) -> Corpus:
    """Small random corpus with ties in years and an explicit vocabulary.

    The vocabulary is the full set of single-pitch codewords 0..V-1, fixed
    explicitly so oracle computations can use V without re-deriving it.
    """
    vocab_size = rng.randint(2, max_vocab)
    vocabulary = [(p,) for p in range(vocab_size)]
    n_composers = rng.randint(1, max_composers)
    composers = [make_composer(f"c{i}", 1650 + i * 10, 1720 + i * 10)
                 for i in range(n_composers)]
    n_works = rng.randint(1, max_works)
    works = []
    for i in range(n_works):
        length = rng.randint(1, max_len)
        seq = tuple(vocabulary[rng.randrange(vocab_size)] for _ in range(length))
        works.append(make_work(f"w{i}", f"c{rng.randrange(n_composers)}",
                               rng.randint(*year_span), seq))
    return Corpus(composers, works, vocabulary=vocabulary)


def corpus_with_sequences(seqs_by_work: dict[str, tuple], years: dict[str, int],
                          composers_of: dict[str, str]) -> Corpus:
    """Explicit-corpus helper for hand-built examples."""
    composer_ids = sorted(set(composers_of.values()))
    composers = [make_composer(cid) for cid in composer_ids]
    works = [make_work(wid, composers_of[wid], years[wid], seq)
             for wid, seq in seqs_by_work.items()]
    return Corpus(composers, works)
