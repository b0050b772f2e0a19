"""Count tables and smoothed first-order Markov scoring.

A :class:`CountTable` holds transition counts z(a -> b), first-codeword
counts z(c), and cached row totals for a pool of reference sequences. The
selection probability of a transition is the additive-smoothed estimate

    p(a -> b) = (z(a -> b) + alpha0) / (row_total(a) + alpha0 * V)

over a vocabulary of V codewords, with the uniform prior weight alpha0
standing in for unseen or invented material; the first codeword uses the
analogous estimate over initial counts. A sequence's generation
log-probability is the sum of the log10 factors, and its novelty is the
negated log-probability divided by the sequence length: the average
surprisal per codeword, in log10 units.

All probability arithmetic happens in log space; sequences run to tens of
thousands of codewords and raw products would underflow. Tables are sparse
dicts keyed by interned codeword ids, with row totals cached at build time.
"""

from __future__ import annotations

import math
from typing import Iterable, Iterator

import numpy as np

from .codeword import Codeword, CodewordSequence

# Transition keys pack two codeword ids into one int: from_id * V + to_id.
# int64 packing needs V * V to fit; vocabularies beyond this are unrealistic.
_MAX_VOCAB = 3_000_000_000


class EstimatorError(ValueError):
    """Raised for invalid table parameters or out-of-vocabulary builds."""


class CountTable:
    """Sparse transition/initial counts over a fixed-size vocabulary.

    Build with :func:`build_pool` or the ``add_*`` methods, then treat as
    read-only; evaluation functions never mutate the table and are safe to
    call concurrently.
    """

    __slots__ = ("vocab_size", "alpha0", "initial_total", "total_transitions",
                 "_intern", "_codewords", "_shared_intern",
                 "_transitions", "_row_totals", "_initials")

    def __init__(self, vocab_size: int, alpha0: float = 1.0) -> None:
        if vocab_size < 1:
            raise EstimatorError("vocab_size must be at least 1")
        if vocab_size > _MAX_VOCAB:
            raise EstimatorError(f"vocab_size above packing limit {_MAX_VOCAB}")
        if not alpha0 > 0:
            raise EstimatorError("alpha0 must be positive")
        self.vocab_size = int(vocab_size)
        self.alpha0 = float(alpha0)
        self.initial_total = 0
        self.total_transitions = 0
        self._intern: dict[Codeword, int] = {}
        self._codewords: list[Codeword] = []
        self._shared_intern = False
        self._transitions: dict[int, int] = {}
        self._row_totals: dict[int, int] = {}
        self._initials: dict[int, int] = {}

    @classmethod
    def for_vocabulary(cls, index: dict[Codeword, int],
                       codewords: Iterable[Codeword],
                       alpha0: float = 1.0) -> "CountTable":
        """Table over a pre-interned vocabulary (ids shared with the caller)."""
        table = cls(len(index), alpha0)
        table._intern = index
        table._codewords = list(codewords)
        table._shared_intern = True
        return table

    def _id(self, cw: Codeword, create: bool) -> int | None:
        i = self._intern.get(cw)
        if i is None and create:
            if self._shared_intern:
                raise EstimatorError(f"codeword {cw} outside the fixed vocabulary")
            if len(self._intern) >= self.vocab_size:
                raise EstimatorError(
                    "vocab_size smaller than the observed vocabulary")
            i = len(self._intern)
            self._intern[cw] = i
            self._codewords.append(cw)
        return i

    def add_sequence(self, seq: CodewordSequence) -> None:
        """Count one reference sequence: its opening codeword and transitions."""
        if not seq:
            raise EstimatorError("cannot add an empty sequence")
        ids = [self._id(cw, create=True) for cw in seq]
        self._initials[ids[0]] = self._initials.get(ids[0], 0) + 1
        self.initial_total += 1
        trans = self._transitions
        rows = self._row_totals
        base = self.vocab_size
        for i, j in zip(ids, ids[1:]):
            key = i * base + j
            trans[key] = trans.get(key, 0) + 1
            rows[i] = rows.get(i, 0) + 1
        self.total_transitions += len(ids) - 1

    def add_transition(self, frm: Codeword, to: Codeword, n: int = 1, *,
                       update_row_total: bool = True) -> None:
        """Add n copies of one transition directly.

        With ``update_row_total=False`` only the numerator count changes and
        the row's smoothing denominator stays put; that intentionally breaks
        the row-sum invariant and exists for count-sensitivity experiments.
        """
        i = self._id(frm, create=True)
        j = self._id(to, create=True)
        key = i * self.vocab_size + j
        self._transitions[key] = self._transitions.get(key, 0) + n
        if update_row_total:
            self._row_totals[i] = self._row_totals.get(i, 0) + n
        self.total_transitions += n

    def add_initial(self, cw: Codeword, n: int = 1) -> None:
        """Add n copies of one opening-codeword observation directly."""
        i = self._id(cw, create=True)
        self._initials[i] = self._initials.get(i, 0) + n
        self.initial_total += n

    def _add_vectors(self, vec) -> None:
        """Fast path: count one pre-interned work (corpus-backed tables only)."""
        self._initials[vec.first_id] = self._initials.get(vec.first_id, 0) + 1
        self.initial_total += 1
        trans = self._transitions
        for k, c in zip(vec.ukeys.tolist(), vec.umults.tolist()):
            trans[k] = trans.get(k, 0) + c
        rows = self._row_totals
        for i, c in zip(vec.urow_ids.tolist(), vec.urow_counts.tolist()):
            rows[i] = rows.get(i, 0) + c
        self.total_transitions += vec.m - 1

    def copy(self) -> "CountTable":
        """Independent copy; count edits on it never touch the original."""
        table = CountTable(self.vocab_size, self.alpha0)
        if self._shared_intern:
            table._intern = self._intern
            table._codewords = self._codewords
            table._shared_intern = True
        else:
            table._intern = dict(self._intern)
            table._codewords = list(self._codewords)
        table._transitions = dict(self._transitions)
        table._row_totals = dict(self._row_totals)
        table._initials = dict(self._initials)
        table.initial_total = self.initial_total
        table.total_transitions = self.total_transitions
        return table

    def transition_count(self, frm: Codeword, to: Codeword) -> int:
        i = self._id(frm, create=False)
        j = self._id(to, create=False)
        if i is None or j is None:
            return 0
        return self._transitions.get(i * self.vocab_size + j, 0)

    def initial_count(self, cw: Codeword) -> int:
        i = self._id(cw, create=False)
        return 0 if i is None else self._initials.get(i, 0)

    def row_total(self, cw: Codeword) -> int:
        i = self._id(cw, create=False)
        return 0 if i is None else self._row_totals.get(i, 0)

    def transition_items(self) -> Iterator[tuple[tuple[Codeword, Codeword], int]]:
        """All nonzero transition counts, keyed by codeword pair."""
        base = self.vocab_size
        for key, count in self._transitions.items():
            yield (self._codewords[key // base], self._codewords[key % base]), count

    def __repr__(self) -> str:
        return (f"CountTable(V={self.vocab_size}, alpha0={self.alpha0}, "
                f"{len(self._transitions)} transitions, "
                f"{self.initial_total} initials)")


def build_pool(sequences: Iterable[CodewordSequence], vocab_size: int,
               alpha0: float = 1.0) -> CountTable:
    """Count all transitions and opening codewords of the given sequences.

    vocab_size must cover every distinct codeword that appears; it fixes
    the prior mass alpha0 * vocab_size spread over unseen transitions.
    """
    pool = CountTable(vocab_size, alpha0)
    for seq in sequences:
        pool.add_sequence(seq)
    return pool


def transition_prob(pool: CountTable, frm: Codeword, to: Codeword) -> float:
    """Smoothed probability of ``frm -> to``; strictly in (0, 1]."""
    z = pool.transition_count(frm, to)
    return (z + pool.alpha0) / (pool.row_total(frm) + pool.alpha0 * pool.vocab_size)


def initial_prob(pool: CountTable, first: Codeword) -> float:
    """Smoothed probability of a sequence opening with ``first``."""
    z = pool.initial_count(first)
    return (z + pool.alpha0) / (pool.initial_total + pool.alpha0 * pool.vocab_size)


def _logprob_from_counts(pool: CountTable, z_initial: int,
                         z: np.ndarray, rows: np.ndarray) -> float:
    a = pool.alpha0
    prior_mass = a * pool.vocab_size
    lp = math.log10((z_initial + a) / (pool.initial_total + prior_mass))
    if z.size:
        lp += float(np.sum(np.log10((z + a) / (rows + prior_mass))))
    return lp


def generation_logprob(pool: CountTable, seq: CodewordSequence) -> float:
    """log10 probability of generating ``seq`` from the pool, factor by factor."""
    if not seq:
        raise EstimatorError("sequence must contain at least one codeword")
    ids = [pool._id(cw, create=False) for cw in seq]
    m = len(ids)
    zi = 0 if ids[0] is None else pool._initials.get(ids[0], 0)
    z = np.empty(m - 1, dtype=np.float64)
    rows = np.empty(m - 1, dtype=np.float64)
    trans = pool._transitions
    row_totals = pool._row_totals
    base = pool.vocab_size
    for k in range(m - 1):
        i, j = ids[k], ids[k + 1]
        if i is None:
            z[k] = 0.0
            rows[k] = 0.0
        else:
            z[k] = trans.get(i * base + j, 0) if j is not None else 0
            rows[k] = row_totals.get(i, 0)
    return _logprob_from_counts(pool, zi, z, rows)


def _logprob_vectors(pool: CountTable, vec) -> float:
    """Fast path over pre-interned vectors; ids must share the pool's intern."""
    trans = pool._transitions
    row_totals = pool._row_totals
    n = vec.m - 1
    z = np.fromiter((trans.get(k, 0) for k in vec.pairs.tolist()),
                    dtype=np.float64, count=n)
    rows = np.fromiter((row_totals.get(i, 0) for i in vec.ids[:-1].tolist()),
                       dtype=np.float64, count=n)
    zi = pool._initials.get(vec.first_id, 0)
    return _logprob_from_counts(pool, zi, z, rows)


def novelty(pool: CountTable, seq: CodewordSequence) -> float:
    """Average surprisal per codeword of ``seq`` against the pool.

    Nonnegative, in log10 units per element. Against an empty pool every
    factor is uniform, giving exactly log10(vocab_size).
    """
    return -generation_logprob(pool, seq) / len(seq)
