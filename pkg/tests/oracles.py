"""Independent brute-force oracles for the probability and influence math.

Everything here recounts from raw sequences with plain loops and multiplies
raw probabilities (no log-space tricks, no caching, no interning), so it
stays independent of the library's code paths. Only usable on small inputs.
"""

from __future__ import annotations

import math

import numpy as np


def count_transition(seqs, frm, to) -> int:
    return sum(1 for seq in seqs for a, b in zip(seq, seq[1:]) if (a, b) == (frm, to))


def count_row(seqs, frm) -> int:
    return sum(1 for seq in seqs for a in seq[:-1] if a == frm)


def count_initial(seqs, first) -> int:
    return sum(1 for seq in seqs if seq[0] == first)


def naive_transition_prob(seqs, frm, to, vocab_size, alpha0=1.0) -> float:
    z = count_transition(seqs, frm, to)
    row = count_row(seqs, frm)
    return (z + alpha0) / (row + alpha0 * vocab_size)


def naive_initial_prob(seqs, first, vocab_size, alpha0=1.0) -> float:
    z = count_initial(seqs, first)
    return (z + alpha0) / (len(seqs) + alpha0 * vocab_size)


def naive_generation_prob(seqs, seq, vocab_size, alpha0=1.0) -> float:
    p = naive_initial_prob(seqs, seq[0], vocab_size, alpha0)
    for a, b in zip(seq, seq[1:]):
        p *= naive_transition_prob(seqs, a, b, vocab_size, alpha0)
    return p


def naive_novelty(seqs, seq, vocab_size, alpha0=1.0) -> float:
    return -math.log10(naive_generation_prob(seqs, seq, vocab_size, alpha0)) / len(seq)


def naive_influence(earlier_works, source_id, seq, vocab_size, alpha0=1.0) -> float:
    """Influence of one composer on ``seq``.

    ``earlier_works`` is a list of (composer_id, sequence) pairs for every
    work strictly earlier than the target. The reduced probability drops
    the source's counts from each numerator while every denominator keeps
    the full counts.
    """
    all_seqs = [s for _, s in earlier_works]
    other_seqs = [s for cid, s in earlier_works if cid != source_id]
    m = len(seq)

    denom = len(all_seqs) + alpha0 * vocab_size
    p_full = (count_initial(all_seqs, seq[0]) + alpha0) / denom
    p_reduced = (count_initial(other_seqs, seq[0]) + alpha0) / denom
    for a, b in zip(seq, seq[1:]):
        denom = count_row(all_seqs, a) + alpha0 * vocab_size
        p_full *= (count_transition(all_seqs, a, b) + alpha0) / denom
        p_reduced *= (count_transition(other_seqs, a, b) + alpha0) / denom
    return math.log10(p_full / p_reduced) / m


def sample_discrete_power_law(alpha: float, n: int, rng: np.random.Generator,
                              xmin: int = 1, support_max: int = 10 ** 6) -> np.ndarray:
    """Inverse-CDF sampler over a truncated integer support.

    Independent of the fitting code: builds the pmf table explicitly and
    inverts uniform draws against the cumulative sums. The truncation
    residual beyond support_max is far below one draw in 10^12 for the
    exponents used here.
    """
    xs = np.arange(xmin, support_max + 1, dtype=np.float64)
    pmf = xs ** (-alpha)
    pmf /= pmf.sum()
    cdf = np.cumsum(pmf)
    draws = rng.random(n)
    return (np.searchsorted(cdf, draws, side="left") + xmin).astype(np.int64)
