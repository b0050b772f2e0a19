"""Work and composer novelty, pairwise influence, and influence time curves.

H-novelty scores a work against every work strictly earlier in history;
P-novelty scores it against the composer's own strictly earlier works.
Influence of a source composer on a later work is the length-normalized
log10 ratio between the work's full generation probability and the one
recomputed with the source's counts removed from every numerator (the
denominators keep the full counts), i.e. the share of the generation
probability the source accounts for. It is nonnegative, and exactly zero
when the source contributed no counts to any factor.
"""

from __future__ import annotations

import logging
import math
import multiprocessing
from dataclasses import dataclass

from .corpus import Composer, Corpus, CorpusError, Work, works_before
from .codeword import CodewordSequence
from .estimator import CountTable, _logprob_vectors

log = logging.getLogger(__name__)


class MetricsError(ValueError):
    """Raised for invalid metric queries (self-influence, unknown ids)."""


@dataclass(frozen=True)
class WorkNovelty:
    work_id: str
    nu_h: float
    nu_p: float
    history_works: int
    self_works: int


@dataclass(frozen=True)
class ComposerNovelty:
    composer_id: str
    n_h: float
    n_p: float
    n_works: int


@dataclass(frozen=True)
class InfluenceScore:
    source_composer_id: str
    target_work_id: str
    eta: float


@dataclass(frozen=True)
class CurvePoint:
    year: int
    mean_eta: float
    n_target_works: int


@dataclass(frozen=True)
class InfluenceCurve:
    composer_id: str
    points: tuple[CurvePoint, ...]


def _empty_pool(corpus: Corpus, alpha0: float) -> CountTable:
    if corpus.vocab_size < 1:
        raise MetricsError("corpus has an empty vocabulary; nothing to score")
    return CountTable.for_vocabulary(corpus._vocab_index, corpus.vocabulary, alpha0)


def _pool_from_works(corpus: Corpus, works: list[Work], alpha0: float) -> CountTable:
    pool = _empty_pool(corpus, alpha0)
    for work in works:
        pool._add_vectors(corpus._vectors[work.id])
    return pool


def _resolve_work(corpus: Corpus, work: Work | str) -> Work:
    return corpus.work(work if isinstance(work, str) else work.id)


def _resolve_composer_id(corpus: Corpus, composer: Composer | str) -> str:
    cid = composer.id if isinstance(composer, Composer) else composer
    corpus.composer(cid)
    return cid


def h_novelty(corpus: Corpus, work: Work | str, alpha0: float = 1.0) -> float:
    """Novelty of a work against all works strictly earlier in history."""
    work = _resolve_work(corpus, work)
    pool = _pool_from_works(corpus, works_before(corpus, work, "history"), alpha0)
    vec = corpus._vectors[work.id]
    return -_logprob_vectors(pool, vec) / vec.m


def p_novelty(corpus: Corpus, work: Work | str, alpha0: float = 1.0) -> float:
    """Novelty of a work against the composer's own strictly earlier works."""
    work = _resolve_work(corpus, work)
    pool = _pool_from_works(corpus, works_before(corpus, work, "self"), alpha0)
    vec = corpus._vectors[work.id]
    return -_logprob_vectors(pool, vec) / vec.m


def _year_groups(corpus: Corpus) -> list[list[Work]]:
    groups: list[list[Work]] = []
    for work in corpus.works_sorted():
        if groups and groups[-1][0].year == work.year:
            groups[-1].append(work)
        else:
            groups.append([work])
    return groups


def work_novelties(corpus: Corpus, alpha0: float = 1.0) -> list[WorkNovelty]:
    """H- and P-novelty for every work, in (year, work_id) order.

    One incremental sweep over the year groups: each group is scored
    against the pools of strictly earlier years, then folded in. Results
    equal per-work :func:`h_novelty` / :func:`p_novelty` calls.
    """
    history = _empty_pool(corpus, alpha0)
    blank = _empty_pool(corpus, alpha0)
    self_pools: dict[str, CountTable] = {}
    self_sizes: dict[str, int] = {}
    history_size = 0
    out: list[WorkNovelty] = []
    for group in _year_groups(corpus):
        for work in group:
            vec = corpus._vectors[work.id]
            own = self_pools.get(work.composer_id, blank)
            out.append(WorkNovelty(
                work_id=work.id,
                nu_h=-_logprob_vectors(history, vec) / vec.m,
                nu_p=-_logprob_vectors(own, vec) / vec.m,
                history_works=history_size,
                self_works=self_sizes.get(work.composer_id, 0),
            ))
        for work in group:
            vec = corpus._vectors[work.id]
            history._add_vectors(vec)
            history_size += 1
            pool = self_pools.get(work.composer_id)
            if pool is None:
                pool = self_pools[work.composer_id] = _empty_pool(corpus, alpha0)
            pool._add_vectors(vec)
            self_sizes[work.composer_id] = self_sizes.get(work.composer_id, 0) + 1
    return out


def composer_novelty(corpus: Corpus, alpha0: float = 1.0) -> list[ComposerNovelty]:
    """Arithmetic means of each composer's work novelties, by composer id.

    Composers with no works in the corpus are skipped with a warning.
    """
    per_work = {wn.work_id: wn for wn in work_novelties(corpus, alpha0)}
    out = []
    for cid in sorted(corpus.composers):
        scores = [per_work[w.id] for w in corpus.works_sorted() if w.composer_id == cid]
        if not scores:
            log.warning("composer %s has no works; excluded from composer novelty", cid)
            continue
        n = len(scores)
        out.append(ComposerNovelty(
            composer_id=cid,
            n_h=sum(s.nu_h for s in scores) / n,
            n_p=sum(s.nu_p for s in scores) / n,
            n_works=n,
        ))
    return out


def _influence_terms(full: CountTable, source: CountTable, first_id: int,
                     keys: list[int], mults: list[int], m: int) -> float:
    """Length-normalized log10 ratio of full to source-removed numerators.

    Factors the source never contributed to are skipped outright, so a
    source sharing nothing with the work's history scores exactly 0.0.
    """
    alpha0 = full.alpha0
    total = 0.0
    z_src = source._initials.get(first_id, 0)
    if z_src:
        z = full._initials.get(first_id, 0)
        total += math.log10(z + alpha0) - math.log10(z - z_src + alpha0)
    full_trans = full._transitions
    src_trans = source._transitions
    for key, mult in zip(keys, mults):
        z_src = src_trans.get(key, 0)
        if z_src:
            z = full_trans[key]
            total += mult * (math.log10(z + alpha0) - math.log10(z - z_src + alpha0))
    return total / m


def _influence_vec(full: CountTable, source: CountTable, vec) -> float:
    return _influence_terms(full, source, vec.first_id,
                            vec.ukeys.tolist(), vec.umults.tolist(), vec.m)


def influence_between(full_pool: CountTable, source_pool: CountTable,
                      seq: CodewordSequence) -> float:
    """Influence of an arbitrary source pool on one sequence.

    ``source_pool`` must be a sub-bag of ``full_pool`` (built from a subset
    of the works behind it); it may hold a single work's counts, so this is
    also the work-on-work influence form.
    """
    if not seq:
        raise MetricsError("sequence must contain at least one codeword")
    alpha0 = full_pool.alpha0
    total = 0.0
    z_src = source_pool.initial_count(seq[0])
    if z_src:
        z = full_pool.initial_count(seq[0])
        if z_src > z:
            raise MetricsError("source pool counts exceed the full pool's")
        total += math.log10(z + alpha0) - math.log10(z - z_src + alpha0)
    for frm, to in zip(seq, seq[1:]):
        z_src = source_pool.transition_count(frm, to)
        if z_src:
            z = full_pool.transition_count(frm, to)
            if z_src > z:
                raise MetricsError("source pool counts exceed the full pool's")
            total += math.log10(z + alpha0) - math.log10(z - z_src + alpha0)
    return total / len(seq)


def influence(corpus: Corpus, source: Composer | str, target: Work | str,
              alpha0: float = 1.0) -> InfluenceScore:
    """Influence of one composer's earlier works on one later work."""
    source_id = _resolve_composer_id(corpus, source)
    target = _resolve_work(corpus, target)
    if source_id == target.composer_id:
        raise MetricsError(
            f"self-influence excluded: {source_id} composed {target.id}")
    history = works_before(corpus, target, "history")
    full = _pool_from_works(corpus, history, alpha0)
    source_pool = _pool_from_works(
        corpus, [w for w in history if w.composer_id == source_id], alpha0)
    eta = _influence_vec(full, source_pool, corpus._vectors[target.id])
    return InfluenceScore(source_id, target.id, eta)


def _pair_rows(corpus: Corpus, groups: list[list[Work]], start: int, end: int,
               alpha0: float, sources: frozenset[str] | None,
               require_earlier_work: bool) -> list[tuple[str, str, float]]:
    """Influence rows for targets in year groups [start, end).

    Builds the cumulative pools from the earlier groups first, so any
    contiguous split over groups yields identical rows.
    """
    full = _empty_pool(corpus, alpha0)
    per_composer: dict[str, CountTable] = {}
    for group in groups[:start]:
        for work in group:
            vec = corpus._vectors[work.id]
            full._add_vectors(vec)
            pool = per_composer.get(work.composer_id)
            if pool is None:
                pool = per_composer[work.composer_id] = _empty_pool(corpus, alpha0)
            pool._add_vectors(vec)

    rows: list[tuple[str, str, float]] = []
    for group in groups[start:end]:
        for work in group:
            vec = corpus._vectors[work.id]
            keys = vec.ukeys.tolist()
            mults = vec.umults.tolist()
            candidates = per_composer if require_earlier_work else corpus.composers
            for cid in candidates:
                if cid == work.composer_id or (sources is not None and cid not in sources):
                    continue
                pool = per_composer.get(cid)
                eta = 0.0 if pool is None else _influence_terms(
                    full, pool, vec.first_id, keys, mults, vec.m)
                rows.append((cid, work.id, eta))
        for work in group:
            vec = corpus._vectors[work.id]
            full._add_vectors(vec)
            pool = per_composer.get(work.composer_id)
            if pool is None:
                pool = per_composer[work.composer_id] = _empty_pool(corpus, alpha0)
            pool._add_vectors(vec)
    return rows


_PARALLEL_STATE: tuple | None = None


def _pair_worker(span: tuple[int, int]) -> list[tuple[str, str, float]]:
    corpus, groups, alpha0, sources, require_earlier = _PARALLEL_STATE
    return _pair_rows(corpus, groups, span[0], span[1], alpha0, sources, require_earlier)


def _split_spans(groups: list[list[Work]], workers: int) -> list[tuple[int, int]]:
    """Contiguous group spans with roughly equal evaluation mass.

    A target's cost scales with its length times the number of composers
    that already have earlier works (the eligible sources).
    """
    costs = []
    seen: set[str] = set()
    for group in groups:
        costs.append(sum(w.length for w in group) * max(1, len(seen)))
        seen.update(w.composer_id for w in group)
    total = sum(costs)
    spans = []
    start = 0
    acc = 0
    for i, cost in enumerate(costs):
        acc += cost
        if acc >= total / workers and len(spans) < workers - 1:
            spans.append((start, i + 1))
            start = i + 1
            acc = 0
    spans.append((start, len(groups)))
    return [s for s in spans if s[0] < s[1]]


def all_pair_influences(corpus: Corpus, alpha0: float = 1.0,
                        workers: int | None = None,
                        sources: list[str] | None = None,
                        require_earlier_work: bool = True) -> list[InfluenceScore]:
    """Influence of every composer on every later work by someone else.

    By default a pair is emitted only when the source composer has at least
    one work strictly earlier than the target (otherwise its influence is
    identically zero); pass ``require_earlier_work=False`` to emit those
    zero rows too. Results are sorted by (source composer, target work) and
    do not depend on ``workers``.
    """
    source_set = None
    if sources is not None:
        source_set = frozenset(_resolve_composer_id(corpus, s) for s in sources)
    groups = _year_groups(corpus)
    workers = workers or 1
    if (workers > 1 and len(groups) > 1
            and "fork" in multiprocessing.get_all_start_methods()):
        global _PARALLEL_STATE
        spans = _split_spans(groups, workers)
        _PARALLEL_STATE = (corpus, groups, alpha0, source_set, require_earlier_work)
        try:
            with multiprocessing.get_context("fork").Pool(len(spans)) as pool:
                parts = pool.map(_pair_worker, spans)
        finally:
            _PARALLEL_STATE = None
        rows = [row for part in parts for row in part]
    else:
        rows = _pair_rows(corpus, groups, 0, len(groups), alpha0,
                          source_set, require_earlier_work)
    rows.sort()
    return [InfluenceScore(*row) for row in rows]


def _curve_from_pairs(corpus: Corpus, composer_id: str,
                      pairs: list[InfluenceScore], window_years: int,
                      step_years: int) -> InfluenceCurve:
    spine = [(corpus.works[p.target_work_id].year, p.eta)
             for p in pairs if p.source_composer_id == composer_id]
    points = []
    if corpus.works:
        # The grid covers the work years padded by one window on each side,
        # so every year whose window can hold a target gets a chance.
        years = [w.year for w in corpus.works.values()]
        for t in range(min(years) - window_years,
                       max(years) + window_years + 1, step_years):
            etas = [eta for year, eta in spine if abs(year - t) <= window_years]
            if etas:
                points.append(CurvePoint(t, sum(etas) / len(etas), len(etas)))
    return InfluenceCurve(composer_id, tuple(points))


def influence_curves_from_pairs(corpus: Corpus, pairs: list[InfluenceScore],
                                window_years: int = 10,
                                step_years: int = 1) -> list[InfluenceCurve]:
    """Windowed mean-influence curves for every source present in ``pairs``.

    Reuses already-computed pair influences, so a full ``analyze`` run
    evaluates each pair once.
    """
    if window_years < 0 or step_years < 1:
        raise MetricsError("window_years must be >= 0 and step_years >= 1")
    composer_ids = sorted({p.source_composer_id for p in pairs})
    return [_curve_from_pairs(corpus, cid, pairs, window_years, step_years)
            for cid in composer_ids]


def influence_curve(corpus: Corpus, composer: Composer | str,
                    window_years: int = 10, step_years: int = 1,
                    alpha0: float = 1.0) -> InfluenceCurve:
    """Mean influence of a composer on works within a sliding year window.

    Samples run over a step grid spanning the corpus's work years; a grid
    year is emitted only when at least one eligible target work falls
    within ``window_years`` of it (inclusive bounds).
    """
    if window_years < 0 or step_years < 1:
        raise MetricsError("window_years must be >= 0 and step_years >= 1")
    composer_id = _resolve_composer_id(corpus, composer)
    pairs = all_pair_influences(corpus, alpha0=alpha0, sources=[composer_id])
    return _curve_from_pairs(corpus, composer_id, pairs, window_years, step_years)
