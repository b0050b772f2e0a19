"""Chord-transition novelty and influence analysis for MIDI corpora."""

from .codeword import Codeword, CodewordError, CodewordSequence, make_codeword
from .corpus import (
    Composer,
    Corpus,
    CorpusError,
    Period,
    Work,
    load_corpus,
    save_corpus,
    works_before,
)
from .estimator import (
    CountTable,
    EstimatorError,
    build_pool,
    generation_logprob,
    initial_prob,
    novelty,
    transition_prob,
)
from .metrics import (
    ComposerNovelty,
    CurvePoint,
    InfluenceCurve,
    InfluenceScore,
    MetricsError,
    WorkNovelty,
    all_pair_influences,
    composer_novelty,
    h_novelty,
    influence,
    influence_between,
    influence_curve,
    influence_curves_from_pairs,
    p_novelty,
    work_novelties,
)
from .smf import (
    ChordifyError,
    ChordifyOptions,
    NoteEvent,
    ParsedMidi,
    SmfParseError,
    chordify,
    chordify_midi,
    parse_smf,
)
from .stats import (
    PowerLawFit,
    RankCorrelation,
    StatsError,
    codeword_occurrence_counts,
    fit_power_law,
    spearman,
    transition_occurrence_counts,
    unique_transition_growth,
)

__version__ = "0.1.0"
