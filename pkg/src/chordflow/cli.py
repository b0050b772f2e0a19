"""Command-line pipeline: MIDI ingestion, analysis, and report export.

Subcommands:

    ingest     parse MIDI files and write a corpus directory
    analyze    run the full novelty / influence / stats pipeline
    novelty    per-work H- and P-novelty table
    influence  pairwise influences or windowed influence curves
    stats      distribution, power-law fit, growth, and correlations

Exit codes: 0 success, 1 input error, 2 internal invariant violation.
"""

from __future__ import annotations

import argparse
import bisect
import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NoReturn, Sequence

from .codeword import CodewordError, format_codeword
from .corpus import (
    COMPOSERS_CSV,
    Composer,
    Corpus,
    CorpusError,
    Period,
    Work,
    load_corpus,
    save_corpus,
)
from .estimator import EstimatorError
from .metrics import (
    InfluenceScore,
    MetricsError,
    all_pair_influences,
    composer_novelty,
    influence,
    influence_curves_from_pairs,
    work_novelties,
)
from .smf import ChordifyError, SmfParseError, chordify_midi
from .stats import (
    PowerLawFit,
    StatsError,
    codeword_occurrence_counts,
    fit_power_law,
    spearman,
    transition_occurrence_counts,
    unique_transition_growth,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INTERNAL = 2

CORPUS_FORMAT = """\
Corpus directory layout:
  works.csv      header: work_id,composer_id,year,title,sequence_file
  composers.csv  header: composer_id,name,birth_year,death_year,period
                 period is one of Baroque, Classical, Transition, Romantic, Other
  sequences/     one UTF-8 text file per work: one codeword per line,
                 MIDI pitches as base-10 integers joined by commas in
                 ascending order (e.g. 60,64,67). Blank lines and lines
                 starting with '#' are ignored.

Ingest metadata (works CSV) uses the same columns with midi_file in place
of sequence_file, holding paths relative to the MIDI directory.
"""


class _Parser(argparse.ArgumentParser):
    """Argument errors are input errors (exit 1), not internal ones."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_INPUT)


@dataclass
class PipelineConfig:
    """Knobs of a full analysis run; mirrors the ``analyze`` flags."""

    corpus_dir: Path
    out_dir: Path
    alpha0: float = 1.0
    window_years: int = 10
    step_years: int = 1
    seed: int = 1
    workers: int = 1
    composer: str | None = None
    figures: bool = True

    def validate(self) -> None:
        if self.alpha0 <= 0:
            raise CorpusError("alpha0 must be positive")
        if self.window_years < 0:
            raise CorpusError("window-years must be >= 0")
        if self.step_years < 1:
            raise CorpusError("step-years must be >= 1")
        if self.workers < 1:
            raise CorpusError("workers must be >= 1")


def _write_csv(path_or_handle, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    if isinstance(path_or_handle, (str, Path)):
        with open(path_or_handle, "w", newline="", encoding="utf-8") as fh:
            _write_csv(fh, header, rows)
        return
    writer = csv.writer(path_or_handle, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)


# ---------------------------------------------------------------- ingest


def _ingest_one(job: tuple[str, str, int, int]) -> tuple[str, str | None, tuple | None]:
    """Parse and chordify one MIDI file; returns (work_id, error, sequence)."""
    work_id, path, divisor, min_duration = job
    try:
        data = Path(path).read_bytes()
        seq = chordify_midi(data, quantize_divisor=divisor, min_duration=min_duration)
        return work_id, None, seq
    except (SmfParseError, ChordifyError, CodewordError, OSError) as exc:
        return work_id, str(exc), None


def cmd_ingest(args: argparse.Namespace) -> int:
    midi_dir = Path(args.midi_dir)
    metadata_csv = Path(args.metadata_csv)
    composers_csv = Path(args.composers) if args.composers else metadata_csv.parent / COMPOSERS_CSV
    out_dir = Path(args.out_corpus_dir)
    if not midi_dir.is_dir():
        raise CorpusError(f"MIDI directory not found: {midi_dir}")

    rows = _read_metadata(metadata_csv, ("work_id", "composer_id", "year", "title", "midi_file"))
    for row in rows:
        try:
            int(row["year"])
        except ValueError:
            raise CorpusError(
                f"work {row['work_id']}: undated or malformed year {row['year']!r}"
            ) from None
    composers = _read_composers(composers_csv)

    jobs = sorted(
        (row["work_id"].strip(), str(midi_dir / row["midi_file"].strip()),
         args.quantize_divisor, args.min_duration)
        for row in rows)
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_ingest_one, jobs))
    else:
        results = [_ingest_one(job) for job in jobs]

    sequences: dict[str, tuple] = {}
    failures: list[tuple[str, str, str]] = []
    for (work_id, path, _, _), (_, error, seq) in zip(jobs, results):
        if error is not None:
            failures.append((work_id, path, error))
            print(f"error: {path}: {error}", file=sys.stderr)
        else:
            sequences[work_id] = seq
            print(f"{work_id}: {len(seq)} codewords ({path})")

    if failures and not args.skip_bad:
        print(f"{len(failures)} file(s) failed to ingest; rerun with --skip-bad "
              "to drop them", file=sys.stderr)
        return EXIT_INPUT

    works = []
    for row in rows:
        wid = row["work_id"].strip()
        if wid not in sequences:
            continue  # failed file under --skip-bad
        works.append(Work(id=wid, composer_id=row["composer_id"].strip(),
                          year=int(row["year"]), title=row["title"],
                          sequence=sequences[wid]))
    corpus = Corpus(composers, works)
    save_corpus(corpus, out_dir)
    print(f"wrote corpus with {len(works)} works to {out_dir}")
    return EXIT_OK


def _read_metadata(path: Path, required: tuple[str, ...]) -> list[dict[str, str]]:
    if not path.is_file():
        raise CorpusError(f"missing metadata file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for col in required:
            if col not in (reader.fieldnames or []):
                raise CorpusError(f"{path}: missing column {col!r}")
        return list(reader)


def _read_composers(path: Path) -> list[Composer]:
    rows = _read_metadata(path, ("composer_id", "name", "birth_year", "death_year", "period"))
    composers = []
    for row in rows:
        try:
            period = Period(row["period"].strip())
        except ValueError:
            raise CorpusError(
                f"composer {row['composer_id']}: unknown period {row['period']!r}"
            ) from None
        composers.append(Composer(id=row["composer_id"].strip(), name=row["name"],
                                  birth_year=int(row["birth_year"]),
                                  death_year=int(row["death_year"]), period=period))
    return composers


# ---------------------------------------------------------------- analyze


def _distribution_rows(occurrences: dict) -> list[tuple[int, float]]:
    """CCDF of codeword occurrence counts: fraction of codewords >= count."""
    counts = sorted(occurrences.values())
    total = len(counts)
    return [(value, (total - bisect.bisect_left(counts, value)) / total)
            for value in sorted(set(counts))]


def _fit_or_none(occurrences: dict) -> tuple[PowerLawFit | None, str | None]:
    try:
        return fit_power_law(list(occurrences.values())), None
    except StatsError as exc:
        return None, str(exc)


def _write_fit(path: Path, fit: PowerLawFit | None, reason: str | None,
               n_samples: int) -> None:
    lines = [f"samples: {n_samples}"]
    if fit is None:
        lines.append(f"fit: unavailable ({reason})")
    else:
        lines += [
            f"xmin: {fit.xmin}",
            f"n_tail: {fit.n_tail}",
            f"density_exponent: {fit.density_exponent!r}",
            f"cumulative_exponent: {fit.cumulative_exponent!r}",
            "note: cumulative exponent = density exponent - 1; "
            "CCDF P(X >= x) ~ x^-cumulative, pmf p(x) ~ x^-density",
            f"ks_distance: {fit.ks_distance!r}",
            f"poor_fit: {'yes' if fit.poor_fit else 'no'}",
        ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _correlation_rows(corpus: Corpus, work_rows, composer_rows,
                      seed: int) -> list[tuple]:
    """Spearman of H vs P novelty at work and composer level."""
    rows = []
    for level, xs, ys in (
            ("work", [r.nu_h for r in work_rows], [r.nu_p for r in work_rows]),
            ("composer", [r.n_h for r in composer_rows], [r.n_p for r in composer_rows])):
        try:
            corr = spearman(xs, ys, seed=seed)
        except StatsError as exc:
            log.warning("skipping %s-level correlation: %s", level, exc)
            continue
        rows.append((level, corr.n, corr.rho, corr.ci_halfwidth))
    return rows


def run_analysis(corpus: Corpus, config: PipelineConfig) -> None:
    """Compute every report table (and optionally the figures) into out_dir."""
    config.validate()
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)

    work_rows = work_novelties(corpus, config.alpha0)
    composer_rows = composer_novelty(corpus, config.alpha0)
    sources = [config.composer] if config.composer else None
    pairs = all_pair_influences(corpus, alpha0=config.alpha0,
                                workers=config.workers, sources=sources)
    curves = influence_curves_from_pairs(corpus, pairs, config.window_years,
                                         config.step_years)

    occurrences = codeword_occurrence_counts(corpus)
    distribution = _distribution_rows(occurrences) if occurrences else []
    fit, fit_reason = _fit_or_none(occurrences) if occurrences else (None, "empty corpus")
    growth = unique_transition_growth(corpus)
    edges = transition_occurrence_counts(corpus)

    _write_csv(out / "work_novelty.csv",
               ("work_id", "year", "composer_id", "nu_H", "nu_P"),
               [(r.work_id, corpus.works[r.work_id].year,
                 corpus.works[r.work_id].composer_id, r.nu_h, r.nu_p)
                for r in work_rows])
    _write_csv(out / "composer_novelty.csv",
               ("composer_id", "name", "midpoint_year", "n_works", "N_H", "N_P"),
               [(r.composer_id, corpus.composers[r.composer_id].name,
                 corpus.composers[r.composer_id].midpoint_year,
                 r.n_works, r.n_h, r.n_p)
                for r in composer_rows])
    _write_csv(out / "influence_pairs.csv", ("source", "target", "eta"),
               [(p.source_composer_id, p.target_work_id, p.eta) for p in pairs])
    _write_csv(out / "influence_curves.csv", ("composer", "t", "mean_eta", "n"),
               [(c.composer_id, pt.year, pt.mean_eta, pt.n_target_works)
                for c in curves for pt in c.points])
    _write_csv(out / "distribution.csv", ("count", "ccdf"), distribution)
    _write_fit(out / "fit.txt", fit, fit_reason, len(occurrences))
    _write_csv(out / "growth.csv", ("year", "cumulative_unique_transitions"), growth)
    _write_csv(out / "correlations.csv", ("level", "n", "rho_s", "ci_halfwidth"),
               _correlation_rows(corpus, work_rows, composer_rows, config.seed))
    _write_csv(out / "edges.csv", ("from", "to", "count"),
               sorted(((format_codeword(a), format_codeword(b), count)
                       for (a, b), count in edges.items()),
                      key=lambda row: (-row[2], row[0], row[1])))

    if config.figures:
        from . import figures

        figures.render_figures(out / "figures", corpus, work_rows, composer_rows,
                               curves, distribution, fit, growth)


def cmd_analyze(args: argparse.Namespace) -> int:
    config = PipelineConfig(
        corpus_dir=Path(args.corpus_dir), out_dir=Path(args.out),
        alpha0=args.alpha0, window_years=args.window_years,
        step_years=args.step_years, seed=args.seed, workers=args.workers,
        composer=args.composer, figures=not args.no_figures)
    config.validate()
    corpus = load_corpus(config.corpus_dir)
    run_analysis(corpus, config)
    print(f"analysis written to {config.out_dir}")
    return EXIT_OK


# ------------------------------------------------------- small subcommands


def _open_out(args: argparse.Namespace):
    if args.out:
        return open(args.out, "w", newline="", encoding="utf-8")
    return None


def cmd_novelty(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus_dir)
    rows = [(r.work_id, corpus.works[r.work_id].year,
             corpus.works[r.work_id].composer_id, r.nu_h, r.nu_p)
            for r in work_novelties(corpus, args.alpha0)]
    header = ("work_id", "year", "composer_id", "nu_H", "nu_P")
    handle = _open_out(args)
    if handle:
        with handle:
            _write_csv(handle, header, rows)
    else:
        _write_csv(sys.stdout, header, rows)
    return EXIT_OK


def cmd_influence(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus_dir)
    if args.target and not args.source:
        raise MetricsError("--target requires --source")
    if args.curve and not args.source:
        raise MetricsError("--curve requires --source")

    if args.target:
        score = influence(corpus, args.source, args.target, args.alpha0)
        header = ("source", "target", "eta")
        rows = [(score.source_composer_id, score.target_work_id, score.eta)]
    elif args.curve:
        pairs = all_pair_influences(corpus, alpha0=args.alpha0,
                                    workers=args.workers, sources=[args.source])
        curves = influence_curves_from_pairs(corpus, pairs, args.window_years,
                                             args.step_years)
        header = ("composer", "t", "mean_eta", "n")
        rows = [(c.composer_id, p.year, p.mean_eta, p.n_target_works)
                for c in curves for p in c.points]
    else:
        sources = [args.source] if args.source else None
        pairs = all_pair_influences(corpus, alpha0=args.alpha0,
                                    workers=args.workers, sources=sources)
        header = ("source", "target", "eta")
        rows = [(p.source_composer_id, p.target_work_id, p.eta) for p in pairs]

    handle = _open_out(args)
    if handle:
        with handle:
            _write_csv(handle, header, rows)
    else:
        _write_csv(sys.stdout, header, rows)
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus_dir)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    occurrences = codeword_occurrence_counts(corpus)
    distribution = _distribution_rows(occurrences) if occurrences else []
    fit, fit_reason = _fit_or_none(occurrences) if occurrences else (None, "empty corpus")
    _write_csv(out / "distribution.csv", ("count", "ccdf"), distribution)
    _write_fit(out / "fit.txt", fit, fit_reason, len(occurrences))
    _write_csv(out / "growth.csv", ("year", "cumulative_unique_transitions"),
               unique_transition_growth(corpus))
    work_rows = work_novelties(corpus, args.alpha0)
    composer_rows = composer_novelty(corpus, args.alpha0)
    _write_csv(out / "correlations.csv", ("level", "n", "rho_s", "ci_halfwidth"),
               _correlation_rows(corpus, work_rows, composer_rows, args.seed))
    edges = transition_occurrence_counts(corpus)
    _write_csv(out / "edges.csv", ("from", "to", "count"),
               sorted(((format_codeword(a), format_codeword(b), count)
                       for (a, b), count in edges.items()),
                      key=lambda row: (-row[2], row[0], row[1])))
    print(f"stats written to {out}")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="chordflow",
        description="Chord-transition novelty and influence analysis for MIDI corpora.",
        epilog=CORPUS_FORMAT,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="parse MIDI files into a corpus directory",
                       epilog=CORPUS_FORMAT,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("midi_dir", help="directory holding the MIDI files")
    p.add_argument("metadata_csv",
                   help="works CSV: work_id,composer_id,year,title,midi_file")
    p.add_argument("out_corpus_dir", help="corpus directory to write")
    p.add_argument("--composers", default=None,
                   help="composers CSV (default: composers.csv next to the metadata)")
    p.add_argument("--quantize-divisor", type=int, default=16,
                   help="onset grid: fractions of a quarter note (default 16)")
    p.add_argument("--min-duration", type=int, default=0,
                   help="drop codewords shorter than this many grid steps (default 0 = off)")
    p.add_argument("--skip-bad", action="store_true",
                   help="skip unparseable files instead of failing the run")
    p.add_argument("--workers", type=int, default=1, help="parallel parse workers")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("analyze", help="run the full analysis pipeline",
                       epilog=CORPUS_FORMAT,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("corpus_dir")
    p.add_argument("-o", "--out", required=True, help="output directory")
    p.add_argument("--alpha0", type=float, default=1.0,
                   help="uniform prior weight per possible transition (default 1)")
    p.add_argument("--window-years", type=int, default=10)
    p.add_argument("--step-years", type=int, default=1)
    p.add_argument("--seed", type=int, default=1, help="bootstrap seed (default 1)")
    p.add_argument("--workers", type=int, default=1,
                   help="parallel workers for all-pairs influence")
    p.add_argument("--composer", default=None,
                   help="restrict influence pairs and curves to this source composer")
    p.add_argument("--no-figures", action="store_true",
                   help="skip PNG figure rendering")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("novelty", help="per-work H- and P-novelty CSV")
    p.add_argument("corpus_dir")
    p.add_argument("-o", "--out", default=None, help="output file (default stdout)")
    p.add_argument("--alpha0", type=float, default=1.0)
    p.set_defaults(func=cmd_novelty)

    p = sub.add_parser("influence", help="pairwise influences or influence curves")
    p.add_argument("corpus_dir")
    p.add_argument("--source", default=None, help="source composer id")
    p.add_argument("--target", default=None, help="target work id (single pair)")
    p.add_argument("--curve", action="store_true",
                   help="emit the windowed influence curve for --source")
    p.add_argument("--window-years", type=int, default=10)
    p.add_argument("--step-years", type=int, default=1)
    p.add_argument("--alpha0", type=float, default=1.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--out", default=None, help="output file (default stdout)")
    p.set_defaults(func=cmd_influence)

    p = sub.add_parser("stats", help="distribution, fit, growth, correlations")
    p.add_argument("corpus_dir")
    p.add_argument("-o", "--out", required=True, help="output directory")
    p.add_argument("--alpha0", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CorpusError, CodewordError, SmfParseError, ChordifyError,
            EstimatorError, MetricsError, StatsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # internal invariant violation
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
