"""End-to-end CLI behavior: ingest, analyze, subcommands, exit codes."""

from __future__ import annotations

import csv
from pathlib import Path

import pytest

from chordflow import cli
from chordflow.corpus import load_corpus, save_corpus
from chordflow.smf import chordify_midi

from conftest import A, AB, B, C, make_composer, make_work
from chordflow.corpus import Corpus
from smf_writer import build_smf, note_off, note_on

COMPOSERS_CSV = """composer_id,name,birth_year,death_year,period
alba,Alba,1680,1750,Baroque
bruno,Bruno,1700,1770,Classical
"""


def _midi_bytes(pitches: list[int]) -> bytes:
    track = []
    tick = 0
    for p in pitches:
        track.append((tick, note_on(p)))
        track.append((tick + 480, note_off(p)))
        tick += 480
    return build_smf([sorted(track)])


def write_midi_inputs(root: Path, corrupt: bool = False) -> tuple[Path, Path, Path]:
    midi_dir = root / "midi"
    midi_dir.mkdir()
    (midi_dir / "w1.mid").write_bytes(_midi_bytes([60, 64, 60]))
    (midi_dir / "w2.mid").write_bytes(_midi_bytes([64, 67, 64, 67]))
    (midi_dir / "w3.mid").write_bytes(b"garbage" if corrupt
                                      else _midi_bytes([60, 67, 72]))
    meta = root / "metadata.csv"
    meta.write_text(
        "work_id,composer_id,year,title,midi_file\n"
        "w1,alba,1700,First,w1.mid\n"
        "w2,bruno,1750,Second,w2.mid\n"
        "w3,alba,1800,Third,w3.mid\n")
    (root / "composers.csv").write_text(COMPOSERS_CSV)
    out = root / "corpus"
    return midi_dir, meta, out


def analysis_corpus(out: Path) -> Path:
    composers = [make_composer("alba", 1680, 1750),
                 make_composer("bruno", 1700, 1770)]
    works = [
        make_work("w1", "alba", 1700, (A, B, A, B)),
        make_work("w2", "bruno", 1720, (A, B, AB, A)),
        make_work("w3", "alba", 1750, (AB, A, C, A, B)),
        make_work("w4", "bruno", 1780, (C, A, B, AB, C)),
    ]
    save_corpus(Corpus(composers, works), out)
    return out


def tree_bytes(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


def read_csv(path: Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


ANALYZE_FILES = ("work_novelty.csv", "composer_novelty.csv", "influence_pairs.csv",
                 "influence_curves.csv", "distribution.csv", "fit.txt",
                 "growth.csv", "correlations.csv", "edges.csv")


class TestIngest:
    def test_three_valid_files(self, tmp_path, capsys):
        midi_dir, meta, out = write_midi_inputs(tmp_path)
        code = cli.main(["ingest", str(midi_dir), str(meta), str(out)])
        assert code == 0
        printed = capsys.readouterr().out
        assert "w1: " in printed and "codewords" in printed
        corpus = load_corpus(out)
        assert len(corpus.works) == 3
        expected = chordify_midi((midi_dir / "w1.mid").read_bytes())
        assert corpus.works["w1"].sequence == expected

    def test_corrupt_file_fails_run(self, tmp_path, capsys):
        midi_dir, meta, out = write_midi_inputs(tmp_path, corrupt=True)
        code = cli.main(["ingest", str(midi_dir), str(meta), str(out)])
        assert code == 1
        err = capsys.readouterr().err
        assert "w3.mid" in err

    def test_skip_bad_keeps_going(self, tmp_path, capsys):
        midi_dir, meta, out = write_midi_inputs(tmp_path, corrupt=True)
        code = cli.main(["ingest", str(midi_dir), str(meta), str(out), "--skip-bad"])
        assert code == 0
        assert "w3.mid" in capsys.readouterr().err
        corpus = load_corpus(out)
        assert sorted(corpus.works) == ["w1", "w2"]

    def test_rerun_is_byte_identical(self, tmp_path):
        midi_dir, meta, out = write_midi_inputs(tmp_path)
        assert cli.main(["ingest", str(midi_dir), str(meta), str(out)]) == 0
        first = tree_bytes(out)
        assert cli.main(["ingest", str(midi_dir), str(meta), str(out)]) == 0
        assert tree_bytes(out) == first

    def test_parallel_ingest_matches_serial(self, tmp_path):
        midi_dir, meta, out = write_midi_inputs(tmp_path)
        out2 = tmp_path / "corpus2"
        assert cli.main(["ingest", str(midi_dir), str(meta), str(out)]) == 0
        assert cli.main(["ingest", str(midi_dir), str(meta), str(out2),
                         "--workers", "2"]) == 0
        assert tree_bytes(out) == tree_bytes(out2)

    def test_missing_midi_dir(self, tmp_path, capsys):
        meta = tmp_path / "metadata.csv"
        meta.write_text("work_id,composer_id,year,title,midi_file\n")
        (tmp_path / "composers.csv").write_text(COMPOSERS_CSV)
        code = cli.main(["ingest", str(tmp_path / "nope"), str(meta),
                         str(tmp_path / "out")])
        assert code == 1


class TestAnalyze:
    def test_produces_full_output_set(self, tmp_path):
        corpus_dir = analysis_corpus(tmp_path / "corpus")
        out = tmp_path / "report"
        assert cli.main(["analyze", str(corpus_dir), "-o", str(out)]) == 0
        for name in ANALYZE_FILES:
            assert (out / name).is_file(), name
        figures = sorted(p.name for p in (out / "figures").iterdir())
        assert figures == ["composer_novelty.png", "influence_curves.png",
                          "novelty_scatter.png", "occurrence_ccdf.png",
                          "transition_growth.png"]

    def test_output_schemas(self, tmp_path):
        corpus_dir = analysis_corpus(tmp_path / "corpus")
        out = tmp_path / "report"
        assert cli.main(["analyze", str(corpus_dir), "-o", str(out)]) == 0
        rows = read_csv(out / "work_novelty.csv")
        assert list(rows[0]) == ["work_id", "year", "composer_id", "nu_H", "nu_P"]
        assert [r["work_id"] for r in rows] == ["w1", "w2", "w3", "w4"]
        assert float(rows[0]["nu_H"]) > 0
        pair_rows = read_csv(out / "influence_pairs.csv")
        assert list(pair_rows[0]) == ["source", "target", "eta"]
        curve_rows = read_csv(out / "influence_curves.csv")
        assert list(curve_rows[0]) == ["composer", "t", "mean_eta", "n"]
        corr_rows = read_csv(out / "correlations.csv")
        assert [r["level"] for r in corr_rows] == ["work", "composer"]
        growth_rows = read_csv(out / "growth.csv")
        assert list(growth_rows[0]) == ["year", "cumulative_unique_transitions"]
        assert (out / "fit.txt").read_text().startswith("samples:")

    def test_two_runs_byte_identical(self, tmp_path):
        corpus_dir = analysis_corpus(tmp_path / "corpus")
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert cli.main(["analyze", str(corpus_dir), "-o", str(out1)]) == 0
        assert cli.main(["analyze", str(corpus_dir), "-o", str(out2)]) == 0
        assert tree_bytes(out1) == tree_bytes(out2)

    def test_composer_filter(self, tmp_path):
        corpus_dir = analysis_corpus(tmp_path / "corpus")
        out = tmp_path / "report"
        assert cli.main(["analyze", str(corpus_dir), "-o", str(out),
                         "--composer", "alba", "--no-figures"]) == 0
        pair_rows = read_csv(out / "influence_pairs.csv")
        assert pair_rows and all(r["source"] == "alba" for r in pair_rows)
        curve_rows = read_csv(out / "influence_curves.csv")
        assert curve_rows and all(r["composer"] == "alba" for r in curve_rows)

    def test_no_figures(self, tmp_path):
        corpus_dir = analysis_corpus(tmp_path / "corpus")
        out = tmp_path / "report"
        assert cli.main(["analyze", str(corpus_dir), "-o", str(out),
                         "--no-figures"]) == 0
        assert not (out / "figures").exists()

    def test_missing_corpus_is_input_error(self, tmp_path, capsys):
        code = cli.main(["analyze", str(tmp_path / "nope"), "-o",
                         str(tmp_path / "out")])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_internal_failure_maps_to_exit_2(self, tmp_path, monkeypatch):
        corpus_dir = analysis_corpus(tmp_path / "corpus")

        def boom(*args, **kwargs):
            raise RuntimeError("invariant violated")

        monkeypatch.setattr(cli, "run_analysis", boom)
        code = cli.main(["analyze", str(corpus_dir), "-o", str(tmp_path / "out")])
        assert code == 2

    def test_usage_error_exits_1(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["analyze"])  # missing required arguments
        assert exc.value.code == 1


class TestSmallCommands:
    def test_novelty_stdout(self, tmp_path, capsys):
        corpus_dir = analysis_corpus(tmp_path / "corpus")
        assert cli.main(["novelty", str(corpus_dir)]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "work_id,year,composer_id,nu_H,nu_P"
        assert len(lines) == 5

    def test_novelty_to_file(self, tmp_path):
        corpus_dir = analysis_corpus(tmp_path / "corpus")
        out = tmp_path / "novelty.csv"
        assert cli.main(["novelty", str(corpus_dir), "-o", str(out)]) == 0
        assert out.read_text().startswith("work_id,")

    def test_influence_single_pair(self, tmp_path, capsys):
        corpus_dir = analysis_corpus(tmp_path / "corpus")
        assert cli.main(["influence", str(corpus_dir), "--source", "alba",
                         "--target", "w2"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "source,target,eta"
        source, target, eta = lines[1].split(",")
        assert (source, target) == ("alba", "w2")
        assert float(eta) >= 0.0

    def test_influence_curve_output(self, tmp_path, capsys):
        corpus_dir = analysis_corpus(tmp_path / "corpus")
        assert cli.main(["influence", str(corpus_dir), "--source", "alba",
                         "--curve"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "composer,t,mean_eta,n"
        assert len(lines) > 1

    def test_influence_requires_source_for_target(self, tmp_path, capsys):
        corpus_dir = analysis_corpus(tmp_path / "corpus")
        assert cli.main(["influence", str(corpus_dir), "--target", "w2"]) == 1

    def test_stats_outputs(self, tmp_path):
        corpus_dir = analysis_corpus(tmp_path / "corpus")
        out = tmp_path / "stats"
        assert cli.main(["stats", str(corpus_dir), "-o", str(out)]) == 0
        for name in ("distribution.csv", "fit.txt", "growth.csv",
                     "correlations.csv", "edges.csv"):
            assert (out / name).is_file(), name
        edge_rows = read_csv(out / "edges.csv")
        assert list(edge_rows[0]) == ["from", "to", "count"]
        counts = [int(r["count"]) for r in edge_rows]
        assert counts == sorted(counts, reverse=True)
