from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from conftest import make_record
from faceaudit.cli import main
from faceaudit.records import serialize_records
from faceaudit.reference import reference_set_from_dict

RECORDS = "joint_small.jsonl"


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def reference_json(runner, fixtures_dir, tmp_path):
    out = tmp_path / "refs.json"
    result = runner.invoke(
        main,
        [
            "reference",
            "--population", str(fixtures_dir / "population_toy.csv"),
            "--regions", "world",
            "--out", str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    return out


class TestIngest:
    def test_clean_file(self, runner, fixtures_dir):
        result = runner.invoke(
            main, ["ingest", "--records", str(fixtures_dir / RECORDS)]
        )
        assert result.exit_code == 0
        assert "40 accepted, 0 rejected" in result.output

    def test_bad_lines_counted(self, runner, fixtures_dir, tmp_path):
        path = tmp_path / "mixed.jsonl"
        lines = (fixtures_dir / RECORDS).read_text().splitlines()[:3]
        lines.insert(1, '{"image_id": "x"}')
        lines.insert(3, "not json")
        path.write_text("\n".join(lines) + "\n")
        result = runner.invoke(main, ["ingest", "--records", str(path)])
        assert result.exit_code == 0
        assert "3 accepted, 2 rejected" in result.output
        assert "line 2" in result.output

    def test_strict_mode_fails(self, runner, fixtures_dir, tmp_path):
        path = tmp_path / "mixed.jsonl"
        path.write_text('{"image_id": "x"}\n')
        result = runner.invoke(main, ["ingest", "--records", str(path), "--strict"])
        assert result.exit_code == 1

    def test_missing_file_is_usage_error(self, runner, tmp_path):
        result = runner.invoke(
            main, ["ingest", "--records", str(tmp_path / "nope.jsonl")]
        )
        assert result.exit_code == 2


class TestReference:
    def test_output_parses_and_is_reproducible(
        self, runner, fixtures_dir, reference_json, tmp_path
    ):
        refs = reference_set_from_dict(json.loads(reference_json.read_text()))
        assert refs.get("world", "race4").probs[2] == 0.5  # asian
        again = tmp_path / "refs2.json"
        result = runner.invoke(
            main,
            [
                "reference",
                "--population", str(fixtures_dir / "population_toy.csv"),
                "--regions", "world",
                "--out", str(again),
            ],
        )
        assert result.exit_code == 0
        assert again.read_bytes() == reference_json.read_bytes()

    def test_unknown_region_fails_validation(self, runner, fixtures_dir, tmp_path):
        result = runner.invoke(
            main,
            [
                "reference",
                "--population", str(fixtures_dir / "population_toy.csv"),
                "--regions", "mars",
                "--out", str(tmp_path / "refs.json"),
            ],
        )
        assert result.exit_code == 1


class TestAudit:
    def test_marginal_writes_all_formats(
        self, runner, fixtures_dir, reference_json, tmp_path
    ):
        out = tmp_path / "out"
        result = runner.invoke(
            main,
            [
                "audit",
                "--records", str(fixtures_dir / RECORDS),
                "--reference", str(reference_json),
                "--mode", "marginal",
                "--out", str(out),
                "--format", "json",
                "--format", "csv",
                "--format", "md",
            ],
        )
        assert result.exit_code == 0, result.output
        for name in ("report.json", "report.csv", "report.md", "plot_data.csv"):
            assert (out / name).exists()
        payload = json.loads((out / "report.json").read_text())
        assert payload["mode"] == "marginal"
        assert any("kolors" in w for w in payload["warnings"])

    def test_marginal_markdown_matches_golden(
        self, runner, fixtures_dir, reference_json, tmp_path
    ):
        out = tmp_path / "out"
        result = runner.invoke(
            main,
            [
                "audit",
                "--records", str(fixtures_dir / RECORDS),
                "--reference", str(reference_json),
                "--mode", "marginal",
                "--out", str(out),
                "--format", "md",
            ],
        )
        assert result.exit_code == 0, result.output
        golden = (fixtures_dir / "golden_marginal.md").read_text()
        assert (out / "report.md").read_text() == golden

    def test_marginal_requires_reference(self, runner, fixtures_dir, tmp_path):
        result = runner.invoke(
            main,
            [
                "audit",
                "--records", str(fixtures_dir / RECORDS),
                "--mode", "marginal",
                "--out", str(tmp_path / "out"),
            ],
        )
        assert result.exit_code == 2

    def test_unknown_mode_is_usage_error(self, runner, fixtures_dir, tmp_path):
        result = runner.invoke(
            main,
            [
                "audit",
                "--records", str(fixtures_dir / RECORDS),
                "--mode", "sideways",
                "--out", str(tmp_path / "out"),
            ],
        )
        assert result.exit_code == 2

    def test_bad_config_key_fails_validation(
        self, runner, fixtures_dir, tmp_path
    ):
        cfg = tmp_path / "audit.cfg"
        cfg.write_text("gamma = 7\n")
        result = runner.invoke(
            main,
            [
                "audit",
                "--records", str(fixtures_dir / RECORDS),
                "--mode", "emotion",
                "--out", str(tmp_path / "out"),
                "--config", str(cfg),
            ],
        )
        assert result.exit_code == 1
        assert "gamma" in result.output

    def test_config_file_with_flag_override(self, runner, tmp_path):
        corpus = tmp_path / "recs.jsonl"
        recs = []
        for emotion in ("neutral", "angry"):
            for i in range(6):
                recs.append(
                    make_record(
                        image_id=f"{emotion}-{i}",
                        prompt_emotion=emotion,
                        gender="male" if (i < 5 or emotion == "neutral" and i % 2) else "female",
                    )
                )
        corpus.write_text(serialize_records(recs))
        cfg = tmp_path / "audit.cfg"
        cfg.write_text("attributes = gender2\nlog_base = two\ntop_k = 4\n")
        out = tmp_path / "out"
        result = runner.invoke(
            main,
            [
                "audit",
                "--records", str(corpus),
                "--mode", "emotion",
                "--out", str(out),
                "--config", str(cfg),
                "--log-base", "natural",
            ],
        )
        assert result.exit_code == 0, result.output
        payload = json.loads((out / "report.json").read_text())
        assert payload["config"]["attributes"] == ["gender2"]
        assert payload["config"]["log_base"] == "natural"  # flag wins
        assert payload["config"]["top_k"] == 4


class TestCompare:
    def test_self_comparison_is_zero(self, runner, fixtures_dir, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(
            main,
            [
                "compare",
                "--records-a", str(fixtures_dir / RECORDS),
                "--records-b", str(fixtures_dir / RECORDS),
                "--out", str(out),
                "--format", "md",
            ],
        )
        assert result.exit_code == 0, result.output
        payload = json.loads((out / "report.json").read_text()) if (
            out / "report.json"
        ).exists() else None
        assert payload is None  # only md was requested
        md = (out / "report.md").read_text()
        assert "0.00" in md

    def test_invalid_top_k(self, runner, fixtures_dir, tmp_path):
        result = runner.invoke(
            main,
            [
                "compare",
                "--records-a", str(fixtures_dir / RECORDS),
                "--records-b", str(fixtures_dir / RECORDS),
                "--out", str(tmp_path / "out"),
                "--top-k", "0",
            ],
        )
        assert result.exit_code == 2


class TestValidate:
    def test_self_validation_perfect_accuracy(self, runner, fixtures_dir, tmp_path):
        out = tmp_path / "cm.json"
        result = runner.invoke(
            main,
            [
                "validate",
                "--truth", str(fixtures_dir / RECORDS),
                "--predicted", str(fixtures_dir / RECORDS),
                "--attribute", "race5",
                "--merge-race",
                "--out", str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        assert "accuracy: 1.0000" in result.output
        payload = json.loads(out.read_text())
        assert payload["accuracy"] == 1.0
        assert payload["merged"]["accuracy"] == 1.0

    def test_merge_race_requires_race5(self, runner, fixtures_dir, tmp_path):
        result = runner.invoke(
            main,
            [
                "validate",
                "--truth", str(fixtures_dir / RECORDS),
                "--predicted", str(fixtures_dir / RECORDS),
                "--attribute", "gender2",
                "--merge-race",
            ],
        )
        assert result.exit_code == 2


class TestSimulate:
    @pytest.fixture
    def spec_file(self, fixtures_dir, tmp_path):
        pair = json.loads((fixtures_dir / "joint_pair.json").read_text())
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(pair["q"]))
        return path

    def test_deterministic_and_reingestible(self, runner, spec_file, tmp_path):
        args = [
            "simulate",
            "--spec", str(spec_file),
            "--n", "50",
            "--seed", "9",
            "--model", "sim",
            "--emotion", "neutral",
        ]
        out_a, out_b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        assert runner.invoke(main, args + ["--out", str(out_a)]).exit_code == 0
        assert runner.invoke(main, args + ["--out", str(out_b)]).exit_code == 0
        assert out_a.read_bytes() == out_b.read_bytes()
        result = runner.invoke(main, ["ingest", "--records", str(out_a), "--strict"])
        assert result.exit_code == 0
        assert "50 accepted, 0 rejected" in result.output

    def test_invalid_n(self, runner, spec_file, tmp_path):
        result = runner.invoke(
            main,
            [
                "simulate",
                "--spec", str(spec_file),
                "--n", "0",
                "--seed", "1",
                "--out", str(tmp_path / "x.jsonl"),
            ],
        )
        assert result.exit_code == 2

    def test_malformed_spec_fails_validation(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"scheme": "gender2", "probs": [0.5, 0.5]}')
        result = runner.invoke(
            main,
            [
                "simulate",
                "--spec", str(bad),
                "--n", "5",
                "--seed", "1",
                "--out", str(tmp_path / "x.jsonl"),
            ],
        )
        # A marginal spec cannot drive the joint sampler.
        assert result.exit_code == 1


class TestReportRerender:
    def test_rerender_matches_audit_output(
        self, runner, fixtures_dir, reference_json, tmp_path
    ):
        out = tmp_path / "out"
        result = runner.invoke(
            main,
            [
                "audit",
                "--records", str(fixtures_dir / RECORDS),
                "--reference", str(reference_json),
                "--mode", "marginal",
                "--out", str(out),
                "--format", "json",
                "--format", "md",
            ],
        )
        assert result.exit_code == 0, result.output
        rendered = tmp_path / "again.md"
        result = runner.invoke(
            main,
            [
                "report",
                "--in", str(out / "report.json"),
                "--format", "md",
                "--out", str(rendered),
            ],
        )
        assert result.exit_code == 0, result.output
        assert rendered.read_text() == (out / "report.md").read_text()

    def test_unparseable_report(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("[1, 2, 3]")
        result = runner.invoke(
            main,
            ["report", "--in", str(bad), "--format", "md", "--out", str(tmp_path / "o.md")],
        )
        assert result.exit_code == 1
