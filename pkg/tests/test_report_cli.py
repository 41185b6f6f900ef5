import csv
import json
import math

import pytest

from conftest import hyper_count_records, make_record, write_jsonl
from neutro_audit import cli, verify
from neutro_audit.backends import mock_backend
from neutro_audit.phenomena import PhenomenonClass as P, default_bank
from neutro_audit.profiles import table_profile
from neutro_audit.prompting import StrategyKind as S
from neutro_audit.records import Dataset, validate_and_filter
from neutro_audit.report import EmptyDatasetError, build_report, render_tables, write_report
from neutro_audit.runner import ExperimentConfig, run_experiment
from neutro_audit.stats import (
    chi_square_independence,
    describe,
    fisher_one_vs_rest,
    hypertruth_table,
    paired_columns,
    pearson_correlation,
    shift_table,
)


@pytest.fixture
def mock_run(tmp_path):
    path = tmp_path / "mock.jsonl"
    run_experiment(ExperimentConfig(), default_bank(), mock_backend(table_profile()), path)
    return path


# --- report ----------------------------------------------------------------


def test_report_tables_from_hyper_records(hyper_records):
    ds = Dataset.from_records(hyper_records)
    bundle = build_report(ds)
    assert bundle.chi_square.statistic == pytest.approx(11.3191, abs=1e-4)
    tables = render_tables(bundle)
    assert {"hypertruth_S1", "hypertruth_S2", "tests_S1", "shifts", "correlations",
            "descriptive_phenomenon_S1", "descriptive_model_S2", "wilson_S1"} <= set(tables)
    md = tables["hypertruth_S1"]["md"]
    assert "| Contradiction (Ethical) | 19 | 20 | 95.0% |" in md
    assert "**66**" in md and "[0.563, 0.745]" in md


def test_report_rejects_empty_dataset():
    with pytest.raises(EmptyDatasetError):
        build_report(Dataset.from_records([]))


def test_simplex_only_dataset_reports_zero_hypertruth():
    recs = [make_record(S.PROBABILISTIC, "m", c, r, {"T": 0.34, "I": 0.33, "F": 0.33})
            for c in P for r in range(1, 5)]
    bundle = build_report(Dataset.from_records(recs))
    assert bundle.hypertruth[S.PROBABILISTIC].pooled.k == 0
    assert bundle.chi_square is None and not bundle.shifts


def test_csv_round_trip(tmp_path, mock_run):
    ds, ex = validate_and_filter(mock_run)
    write_report(build_report(ds, ex), ds, tmp_path / "out", ["csv"])
    with open(tmp_path / "out" / "plot_records.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 300
    by_key = {(r.strategy.value, r.model_id, r.phenomenon_class.value, r.repetition): r.triplet for r in ds.records}
    for row in rows:
        trip = by_key[(row["strategy"], row["model_id"], row["phenomenon_class"], int(row["repetition"]))]
        assert (float(row["T"]), float(row["I"]), float(row["F"])) == trip.as_tuple()
        assert float(row["Sum"]) == trip.total
    with open(tmp_path / "out" / "wilson_S1.csv", newline="") as fh:
        w = next(csv.DictReader(fh))
    assert float(w["high"]) == hypertruth_table(ds, S.NEUTROSOPHIC).wilson.high


# --- verify ----------------------------------------------------------------


def _self_consistent(monkeypatch, ds):
    """Point every published constant at the dataset's own values."""
    s1 = S.NEUTROSOPHIC
    cols = ("T", "I", "F", "Sum")

    def rows(selector):
        return tuple((r.means[c], r.sds[c]) for c in cols for r in [describe("g", selector)])

    monkeypatch.setattr(verify, "TABLE1", {c: rows(ds.triplets(s1, phenomenon=c)) for c in P})
    monkeypatch.setattr(verify, "TABLE2", {m: rows(ds.triplets(s1, model=m)) for m in ds.models(s1)})
    ht = hypertruth_table(ds, s1)
    monkeypatch.setattr(verify, "TABLE3", {P(r.group): r.k for r in ht.rows})
    monkeypatch.setattr(verify, "POOLED_K", ht.pooled.k)
    monkeypatch.setattr(verify, "WILSON", (ht.wilson.low, ht.wilson.high))
    chi = chi_square_independence(ht.contingency())
    monkeypatch.setattr(verify, "CHI2", (chi.statistic, chi.df, chi.p_value))
    fe = fisher_one_vs_rest(ht)[P.ETHICAL_CONTRADICTION.value]
    monkeypatch.setattr(verify, "FISHER_ETHICAL", (fe.odds_ratio, fe.p_value))
    monkeypatch.setattr(verify, "TABLE4", {
        P(r.phenomenon): (r.s1["T"], r.s2["T"], r.delta["T"], r.s1["I"], r.s2["I"], r.delta["I"])
        for r in shift_table(ds)
    })
    pc = paired_columns(ds)
    monkeypatch.setattr(verify, "CORRELATIONS", {
        pair: pearson_correlation(pc[pair[0]], pc[pair[1]]) for pair in verify.CORRELATIONS
    })


def test_verify_passes_on_self_consistent_targets(monkeypatch, mock_run):
    ds, ex = validate_and_filter(mock_run)
    _self_consistent(monkeypatch, ds)
    outcome = verify.verify_dataset(ds, ex)
    assert outcome.passed, outcome.format_table()
    assert outcome.sd_convention == "sample (n-1)"


def test_verify_picks_population_sd_when_it_matches(monkeypatch, mock_run):
    ds, ex = validate_and_filter(mock_run)
    _self_consistent(monkeypatch, ds)
    pop = {c: tuple((r.means[k], r.sds_population[k]) for k in ("T", "I", "F", "Sum")
                    for r in [describe("g", ds.triplets(S.NEUTROSOPHIC, phenomenon=c))]) for c in P}
    monkeypatch.setattr(verify, "TABLE1", pop)
    monkeypatch.setattr(verify, "TABLE2", {})
    assert verify.verify_dataset(ds, ex).sd_convention == "population (n)"


def test_verify_is_sensitive_to_one_count(hyper_records):
    ds = Dataset.from_records(hyper_records)
    base = {t.name: t for t in verify.verify_dataset(ds).targets}
    assert base["table3.pooled.k"].passed and base["chi2.statistic"].passed
    assert base["fisher.ethical.p"].passed and base["prop1.S2_hypertruth_rate"].passed
    counts = {**{c: k for c, k in verify.TABLE3.items()}, P.FUTURE_CONTINGENCY: 13}
    ds65 = Dataset.from_records(hyper_count_records(counts))
    moved = {t.name: t for t in verify.verify_dataset(ds65).targets}
    assert not moved["table3.pooled.k"].passed and moved["table3.pooled.k"].computed == 65
    assert not moved["table3.FutureContingency.k"].passed


# --- CLI -------------------------------------------------------------------


def test_cli_run_analyze_verify(tmp_path, capsys):
    out = tmp_path / "r.jsonl"
    assert cli.main(["run", "-o", str(out), "-q"]) == cli.EXIT_OK
    assert "300 record(s)" in capsys.readouterr().out
    assert cli.main(["run", "-o", str(out), "-q"]) == cli.EXIT_USAGE

    for d in ("a", "b"):
        assert cli.main(["analyze", "-i", str(out), "-d", str(tmp_path / d)]) == cli.EXIT_OK
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert len(files) >= 30
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    capsys.readouterr()
    assert cli.main(["verify", "-i", str(out)]) == cli.EXIT_USAGE
    assert "--not-paper-data" in capsys.readouterr().err
    assert cli.main(["verify", "-i", str(out), "--not-paper-data"]) == cli.EXIT_VERIFY
    assert "OVERALL: FAIL" in capsys.readouterr().out


def test_cli_resume_flag(tmp_path):
    out = tmp_path / "r.jsonl"
    assert cli.main(["run", "-o", str(out), "-q", "-m", "gpt-4o", "-n", "2"]) == 0
    lines = out.read_text().splitlines(keepends=True)
    out.write_text("".join(lines[:10]))
    assert cli.main(["run", "-o", str(out), "-q", "-m", "gpt-4o", "-n", "2", "--resume"]) == 0
    assert len(out.read_text().splitlines()) == 30
    assert cli.main(["run", "-o", str(out), "-q", "-m", "gpt-4o", "-n", "3", "--resume"]) == cli.EXIT_USAGE


def test_cli_verify_synthetic_file_reports_per_target(tmp_path, capsys, hyper_records):
    path = write_jsonl(tmp_path / "h.jsonl", hyper_records)
    assert cli.main(["verify", "-i", str(path)]) == cli.EXIT_VERIFY
    out = capsys.readouterr().out
    assert "table3.pooled.k" in out and "wilson.high" in out and "OVERALL: FAIL" in out


def test_cli_analyze_errors(tmp_path, capsys):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    assert cli.main(["analyze", "-i", str(empty), "-d", str(tmp_path / "o")]) == cli.EXIT_RUNTIME
    assert "empty" in capsys.readouterr().err
    assert cli.main(["analyze", "-i", str(tmp_path / "nope.jsonl"), "-d", str(tmp_path)]) == cli.EXIT_RUNTIME
    assert cli.main(["analyze", "-i", str(empty), "-d", str(tmp_path), "-f", "pdf"]) == cli.EXIT_USAGE


def test_cli_usage_errors_exit_one(tmp_path):
    with pytest.raises(SystemExit) as info:
        cli.main(["run"])
    assert info.value.code == cli.EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        cli.main(["frobnicate"])
    assert info.value.code == cli.EXIT_USAGE
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"backend": {"kind": "http", "api_key": "sk-live"}}))
    assert cli.main(["run", "-c", str(cfg), "-o", str(tmp_path / "x.jsonl")]) == cli.EXIT_USAGE


def test_cli_http_without_credential_aborts(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("NEUTRO_AUDIT_NO_SUCH_KEY", raising=False)
    out = tmp_path / "x.jsonl"
    code = cli.main(["run", "-o", str(out), "-q", "-b", "http", "--api-key-env", "NEUTRO_AUDIT_NO_SUCH_KEY",
                     "--endpoint", "http://127.0.0.1:9/v1/chat/completions"])
    assert code == cli.EXIT_RUNTIME
    assert "aborted" in capsys.readouterr().err
    assert len(out.read_text().splitlines()) == 1


def test_cli_bank(capsys):
    assert cli.main(["bank"]) == 0
    bank = json.loads(capsys.readouterr().out)
    assert [b["class"] for b in bank] == [c.value for c in P]


def test_format_table_lists_every_target(hyper_records):
    outcome = verify.verify_dataset(Dataset.from_records(hyper_records))
    text = outcome.format_table()
    assert all(t.name in text for t in outcome.targets)
    assert not math.isnan(next(t for t in outcome.targets if t.name == "chi2.p").computed)
