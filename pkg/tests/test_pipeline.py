import json
import random
from collections import Counter
from pathlib import Path

import pytest
from scipy import stats as scipy_stats

from rtsum.corpus import load_dataset
from rtsum.errors import LengthMismatch, ValidationError
from rtsum.metrics import ExampleScores, MetricReport, RougeScore, score_summary
from rtsum.pipeline import (
    ExperimentConfig,
    PerturbationGrid,
    compare,
    export_open_domain_trainset,
    load_config,
    load_result,
    run_baseline,
    run_open_domain,
    run_perturbation_sweep,
)
from rtsum.text import split_sentences

from conftest import make_dataset, record, write_jsonl


def perfect_retrieval_records(n_examples=20, split="test"):
    """Examples with disjoint vocabularies and equal-length documents.

    Every document of example i contains the marker token ``topic<i>`` exactly
    once and nothing shared with other examples, so BM25 scores all gold
    documents equally and above everything else; ascending doc_id tie-break
    then reproduces the input order exactly.
    """
    records = []
    for i in range(n_examples):
        n_docs = 2 + (i % 4)
        docs = [
            f"topic{i} fill{i}x{j}a fill{i}x{j}b. tail{i}x{j} end{i}x{j}."
            for j in range(n_docs)
        ]
        records.append(
            record(f"ex{i:03d}", docs, reference=f"topic{i} report.", split=split)
        )
    return records


def _config(tmp_path, dataset_path, output_dir, **kwargs):
    defaults = dict(
        dataset_path=str(dataset_path),
        output_dir=str(output_dir),
        split="test",
        top_k="oracle",
        max_input_tokens=10_000,
        seed=7,
    )
    defaults.update(kwargs)
    return ExperimentConfig(**defaults)


@pytest.fixture
def perfect_dataset_path(tmp_path):
    path = tmp_path / "perfect.jsonl"
    write_jsonl(path, perfect_retrieval_records())
    return path


class TestRunBaseline:
    def test_records_and_aggregate(self, tmp_path, perfect_dataset_path):
        config = _config(tmp_path, perfect_dataset_path, tmp_path / "out")
        result = run_baseline(config)
        assert len(result.records) == 20
        assert all("scores" in record for record in result.records)
        # aggregate recomputable from the per-example records
        recomputed = sum(r["scores"]["rouge_avg_f1"] for r in result.records) / 20
        assert result.report.aggregate["rouge_avg_f1"] == pytest.approx(recomputed, abs=1e-15)

    def test_identical_summaries_score_one(self, tmp_path):
        # reference equals the lead summary the builtin will produce
        records = [
            record("ex0", ["Alpha beta. Rest one.", "Gamma delta. Rest two."],
                   reference="Alpha beta. Gamma delta."),
        ]
        path = tmp_path / "ident.jsonl"
        write_jsonl(path, records)
        config = _config(tmp_path, path, tmp_path / "out")
        result = run_baseline(config)
        assert result.report.aggregate["rouge_avg_f1"] == pytest.approx(1.0)

    def test_reruns_are_byte_identical(self, tmp_path, perfect_dataset_path):
        config_a = _config(tmp_path, perfect_dataset_path, tmp_path / "out_a")
        config_b = _config(tmp_path, perfect_dataset_path, tmp_path / "out_b")
        path_a = run_baseline(config_a).records_path
        path_b = run_baseline(config_b).records_path
        assert path_a.read_bytes() == path_b.read_bytes()

    def test_resume_skips_completed_examples(self, tmp_path, perfect_dataset_path):
        out = tmp_path / "out"
        out.mkdir()
        precomputed = {
            "condition": "baseline",
            "example_id": "ex000",
            "model_id": "precomputed",
            "summary": "precomputed summary",
            "scores": {key: 0.5 for key in
                       ExampleScores("x", RougeScore(0, 0, 0), RougeScore(0, 0, 0),
                                     RougeScore(0, 0, 0)).flat()},
        }
        (out / "baseline.jsonl").write_text(
            json.dumps(precomputed, sort_keys=True) + "\n", encoding="utf-8"
        )
        config = _config(tmp_path, perfect_dataset_path, out)
        result = run_baseline(config)
        assert len(result.records) == 20
        by_id = {record["example_id"]: record for record in result.records}
        assert by_id["ex000"]["model_id"] == "precomputed"
        assert by_id["ex001"]["model_id"] == "builtin:lead"

    def test_failures_recorded_and_excluded(self, tmp_path, stub_server):
        def flaky(body):
            if "poison" in body["documents"][0]:
                return 500, {"request_id": body["request_id"], "error": "boom"}
            return 200, {"request_id": body["request_id"], "summary": "fine summary",
                         "model_id": "stub"}

        stub_server.behaviors["/summarize"] = flaky
        records = [
            record("ex0", ["normal doc text."]),
            record("ex1", ["poison doc text."]),
            record("ex2", ["another normal doc."]),
        ]
        path = tmp_path / "flaky.jsonl"
        write_jsonl(path, records)
        config = _config(
            tmp_path, path, tmp_path / "out",
            summarizer_endpoint=stub_server.url, summarizer_id="stub",
            retries=0, timeout=5.0,
        )
        result = run_baseline(config)
        assert len(result.failures()) == 1
        assert result.failures()[0]["example_id"] == "ex1"
        assert len(result.report.per_example) == 2
        manifest = json.loads((tmp_path / "out" / "baseline.manifest.json").read_text())
        assert manifest["n_failures"] == 1
        assert manifest["failed_example_ids"] == ["ex1"]

    def test_missing_split_rejected(self, tmp_path, perfect_dataset_path):
        config = _config(tmp_path, perfect_dataset_path, tmp_path / "out", split="train")
        with pytest.raises(ValidationError):
            config.load_dataset()


class TestRunOpenDomain:
    def test_perfect_retrieval_fixed_point(self, tmp_path, perfect_dataset_path):
        config = _config(tmp_path, perfect_dataset_path, tmp_path / "out")
        baseline = run_baseline(config)
        open_domain = run_open_domain(config, baseline)
        baseline_scores = baseline.scores_by_example()
        assert len(open_domain.records) == 20
        for rec in open_domain.records:
            assert rec["retrieval"]["precision_at_k"] == 1.0
            assert rec["retrieval"]["recall_at_k"] == 1.0
            assert rec["retrieval"]["errors"] == {
                "additions": 0, "deletions": 0, "replacements": 0,
            }
            assert rec["scores"] == baseline_scores[rec["example_id"]]
            assert all(delta == 0.0 for delta in rec["deltas"].values())

    def test_decoy_duplicates_counted_as_errors(self, tmp_path):
        # Each example's topic term also appears in one decoy doc belonging to
        # a sibling example, competing for the top-k slots.
        records = []
        for i in range(4):
            sibling = (i + 1) % 4
            records.append(
                record(
                    f"ex{i}",
                    [
                        f"topic{i} own{i}a filler filler",
                        f"topic{i} own{i}b filler filler",
                        f"topic{sibling} decoy{i} filler filler",  # decoy for sibling
                    ],
                    reference=f"topic{i} summary.",
                )
            )
        path = tmp_path / "decoy.jsonl"
        write_jsonl(path, records)
        config = _config(tmp_path, path, tmp_path / "out")
        result = run_open_domain(config)
        dataset = load_dataset(path)
        for rec in result.records:
            example = dataset.example(rec["example_id"])
            gold = {doc.doc_id for doc in example.input_docs}
            retrieved = set(rec["retrieval"]["retrieved_doc_ids"])
            raw_add = len(retrieved - gold)
            raw_del = len(gold - retrieved)
            expected = {
                "replacements": min(raw_add, raw_del),
                "additions": raw_add - min(raw_add, raw_del),
                "deletions": raw_del - min(raw_add, raw_del),
            }
            assert rec["retrieval"]["errors"] == expected
            assert (
                rec["retrieval"]["errors"]["replacements"] > 0
                or rec["retrieval"]["errors"]["additions"] > 0
                or rec["retrieval"]["errors"]["deletions"] > 0
            )

    def test_dense_retriever_path(self, tmp_path, perfect_dataset_path):
        from rtsum.corpus import build_index
        from rtsum.retrieval import EmbeddingStore

        dataset = load_dataset(perfect_dataset_path)
        # one-hot per example: every doc vector equals its example's query vector
        n = len(dataset.examples)
        store = EmbeddingStore(dim=n)
        for i, example in enumerate(dataset.examples):
            vec = [0.0] * n
            vec[i] = 1.0
            store.add_query(example.example_id, vec)
            for doc in example.input_docs:
                store.add_doc(doc.doc_id, vec)
        store_path = tmp_path / "store.jsonl"
        store.save(store_path)
        config = _config(
            tmp_path, perfect_dataset_path, tmp_path / "out",
            retriever="dense", embeddings_path=str(store_path),
        )
        result = run_open_domain(config)
        for rec in result.records:
            assert rec["retrieval"]["precision_at_k"] == 1.0
            assert rec["retrieval"]["recall_at_k"] == 1.0


class TestPerturbationSweep:
    def _sweep_config(self, tmp_path, dataset_path, out, grids, **kwargs):
        return _config(
            tmp_path, dataset_path, out,
            perturbations=[PerturbationGrid(**grid) for grid in grids],
            **kwargs,
        )

    def test_fraction_zero_deltas_are_exactly_zero(self, tmp_path, perfect_dataset_path):
        grids = [
            {"kind": kind, "selection": "random", "fractions": (0.0,)}
            for kind in ("addition", "deletion", "replacement", "duplication",
                         "sorting", "backtranslation")
        ]
        config = self._sweep_config(tmp_path, perfect_dataset_path, tmp_path / "out", grids)
        baseline = run_baseline(config)
        results = run_perturbation_sweep(config, baseline)
        assert len(results) == 6
        for result in results:
            for rec in result.records:
                assert all(delta == 0.0 for delta in rec["deltas"].values())
        csv_lines = (tmp_path / "out" / "sweep_summary.csv").read_text().splitlines()
        assert csv_lines[0] == "kind,selection,fraction,mean_delta,ci68"
        for line in csv_lines[1:]:
            assert line.split(",")[3] == "0.0"

    def test_sorting_preserves_bag_of_sentences(self, tmp_path, perfect_dataset_path):
        grids = [{"kind": "sorting", "selection": "oracle", "fractions": (0.5, 1.0)}]
        config = self._sweep_config(tmp_path, perfect_dataset_path, tmp_path / "out", grids)
        baseline = run_baseline(config)
        results = run_perturbation_sweep(config, baseline)
        baseline_summaries = {
            rec["example_id"]: rec["summary"] for rec in baseline.records
        }
        for result in results:
            for rec in result.records:
                before = Counter(split_sentences(baseline_summaries[rec["example_id"]]))
                after = Counter(split_sentences(rec["summary"]))
                assert before == after
                assert rec["deltas"]["rouge1_f1"] == 0.0

    def test_duplication_matches_manual_two_pipeline_run(self, tmp_path):
        # Three examples, two six-token docs each, summarizer budget 6 tokens.
        # Baseline: per-doc budget 3. With one duplicated doc: budget 2.
        records = []
        for i in range(3):
            records.append(
                record(
                    f"ex{i}",
                    [
                        f"a{i} b{i} c{i} d{i} e{i} f{i}",
                        f"u{i} v{i} w{i} x{i} y{i} z{i}",
                    ],
                    reference=f"a{i} b{i} u{i} v{i}",
                )
            )
        path = tmp_path / "manual.jsonl"
        write_jsonl(path, records)
        grids = [{"kind": "duplication", "selection": "oracle", "fractions": (0.5,)}]
        config = self._sweep_config(
            tmp_path, path, tmp_path / "out", grids, max_input_tokens=6
        )
        baseline = run_baseline(config)
        results = run_perturbation_sweep(config, baseline)
        assert len(results) == 1

        for i in range(3):
            example_id = f"ex{i}"
            # Manual baseline pipeline: truncate to 3 tokens per doc, lead join.
            expected_baseline = f"a{i} b{i} c{i} u{i} v{i} w{i}"
            base_rec = next(
                r for r in baseline.records if r["example_id"] == example_id
            )
            assert base_rec["summary"] == expected_baseline
            # Oracle duplication picks the least similar doc: doc 1 shares u,v
            # (2 of 4 reference tokens) vs doc 0's a,b (2 of 4) -- similarities
            # tie, so ascending doc_id picks doc 0. Perturbed set: d0, d1, d0.
            pert_rec = next(
                r for r in results[0].records if r["example_id"] == example_id
            )
            expected_pert = f"a{i} b{i} u{i} v{i} a{i} b{i}"
            assert pert_rec["summary"] == expected_pert
            reference = f"a{i} b{i} u{i} v{i}"
            expected_base_scores = score_summary(expected_baseline, reference)
            expected_pert_scores = score_summary(expected_pert, reference)
            expected_delta = (
                (expected_pert_scores["rouge1"].f1 + expected_pert_scores["rouge2"].f1
                 + expected_pert_scores["rougeL"].f1) / 3
                - (expected_base_scores["rouge1"].f1 + expected_base_scores["rouge2"].f1
                   + expected_base_scores["rougeL"].f1) / 3
            )
            assert pert_rec["deltas"]["rouge_avg_f1"] == pytest.approx(
                expected_delta, abs=1e-12
            )

    def test_sweep_reruns_byte_identical(self, tmp_path, perfect_dataset_path):
        grids = [
            {"kind": "replacement", "selection": "random", "fractions": (0.0, 0.5, 1.0)},
            {"kind": "sorting", "selection": "oracle", "fractions": (1.0,)},
        ]
        paths = []
        for name in ("run_a", "run_b"):
            config = self._sweep_config(
                tmp_path, perfect_dataset_path, tmp_path / name, grids
            )
            baseline = run_baseline(config)
            run_perturbation_sweep(config, baseline)
            paths.append(tmp_path / name)
        files_a = sorted(p.name for p in paths[0].glob("*.jsonl"))
        files_b = sorted(p.name for p in paths[1].glob("*.jsonl"))
        assert files_a == files_b and len(files_a) == 5  # baseline + 4 grid points
        for name in files_a:
            assert (paths[0] / name).read_bytes() == (paths[1] / name).read_bytes()
        assert (paths[0] / "sweep_summary.csv").read_bytes() == (
            paths[1] / "sweep_summary.csv"
        ).read_bytes()

    def test_baseline_must_cover_examples(self, tmp_path, perfect_dataset_path):
        grids = [{"kind": "deletion", "selection": "random", "fractions": (0.5,)}]
        config = self._sweep_config(tmp_path, perfect_dataset_path, tmp_path / "out", grids)
        incomplete = run_baseline(config)
        incomplete.records = incomplete.records[:5]
        with pytest.raises(LengthMismatch):
            run_perturbation_sweep(config, incomplete)


class TestExportTrainset:
    def test_perfect_retrieval_exports_same_docs(self, tmp_path):
        path = tmp_path / "train.jsonl"
        write_jsonl(path, perfect_retrieval_records(8, split="train"))
        config = _config(tmp_path, path, tmp_path / "out", split="train")
        exported = export_open_domain_trainset(config, tmp_path / "exported.jsonl")
        original = load_dataset(path)
        rebuilt = load_dataset(exported)
        assert len(rebuilt) == len(original)
        for example in original.examples:
            counterpart = rebuilt.example(example.example_id)
            assert Counter(d.text for d in counterpart.input_docs) == Counter(
                d.text for d in example.input_docs
            )

    def test_mean_k_gives_fixed_doc_count(self, tmp_path):
        records = [
            record(f"ex{i}", [f"w{i} t{i}x{j}" for j in range(count)], split="train")
            for i, count in enumerate([1, 2, 3, 4, 5, 5])  # mean 10/3 -> k 3... see below
        ]
        # mean = 20/6 = 3.33 -> round-half-up 3
        path = tmp_path / "train.jsonl"
        write_jsonl(path, records)
        config = _config(tmp_path, path, tmp_path / "out", split="train", top_k="mean")
        exported = export_open_domain_trainset(config, tmp_path / "exported.jsonl")
        rebuilt = load_dataset(exported)
        assert all(len(example.input_docs) == 3 for example in rebuilt.examples)

    def test_export_round_trips_through_loader(self, tmp_path):
        path = tmp_path / "train.jsonl"
        write_jsonl(path, perfect_retrieval_records(5, split="train"))
        config = _config(tmp_path, path, tmp_path / "out", split="train")
        exported = export_open_domain_trainset(config, tmp_path / "exported.jsonl")
        rebuilt = load_dataset(exported)  # validates schema and invariants
        assert all(example.split == "train" for example in rebuilt.examples)


class TestCompare:
    def _report(self, values):
        per_example = [
            ExampleScores(
                f"ex{i}",
                RougeScore(v, v, v),
                RougeScore(v, v, v),
                RougeScore(v, v, v),
            )
            for i, v in enumerate(values)
        ]
        return MetricReport(per_example=per_example)

    def test_identical_reports_not_significant(self):
        report = self._report([0.2, 0.4, 0.6, 0.8])
        rows = compare(report, report)
        assert all(not row["significant"] for row in rows)
        assert all(row["p_value"] == 1.0 for row in rows)

    def test_constant_shift_is_significant(self):
        # eighths are exact in binary, so the paired differences are exactly
        # constant and the zero-variance convention applies
        rows = compare(
            self._report([0.125, 0.25, 0.5, 0.625]),
            self._report([0.25, 0.375, 0.625, 0.75]),
        )
        assert all(row["significant"] for row in rows)
        assert all(row["p_value"] == 0.0 for row in rows)
        assert rows[0]["mean_diff"] == pytest.approx(-0.125)

    def test_noise_matches_reference_oracle_decisions(self):
        rng = random.Random(3)
        for _ in range(10):
            a = [rng.random() for _ in range(12)]
            b = [rng.random() for _ in range(12)]
            rows = compare(self._report(a), self._report(b))
            expected_p = scipy_stats.ttest_rel(a, b).pvalue
            for row in rows:
                assert row["p_value"] == pytest.approx(expected_p, abs=1e-9)
                assert row["significant"] == (expected_p < 0.01)

    def test_different_example_sets_rejected(self):
        with pytest.raises(LengthMismatch):
            compare(self._report([0.1, 0.2]), self._report([0.1, 0.2, 0.3]))


class TestConfigLoading:
    def test_toml_round_trip(self, tmp_path, perfect_dataset_path):
        config_path = tmp_path / "exp.toml"
        config_path.write_text(
            f"""
[run]
output_dir = "{tmp_path / 'out'}"
split = "test"
top_k = "oracle"
seed = 11

[dataset]
path = "{perfect_dataset_path}"

[summarizer]
endpoint = "builtin:lead"
max_input_tokens = 512

[[perturbation]]
kind = "deletion"
selection = "oracle"
fractions = [0.0, 0.5]
""",
            encoding="utf-8",
        )
        config = load_config(config_path)
        assert config.seed == 11
        assert config.max_input_tokens == 512
        assert config.perturbations == [
            PerturbationGrid(kind="deletion", selection="oracle", fractions=(0.0, 0.5))
        ]

    def test_json_config_with_overrides(self, tmp_path, perfect_dataset_path):
        config_path = tmp_path / "exp.json"
        config_path.write_text(
            json.dumps(
                {
                    "run": {"output_dir": str(tmp_path / "out"), "seed": 1},
                    "dataset": {"path": str(perfect_dataset_path)},
                }
            ),
            encoding="utf-8",
        )
        config = load_config(config_path, {"run.seed": "99", "summarizer.max_words": "16"})
        assert config.seed == 99
        assert config.max_words == 16

    def test_invalid_fraction_rejected(self, tmp_path, perfect_dataset_path):
        with pytest.raises(ValidationError):
            PerturbationGrid(kind="deletion", selection="random", fractions=(1.5,))

    def test_env_var_overrides_endpoint(self, tmp_path, perfect_dataset_path, monkeypatch):
        config = _config(tmp_path, perfect_dataset_path, tmp_path / "out")
        monkeypatch.setenv("RTSUM_SUMMARIZER_ENDPOINT", "http://example.test:1234")
        assert config.summarizer_spec().endpoint == "http://example.test:1234"

    def test_load_result_round_trip(self, tmp_path, perfect_dataset_path):
        config = _config(tmp_path, perfect_dataset_path, tmp_path / "out")
        result = run_baseline(config)
        loaded = load_result(result.records_path)
        assert loaded.report.aggregate == result.report.aggregate
        assert loaded.scores_by_example() == result.scores_by_example()
