import json

import pytest

from rtsum.corpus import (
    Dataset,
    TokenizerConfig,
    build_index,
    load_dataset,
    load_index,
    save_dataset,
    save_index,
)
from rtsum.errors import ParseError, ValidationError
from rtsum.text import tokenize

from conftest import make_dataset, record, write_jsonl


class TestLoadDataset:
    def test_counts_and_stats(self, tmp_path):
        dataset = make_dataset(
            tmp_path,
            [
                record("ex0", ["a b", "c d", "e f"]),
                record("ex1", ["g h", "i j", "k l"]),
            ],
        )
        assert dataset.stats.total_docs == 6
        assert dataset.stats.max_docs == 3
        assert dataset.stats.mean_docs == 3.0

    def test_empty_reference_rejected_with_example_id(self, tmp_path):
        with pytest.raises(ValidationError) as excinfo:
            make_dataset(
                tmp_path,
                [record("ex0", ["a"]), record("bad-ex", ["b"], reference="  ")],
            )
        assert "bad-ex" in str(excinfo.value)

    def test_malformed_line_reports_line_number(self, tmp_path):
        path = tmp_path / "broken.jsonl"
        path.write_text(json.dumps(record("ex0", ["a"])) + "\n{not json\n", encoding="utf-8")
        with pytest.raises(ParseError) as excinfo:
            load_dataset(path)
        assert excinfo.value.line_number == 2

    def test_missing_field_is_a_parse_error(self, tmp_path):
        path = tmp_path / "broken.jsonl"
        path.write_text('{"example_id": "ex0", "split": "test"}\n', encoding="utf-8")
        with pytest.raises(ParseError):
            load_dataset(path)

    def test_duplicate_example_id_rejected(self, tmp_path):
        with pytest.raises(ValidationError):
            make_dataset(tmp_path, [record("ex0", ["a"]), record("ex0", ["b"])])

    def test_empty_document_rejected(self, tmp_path):
        with pytest.raises(ValidationError):
            make_dataset(tmp_path, [record("ex0", ["a", "   "])])

    def test_unknown_split_rejected(self, tmp_path):
        with pytest.raises(ValidationError):
            make_dataset(tmp_path, [record("ex0", ["a"], split="dev")])

    def test_unknown_format_rejected(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_jsonl(path, [record("ex0", ["a"])])
        with pytest.raises(ParseError):
            load_dataset(path, format="parquet")

    def test_max_input_docs_caps_at_load(self, tmp_path):
        dataset = make_dataset(
            tmp_path, [record("ex0", ["a", "b", "c", "d"])], max_input_docs=2
        )
        assert [d.text for d in dataset.examples[0].input_docs] == ["a", "b"]

    def test_additional_input_roundtrip(self, tmp_path):
        dataset = make_dataset(
            tmp_path, [record("ex0", ["a"], additional="background text")]
        )
        assert dataset.examples[0].additional_input == "background text"

    def test_doc_ids_unique_and_ordered(self, tmp_path):
        dataset = make_dataset(tmp_path, [record("ex0", ["a", "b", "c"])])
        ids = [d.doc_id for d in dataset.examples[0].input_docs]
        assert len(set(ids)) == 3
        assert ids == sorted(ids)


class TestRoundTrip:
    def test_save_then_load_is_identical(self, tmp_path):
        dataset = make_dataset(
            tmp_path,
            [
                record("ex0", ["a b", "c d"], reference="r one", split="train"),
                record("ex1", ["e f"], reference="r two", additional="bg"),
            ],
        )
        out = tmp_path / "roundtrip.jsonl"
        save_dataset(dataset, out)
        reloaded = load_dataset(out, name=dataset.name)
        assert reloaded == dataset

    def test_docs_retrievable_from_index_by_id(self, tmp_path):
        dataset = make_dataset(
            tmp_path, [record("ex0", ["alpha beta", "gamma"]), record("ex1", ["delta"])]
        )
        index = build_index(dataset)
        for example in dataset.examples:
            for doc in example.input_docs:
                assert index.documents[doc.doc_id].text == doc.text


class TestBuildIndex:
    def test_covers_all_docs_and_avg_len(self, tmp_path):
        dataset = make_dataset(
            tmp_path,
            [
                record("ex0", ["a b c", "d e", "f"], split="train"),
                record("ex1", ["g h i j"], split="validation"),
                record("ex2", ["k l", "m"], split="test"),
            ],
        )
        index = build_index(dataset)
        assert len(index) == dataset.stats.total_docs == 6
        lengths = [3, 2, 1, 4, 2, 1]
        assert index.avg_doc_len == sum(lengths) / len(lengths)

    def test_identical_texts_keep_distinct_ids(self, tmp_path):
        dataset = make_dataset(
            tmp_path, [record("ex0", ["same text"]), record("ex1", ["same text"])]
        )
        index = build_index(dataset)
        assert len(index) == 2

    def test_df_matches_brute_force_scan(self, tmp_path):
        docs = ["the cat sat", "the dog ran fast", "a cat and a dog"]
        dataset = make_dataset(tmp_path, [record("ex0", docs)])
        index = build_index(dataset)

        # Brute force: recount document frequency by scanning every document.
        vocabulary = set()
        for doc in docs:
            vocabulary.update(tokenize(doc))
        for term in vocabulary:
            expected = sum(1 for doc in docs if term in tokenize(doc))
            assert index.document_frequency(term) == expected
        assert set(index.term_stats) == vocabulary

    def test_provenance(self, tmp_path):
        dataset = make_dataset(tmp_path, [record("ex0", ["a"], split="train")])
        index = build_index(dataset)
        doc_id = dataset.examples[0].input_docs[0].doc_id
        assert index.provenance(doc_id) == ("ex0", "train")

    def test_unknown_tokenizer_scheme_rejected(self, tmp_path):
        dataset = make_dataset(tmp_path, [record("ex0", ["a"])])
        with pytest.raises(ValidationError):
            build_index(dataset, TokenizerConfig(scheme="bert-wordpiece"))


class TestIndexPersistence:
    def test_save_is_byte_deterministic(self, tmp_path):
        dataset = make_dataset(
            tmp_path, [record("ex0", ["a b c", "b c d"]), record("ex1", ["c d e"])]
        )
        first = tmp_path / "index1.json"
        second = tmp_path / "index2.json"
        save_index(build_index(dataset), first)
        save_index(build_index(dataset), second)
        assert first.read_bytes() == second.read_bytes()

    def test_load_round_trip(self, tmp_path):
        dataset = make_dataset(tmp_path, [record("ex0", ["a b", "b c"])])
        index = build_index(dataset)
        path = tmp_path / "index.json"
        save_index(index, path)
        loaded = load_index(path)
        assert loaded.documents.keys() == index.documents.keys()
        assert loaded.postings == index.postings
        assert loaded.doc_lengths == index.doc_lengths
        assert loaded.avg_doc_len == pytest.approx(index.avg_doc_len)

    def test_version_checked_on_load(self, tmp_path):
        dataset = make_dataset(tmp_path, [record("ex0", ["a"])])
        path = tmp_path / "index.json"
        save_index(build_index(dataset), path)
        payload = json.loads(path.read_text())
        payload["format_version"] = 99
        path.write_text(json.dumps(payload))
        with pytest.raises(ParseError):
            load_index(path)


class TestDatasetObject:
    def test_split_mean(self, tmp_path):
        dataset = make_dataset(
            tmp_path,
            [
                record("ex0", ["a", "b"], split="train"),
                record("ex1", ["c", "d", "e", "f"], split="train"),
                record("ex2", ["g"], split="test"),
            ],
        )
        assert dataset.split_mean_docs("train") == 3.0
        assert dataset.split_mean_docs("test") == 1.0
        with pytest.raises(ValidationError):
            dataset.split_mean_docs("validation")

    def test_stats_invariant(self, tmp_path):
        dataset = make_dataset(
            tmp_path, [record("ex0", ["a"]), record("ex1", ["b", "c", "d"])]
        )
        stats = dataset.stats
        assert stats.max_docs >= stats.mean_docs >= 1
        assert stats.total_docs == 4

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValidationError):
            Dataset("empty", [])
