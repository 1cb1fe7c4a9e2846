"""Game-log IO, spam detection, corpus statistics, external ingestion."""

from __future__ import annotations

import json

import numpy as np
import pytest

from guesslab.corpus import (
    compute_corpus_stats,
    detect_spam,
    ingest_external_corpus,
    make_synthetic_fixture,
    read_records,
    stats_from_external,
    stats_from_records,
    write_records,
)
from guesslab.errors import DataError, ParseError, SchemaError
from guesslab.game import Answer, DialogueTurn, Question, Attribute


def turns_of(*answers):
    return [
        DialogueTurn(Question(Attribute.COLOR, "red"), a, i + 1)
        for i, a in enumerate(answers)
    ]


class TestDetectSpam:
    def test_all_identical_true(self):
        assert detect_spam(turns_of(Answer.NO, Answer.NO, Answer.NO))

    def test_mixed_false(self):
        assert not detect_spam(turns_of(Answer.NO, Answer.YES, Answer.NO))

    def test_single_turn_vacuously_spam(self):
        assert detect_spam(turns_of(Answer.YES))

    def test_zero_turns_rejected(self):
        with pytest.raises(DataError):
            detect_spam([])


class TestFixture:
    def test_spam_fraction_exact(self):
        records, truth = make_synthetic_fixture(n_games=100, n_spam=20, seed=2024)
        stats = stats_from_records(records)
        assert stats.spam_fraction == pytest.approx(0.20, abs=0)
        assert stats.n_games == 100

    def test_answer_distribution_matches_construction(self):
        records, truth = make_synthetic_fixture(n_games=60, n_spam=10, seed=7)
        stats = stats_from_records(records)
        total = sum(truth.answer_counts.values())
        for key in ("yes", "no", "na"):
            assert stats.answer_dist[key] == pytest.approx(
                truth.answer_counts.get(key, 0) / total, abs=0
            )

    def test_question_histogram_matches_construction(self):
        records, truth = make_synthetic_fixture(n_games=30, n_spam=5, seed=3)
        stats = stats_from_records(records)
        assert stats.question_count_histogram == truth.question_histogram

    def test_deterministic(self):
        r1, _ = make_synthetic_fixture(n_games=20, n_spam=4, seed=5)
        r2, _ = make_synthetic_fixture(n_games=20, n_spam=4, seed=5)
        assert [a.to_jsonl() for a in r1] == [b.to_jsonl() for b in r2]


class TestJsonlRoundTrip:
    def test_write_then_read_identical(self, tmp_path):
        records, _ = make_synthetic_fixture(n_games=25, n_spam=5, seed=11)
        path = tmp_path / "games.jsonl"
        assert write_records(path, records) == 25
        back = read_records(path)
        assert [r.to_jsonl() for r in back] == [r.to_jsonl() for r in records]

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        with pytest.raises(ParseError):
            read_records(path)

    def test_parse_error_carries_line_number(self, tmp_path):
        records, _ = make_synthetic_fixture(n_games=3, n_spam=1, seed=1)
        path = tmp_path / "bad.jsonl"
        lines = [r.to_jsonl() for r in records]
        lines.insert(2, "{not json")
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ParseError) as err:
            read_records(path)
        assert err.value.line_no == 3

    def test_missing_field_rejected(self, tmp_path):
        records, _ = make_synthetic_fixture(n_games=2, n_spam=0, seed=1)
        data = records[0].to_json()
        del data["strategy_tag"]
        path = tmp_path / "short.jsonl"
        path.write_text(json.dumps(data) + "\n")
        with pytest.raises(ParseError):
            read_records(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            read_records(tmp_path / "nope.jsonl")


class TestStats:
    def test_spam_fraction_equals_mean_detect_spam(self):
        records, _ = make_synthetic_fixture(n_games=40, n_spam=13, seed=17)
        stats = stats_from_records(records)
        manual = sum(detect_spam(r) for r in records) / len(records)
        assert stats.spam_fraction == pytest.approx(manual, abs=0)

    def test_answer_dist_sums_to_one(self):
        records, _ = make_synthetic_fixture(n_games=30, n_spam=6, seed=23)
        stats = stats_from_records(records)
        assert sum(stats.answer_dist.values()) == pytest.approx(1.0, abs=1e-9)

    def test_object_success_rate(self):
        records, _ = make_synthetic_fixture(n_games=50, n_spam=10, seed=29)
        stats = stats_from_records(records)
        manual = sum(r.object_guess == r.scene.goal for r in records) / len(records)
        assert stats.object_success_rate == pytest.approx(manual, abs=0)

    def test_compute_corpus_stats_from_disk(self, tmp_path):
        records, _ = make_synthetic_fixture(n_games=20, n_spam=5, seed=31)
        path = tmp_path / "games.jsonl"
        write_records(path, records)
        stats = compute_corpus_stats(path)
        assert stats.n_games == 20
        assert stats.n_unique_words is None  # structured logs have no NL text


EXTERNAL_GAME_1 = {
    "id": 101,
    "object_id": 55,
    "status": "failure",
    "qas": [
        {"question": "Is it the orange?", "answer": "Yes"},
        {"question": "Is it on the table?", "answer": "No"},
    ],
}
EXTERNAL_GAME_2 = {
    "id": 102,
    "object_id": 60,
    "status": "success",
    "qas": [
        {"question": "Is it a cup?", "answer": "N/A"},
    ],
}


class TestExternalCorpus:
    def write(self, tmp_path, games):
        path = tmp_path / "external.jsonl"
        path.write_text("\n".join(json.dumps(g) for g in games) + "\n")
        return path

    def test_two_game_round_trip(self, tmp_path):
        path = self.write(tmp_path, [EXTERNAL_GAME_1, EXTERNAL_GAME_2])
        games = ingest_external_corpus(path)
        assert len(games) == 2
        assert games[0].answers == ("yes", "no")
        assert games[1].answers == ("na",)
        assert games[0].questions[0] == "Is it the orange?"

    def test_missing_status_schema_error(self, tmp_path):
        broken = {k: v for k, v in EXTERNAL_GAME_1.items() if k != "status"}
        path = self.write(tmp_path, [broken])
        with pytest.raises(SchemaError) as err:
            ingest_external_corpus(path)
        assert "101" in str(err.value)

    def test_game_count_matches_line_count(self, tmp_path):
        games = []
        for i in range(17):
            g = dict(EXTERNAL_GAME_1)
            g["id"] = i
            games.append(g)
        path = self.write(tmp_path, games)
        n_lines = sum(1 for line in path.read_text().splitlines() if line.strip())
        assert len(ingest_external_corpus(path)) == n_lines

    def test_stats_include_word_counts(self, tmp_path):
        path = self.write(tmp_path, [EXTERNAL_GAME_1, EXTERNAL_GAME_2])
        stats = compute_corpus_stats(path, fmt="guesswhat-json")
        assert stats.n_games == 2
        assert stats.n_unique_words is not None and stats.n_unique_words > 0
        assert stats.object_success_rate == pytest.approx(0.5)
        assert stats.answer_dist["yes"] == pytest.approx(1 / 3)

    def test_spam_detection_on_external(self, tmp_path):
        spammy = {
            "id": 9,
            "object_id": 1,
            "status": "failure",
            "qas": [
                {"question": "q1?", "answer": "no"},
                {"question": "q2?", "answer": "no"},
            ],
        }
        path = self.write(tmp_path, [spammy, EXTERNAL_GAME_1])
        stats = stats_from_external(ingest_external_corpus(path))
        assert stats.spam_fraction == pytest.approx(0.5)

    def test_unknown_format(self, tmp_path):
        path = self.write(tmp_path, [EXTERNAL_GAME_1])
        with pytest.raises(SchemaError):
            ingest_external_corpus(path, fmt="mystery")
