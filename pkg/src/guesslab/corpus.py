"""Game-log persistence and corpus statistics.

One corpus format everywhere: a game is one JSON object per line with fields
``scene``, ``turns``, ``coop_label``, ``strategy_tag``, ``object_guess``,
``coop_guess``, ``seed``. Externally collected corpora (the public
guessing-game JSON format) can be ingested for statistics only; no scene
reconstruction is attempted for them.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DataError, ParseError, SchemaError
from .game import (
    Answer,
    GameRecord,
    Scene,
    SceneConfig,
    generate_scene,
    render_question,
    run_episode,
)

REQUIRED_FIELDS = ("scene", "turns", "coop_label", "strategy_tag", "object_guess", "coop_guess", "seed")


def write_records(path, records: Iterable[GameRecord]) -> int:
    """Write records as JSONL; returns the number written."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec.to_jsonl())
            fh.write("\n")
            n += 1
    return n


def read_records(path) -> list[GameRecord]:
    """Read a JSONL game log; parse failures carry the offending line number."""
    records = []
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such corpus file: {path}")
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, f"invalid JSON: {exc.msg}") from exc
            missing = [f for f in REQUIRED_FIELDS if f not in data]
            if missing:
                raise ParseError(line_no, f"missing fields: {', '.join(missing)}")
            try:
                records.append(GameRecord.from_json(data))
            except (KeyError, ValueError, TypeError, ConfigError) as exc:
                raise ParseError(line_no, f"bad record: {exc}") from exc
    if not records:
        raise ParseError(1, "corpus file contains no games")
    return records


def detect_spam(turns_or_record) -> bool:
    """True iff every answer in the dialogue is identical. A single-answer
    dialogue is vacuously spam; zero turns is a malformed record."""
    turns = getattr(turns_or_record, "turns", turns_or_record)
    answers = [t.answer if hasattr(t, "answer") else Answer(t) for t in turns]
    if not answers:
        raise DataError("cannot classify a dialogue with zero turns")
    return all(a == answers[0] for a in answers)


@dataclass
class CorpusStats:
    n_games: int
    n_unique_scenes: int
    n_unique_goal_objects: int
    n_unique_questions: int
    n_unique_words: int | None
    n_questions: int
    answer_dist: dict[str, float]
    question_count_histogram: dict[int, int]
    spam_fraction: float
    object_success_rate: float | None

    def __post_init__(self) -> None:
        total = sum(self.answer_dist.values())
        if abs(total - 1.0) > 1e-9:
            raise DataError(f"answer distribution sums to {total}, expected 1")
        if not 0.0 <= self.spam_fraction <= 1.0:
            raise DataError("spam fraction out of range")

    def to_json(self) -> dict:
        return {
            "n_games": self.n_games,
            "n_unique_scenes": self.n_unique_scenes,
            "n_unique_goal_objects": self.n_unique_goal_objects,
            "n_unique_questions": self.n_unique_questions,
            "n_unique_words": self.n_unique_words,
            "n_questions": self.n_questions,
            "answer_dist": self.answer_dist,
            "question_count_histogram": {str(k): v for k, v in sorted(self.question_count_histogram.items())},
            "spam_fraction": self.spam_fraction,
            "object_success_rate": self.object_success_rate,
        }


def stats_from_records(records: Sequence[GameRecord]) -> CorpusStats:
    if not records:
        raise DataError("no games to summarize")
    answer_counts = Counter()
    questions = Counter()
    scenes = set()
    goals = set()
    lengths = Counter()
    spam = 0
    success = 0
    for rec in records:
        scene_key = json.dumps(rec.scene.to_json(), sort_keys=True)
        scenes.add(scene_key)
        goal = rec.scene.goal_object
        goals.add((goal.category, goal.color, goal.size, goal.cell))
        lengths[len(rec.turns)] += 1
        for turn in rec.turns:
            answer_counts[turn.answer.value] += 1
            questions[render_question(turn.question)] += 1
        if detect_spam(rec):
            spam += 1
        if rec.object_guess is not None and rec.object_guess == rec.scene.goal:
            success += 1
    total_answers = sum(answer_counts.values())
    if total_answers == 0:
        raise DataError("corpus contains no dialogue turns")
    return CorpusStats(
        n_games=len(records),
        n_unique_scenes=len(scenes),
        n_unique_goal_objects=len(goals),
        n_unique_questions=len(questions),
        n_unique_words=None,
        n_questions=total_answers,
        answer_dist={a: answer_counts.get(a, 0) / total_answers for a in ("yes", "no", "na")},
        question_count_histogram=dict(lengths),
        spam_fraction=spam / len(records),
        object_success_rate=success / len(records),
    )


# --- external corpus ingestion --------------------------------------------------


@dataclass(frozen=True)
class ExternalGame:
    """Statistics-only view of an externally collected game."""

    game_id: object
    questions: tuple[str, ...]
    answers: tuple[str, ...]
    object_id: object
    status: str


_ANSWER_ALIASES = {
    "yes": "yes",
    "no": "no",
    "n/a": "na",
    "na": "na",
    "not applicable": "na",
}


def ingest_external_corpus(path, fmt: str = "guesswhat-json") -> list[ExternalGame]:
    """Read the public corpus format: one JSON game per line with ``id``,
    ``qas`` (question/answer pairs), ``object_id``, and ``status``."""
    if fmt != "guesswhat-json":
        raise SchemaError(f"unknown external format {fmt!r}")
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such corpus file: {path}")
    games = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, f"invalid JSON: {exc.msg}") from exc
            game_id = data.get("id", f"line-{line_no}")
            for fieldname in ("qas", "object_id", "status"):
                if fieldname not in data:
                    raise SchemaError(
                        f"game {game_id!r}: missing required field {fieldname!r}"
                    )
            questions, answers = [], []
            for qa in data["qas"]:
                if "question" not in qa or "answer" not in qa:
                    raise SchemaError(f"game {game_id!r}: malformed question/answer pair")
                questions.append(str(qa["question"]))
                raw = str(qa["answer"]).strip().lower()
                answers.append(_ANSWER_ALIASES.get(raw, "na"))
            games.append(
                ExternalGame(
                    game_id=game_id,
                    questions=tuple(questions),
                    answers=tuple(answers),
                    object_id=data["object_id"],
                    status=str(data["status"]),
                )
            )
    if not games:
        raise ParseError(1, "external corpus contains no games")
    return games


def _tokenize(text: str) -> list[str]:
    out, word = [], []
    for ch in text.lower():
        if ch.isalnum():
            word.append(ch)
        elif word:
            out.append("".join(word))
            word = []
    if word:
        out.append("".join(word))
    return out


def stats_from_external(games: Sequence[ExternalGame]) -> CorpusStats:
    """Statistics for an ingested external corpus. Word counts use
    whitespace/punctuation splitting and are approximate by nature."""
    if not games:
        raise DataError("no games to summarize")
    answer_counts = Counter()
    questions = Counter()
    words = set()
    objects = set()
    lengths = Counter()
    spam = 0
    success = 0
    for game in games:
        objects.add(game.object_id)
        lengths[len(game.questions)] += 1
        for q in game.questions:
            questions[q] += 1
            words.update(_tokenize(q))
        for a in game.answers:
            answer_counts[a] += 1
        if game.answers and all(a == game.answers[0] for a in game.answers):
            spam += 1
        if game.status == "success":
            success += 1
    total_answers = sum(answer_counts.values())
    if total_answers == 0:
        raise DataError("external corpus contains no dialogue turns")
    return CorpusStats(
        n_games=len(games),
        n_unique_scenes=len(objects),
        n_unique_goal_objects=len(objects),
        n_unique_questions=len(questions),
        n_unique_words=len(words),
        n_questions=total_answers,
        answer_dist={a: answer_counts.get(a, 0) / total_answers for a in ("yes", "no", "na")},
        question_count_histogram=dict(lengths),
        spam_fraction=spam / len(games),
        object_success_rate=success / len(games),
    )


def compute_corpus_stats(path, fmt: str = "jsonl") -> CorpusStats:
    """Statistics for a corpus on disk: ``jsonl`` for native game logs,
    ``guesswhat-json`` for the external corpus format."""
    if fmt == "jsonl":
        return stats_from_records(read_records(path))
    if fmt == "guesswhat-json":
        return stats_from_external(ingest_external_corpus(path, fmt))
    raise ConfigError(f"unknown corpus format {fmt!r}")


# --- synthetic fixture -----------------------------------------------------------


@dataclass(frozen=True)
class FixtureTruth:
    """Construction-time ground truth of the synthetic fixture, for exact
    verification of the statistics pipeline."""

    n_games: int
    n_spam: int
    answer_counts: dict[str, int]
    question_histogram: dict[int, int]


def make_synthetic_fixture(
    n_games: int = 100,
    n_spam: int = 20,
    seed: int = 2024,
    max_rounds: int = 5,
) -> tuple[list[GameRecord], FixtureTruth]:
    """Generate a deterministic corpus with a known composition: ``n_spam``
    all-NO spam games up front, cooperative games for the rest. The returned
    truth counts are accumulated during construction, independently of the
    statistics code."""
    from .agent import AgentConfig, QuestionAgent, SelectMode
    from .answerers import bind_episode, cooperative, spam

    if n_spam > n_games:
        raise ConfigError("n_spam cannot exceed n_games")
    rng = np.random.default_rng(seed)
    config = AgentConfig(scene=SceneConfig(), max_rounds=max_rounds)
    agent = QuestionAgent.fresh(config, mode=SelectMode.SAMPLE)
    records = []
    answer_counts = Counter()
    lengths = Counter()
    for i in range(n_games):
        is_spam_game = i < n_spam
        strategy = spam(Answer.NO) if is_spam_game else cooperative()
        while True:
            scene = generate_scene(config.scene, rng)
            bound = bind_episode(strategy, scene, rng)
            record = run_episode(agent, bound, scene, max_rounds, rng, seed=i)
            # Cooperative games must not look like spam by accident, or the
            # fixture's spam count would drift from its construction.
            if is_spam_game or len({t.answer for t in record.turns}) > 1:
                break
        records.append(record)
        lengths[len(record.turns)] += 1
        for turn in record.turns:
            answer_counts[turn.answer.value] += 1
    truth = FixtureTruth(
        n_games=n_games,
        n_spam=n_spam,
        answer_counts=dict(answer_counts),
        question_histogram=dict(lengths),
    )
    return records, truth
