"""Core game model: scenes, structured questions, answer semantics, episodes.

A scene is a synthetic stand-in for an annotated image: a handful of objects,
each with a category, a color, a size, and a grid cell, plus one secret goal
object. The question-player interrogates the answer-player with questions
drawn from a finite predicate space ("Is the object red?"); the answer-player
replies yes, no, or n/a. Whether the answer-player is cooperative (CP) or
non-cooperative (NC) is fixed when the episode starts and is what the
question-player must ultimately detect, alongside guessing the goal object.

Episodes here are fixed length: exactly ``max_rounds`` question/answer rounds,
then the object guess and the cooperation guess are made simultaneously, with
no feedback from one guess to the other.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Protocol, Sequence

import numpy as np

from .errors import ConfigError, ProtocolViolationError

CATEGORY_NAMES = (
    "ball", "book", "box", "chair", "cup", "lamp", "plant", "table",
    "shoe", "clock", "vase", "bottle",
)
COLOR_NAMES = ("red", "blue", "green", "yellow", "black", "white", "orange", "purple")
SIZE_NAMES = ("small", "medium", "large")


class Attribute(str, Enum):
    CATEGORY = "category"
    COLOR = "color"
    SIZE = "size"
    ROW = "row"
    COL = "col"


class Answer(str, Enum):
    YES = "yes"
    NO = "no"
    NA = "na"


class CoopLabel(str, Enum):
    CP = "CP"
    NC = "NC"


@dataclass(frozen=True)
class SceneConfig:
    """Vocabulary sizes and geometry for generated scenes.

    ``n_objects`` is the number of objects per scene, ``grid_dim`` the side of
    the square cell grid. Category and color vocabularies are prefixes of the
    fixed name lists above, extended with synthetic names when larger.
    """

    n_objects: int = 4
    grid_dim: int = 3
    n_categories: int = 8
    n_colors: int = 6

    def __post_init__(self) -> None:
        if self.n_objects < 2:
            raise ConfigError(f"n_objects must be >= 2, got {self.n_objects}")
        if self.grid_dim < 2:
            raise ConfigError(f"grid_dim must be >= 2, got {self.grid_dim}")
        if self.n_categories < 2 or self.n_colors < 2:
            raise ConfigError("category and color vocabularies must have >= 2 values")

    @property
    def categories(self) -> tuple[str, ...]:
        return _extend_names(CATEGORY_NAMES, self.n_categories, "category")

    @property
    def colors(self) -> tuple[str, ...]:
        return _extend_names(COLOR_NAMES, self.n_colors, "color")

    @property
    def sizes(self) -> tuple[str, ...]:
        return SIZE_NAMES

    def vocabulary(self, attribute: Attribute) -> tuple:
        if attribute is Attribute.CATEGORY:
            return self.categories
        if attribute is Attribute.COLOR:
            return self.colors
        if attribute is Attribute.SIZE:
            return self.sizes
        return tuple(range(self.grid_dim))

    def to_json(self) -> dict:
        return {
            "n_objects": self.n_objects,
            "grid_dim": self.grid_dim,
            "n_categories": self.n_categories,
            "n_colors": self.n_colors,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SceneConfig":
        return cls(
            n_objects=int(data["n_objects"]),
            grid_dim=int(data["grid_dim"]),
            n_categories=int(data["n_categories"]),
            n_colors=int(data["n_colors"]),
        )


def _extend_names(base: tuple[str, ...], n: int, prefix: str) -> tuple[str, ...]:
    if n <= len(base):
        return base[:n]
    extra = tuple(f"{prefix}{i}" for i in range(len(base), n))
    return base + extra


@dataclass(frozen=True)
class ObjectSpec:
    """One object in a scene."""

    id: int
    category: str
    color: str
    size: str
    cell: tuple[int, int]

    def value_of(self, attribute: Attribute):
        if attribute is Attribute.CATEGORY:
            return self.category
        if attribute is Attribute.COLOR:
            return self.color
        if attribute is Attribute.SIZE:
            return self.size
        if attribute is Attribute.ROW:
            return self.cell[0]
        return self.cell[1]

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "category": self.category,
            "color": self.color,
            "size": self.size,
            "cell": list(self.cell),
        }

    @classmethod
    def from_json(cls, data: dict) -> "ObjectSpec":
        return cls(
            id=int(data["id"]),
            category=str(data["category"]),
            color=str(data["color"]),
            size=str(data["size"]),
            cell=(int(data["cell"][0]), int(data["cell"][1])),
        )


@dataclass(frozen=True)
class Scene:
    """A set of objects plus the index of the secret goal object."""

    objects: tuple[ObjectSpec, ...]
    goal: int
    config: SceneConfig

    def __post_init__(self) -> None:
        if len(self.objects) < 2:
            raise ConfigError("a scene needs at least 2 objects")
        if not 0 <= self.goal < len(self.objects):
            raise ConfigError(f"goal index {self.goal} out of range")
        ids = [o.id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate object ids in scene")
        for obj in self.objects:
            if obj.category not in self.config.categories:
                raise ConfigError(f"object {obj.id}: category {obj.category!r} not in vocabulary")
            if obj.color not in self.config.colors:
                raise ConfigError(f"object {obj.id}: color {obj.color!r} not in vocabulary")
            if obj.size not in self.config.sizes:
                raise ConfigError(f"object {obj.id}: size {obj.size!r} not in vocabulary")
            r, c = obj.cell
            if not (0 <= r < self.config.grid_dim and 0 <= c < self.config.grid_dim):
                raise ConfigError(f"object {obj.id}: cell {obj.cell} outside grid")

    @property
    def n_objects(self) -> int:
        return len(self.objects)

    @property
    def goal_object(self) -> ObjectSpec:
        return self.objects[self.goal]

    def to_json(self) -> dict:
        return {
            "objects": [o.to_json() for o in self.objects],
            "goal": self.goal,
            "config": self.config.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "Scene":
        return cls(
            objects=tuple(ObjectSpec.from_json(o) for o in data["objects"]),
            goal=int(data["goal"]),
            config=SceneConfig.from_json(data["config"]),
        )


@dataclass(frozen=True)
class Question:
    """One predicate question. ``value`` may be out of vocabulary; such
    questions are representable and elicit an n/a answer."""

    attribute: Attribute
    value: object

    def to_json(self) -> dict:
        return {"attribute": self.attribute.value, "value": self.value}

    @classmethod
    def from_json(cls, data: dict) -> "Question":
        attr = Attribute(data["attribute"])
        value = data["value"]
        if attr in (Attribute.ROW, Attribute.COL) and isinstance(value, (int, float)):
            value = int(value)
        return cls(attribute=attr, value=value)


@dataclass(frozen=True)
class DialogueTurn:
    question: Question
    answer: Answer
    round: int

    def to_json(self) -> dict:
        return {
            "question": self.question.to_json(),
            "answer": self.answer.value,
            "round": self.round,
        }

    @classmethod
    def from_json(cls, data: dict) -> "DialogueTurn":
        return cls(
            question=Question.from_json(data["question"]),
            answer=Answer(data["answer"]),
            round=int(data["round"]),
        )


@dataclass(frozen=True)
class GameRecord:
    """One complete episode; the unit of corpora and logs."""

    scene: Scene
    turns: tuple[DialogueTurn, ...]
    coop_label: CoopLabel
    strategy_tag: str
    object_guess: int | None
    coop_guess: CoopLabel | None
    seed: int

    def __post_init__(self) -> None:
        rounds = [t.round for t in self.turns]
        if any(b <= a for a, b in zip(rounds, rounds[1:])):
            raise ConfigError("dialogue rounds must be strictly increasing")

    def to_json(self) -> dict:
        return {
            "scene": self.scene.to_json(),
            "turns": [t.to_json() for t in self.turns],
            "coop_label": self.coop_label.value,
            "strategy_tag": self.strategy_tag,
            "object_guess": self.object_guess,
            "coop_guess": None if self.coop_guess is None else self.coop_guess.value,
            "seed": self.seed,
        }

    def to_jsonl(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, data: dict) -> "GameRecord":
        return cls(
            scene=Scene.from_json(data["scene"]),
            turns=tuple(DialogueTurn.from_json(t) for t in data["turns"]),
            coop_label=CoopLabel(data["coop_label"]),
            strategy_tag=str(data["strategy_tag"]),
            object_guess=None if data["object_guess"] is None else int(data["object_guess"]),
            coop_guess=None if data["coop_guess"] is None else CoopLabel(data["coop_guess"]),
            seed=int(data["seed"]),
        )


def generate_scene(config: SceneConfig, rng: np.random.Generator) -> Scene:
    """Sample a scene: attributes independent and uniform, goal uniform.

    Duplicate attribute profiles between objects are allowed; ambiguous
    scenes are a real feature of the game.
    """
    objects = []
    for i in range(config.n_objects):
        objects.append(
            ObjectSpec(
                id=i,
                category=config.categories[int(rng.integers(config.n_categories))],
                color=config.colors[int(rng.integers(config.n_colors))],
                size=SIZE_NAMES[int(rng.integers(len(SIZE_NAMES)))],
                cell=(int(rng.integers(config.grid_dim)), int(rng.integers(config.grid_dim))),
            )
        )
    goal = int(rng.integers(config.n_objects))
    return Scene(objects=tuple(objects), goal=goal, config=config)


def question_space(config: SceneConfig) -> tuple[Question, ...]:
    """The full finite question space for a scene configuration, in a fixed
    enumeration order (category, color, size, row, col)."""
    questions: list[Question] = []
    for value in config.categories:
        questions.append(Question(Attribute.CATEGORY, value))
    for value in config.colors:
        questions.append(Question(Attribute.COLOR, value))
    for value in SIZE_NAMES:
        questions.append(Question(Attribute.SIZE, value))
    for r in range(config.grid_dim):
        questions.append(Question(Attribute.ROW, r))
    for c in range(config.grid_dim):
        questions.append(Question(Attribute.COL, c))
    return tuple(questions)


def truth_answer(scene: Scene, target: int, question: Question) -> Answer:
    """Ground-truth answer about ``target``: YES iff the attribute matches,
    NO for any other in-vocabulary value, NA iff the value is out of
    vocabulary."""
    if not 0 <= target < scene.n_objects:
        raise ConfigError(f"target index {target} out of range")
    vocab = scene.config.vocabulary(question.attribute)
    if question.value not in vocab:
        return Answer.NA
    actual = scene.objects[target].value_of(question.attribute)
    return Answer.YES if actual == question.value else Answer.NO


def truth_table_yes(scene: Scene, space: Sequence[Question]) -> np.ndarray:
    """(n_objects, n_questions) float matrix; 1.0 where the truthful answer
    about that object is YES. Out-of-vocabulary questions get 0 everywhere
    (they are never YES for any object)."""
    table = np.zeros((scene.n_objects, len(space)))
    for j, q in enumerate(space):
        for i in range(scene.n_objects):
            if truth_answer(scene, i, q) is Answer.YES:
                table[i, j] = 1.0
    return table


def render_question(question: Question) -> str:
    """Deterministic English template, injective over the question space."""
    attr, value = question.attribute, question.value
    if attr is Attribute.CATEGORY:
        return f"Is the object a {value}?"
    if attr is Attribute.COLOR:
        return f"Is the object {value}?"
    if attr is Attribute.SIZE:
        return f"Is the object {value}-sized?"
    if attr is Attribute.ROW:
        return f"Is the object in row {value}?"
    return f"Is the object in column {value}?"


class AnswererProtocol(Protocol):
    """Episode-bound answer-player: a cooperation label, a tag for logs,
    and a response function."""

    label: CoopLabel
    tag: str

    def respond(
        self,
        scene: Scene,
        history: Sequence[DialogueTurn],
        question: Question,
        rng: np.random.Generator,
    ) -> Answer: ...


class QuestionerProtocol(Protocol):
    """Question-player session interface used by :func:`run_episode`."""

    def begin(self, scene: Scene) -> object: ...

    def next_question(self, session: object, round_no: int, rng: np.random.Generator) -> Question: ...

    def observe(self, session: object, question: Question, answer: Answer) -> None: ...

    def guesses(self, session: object) -> tuple[int, CoopLabel]: ...


def run_episode(
    qagent: QuestionerProtocol,
    answerer: AnswererProtocol,
    scene: Scene,
    max_rounds: int,
    rng: np.random.Generator,
    seed: int = 0,
) -> GameRecord:
    """Play one fixed-length episode and return its record.

    Exactly ``max_rounds`` rounds are played; the object guess and the
    cooperation guess are then produced together, with neither informing the
    other. The input scene is never mutated (scenes are frozen).
    """
    if max_rounds < 1:
        raise ConfigError(f"max_rounds must be >= 1, got {max_rounds}")
    session = qagent.begin(scene)
    turns: list[DialogueTurn] = []
    for round_no in range(1, max_rounds + 1):
        question = qagent.next_question(session, round_no, rng)
        if not isinstance(question, Question):
            raise ProtocolViolationError("question-player", round_no, f"returned {question!r}")
        answer = answerer.respond(scene, tuple(turns), question, rng)
        if not isinstance(answer, Answer):
            raise ProtocolViolationError("answer-player", round_no, f"returned {answer!r}")
        turns.append(DialogueTurn(question=question, answer=answer, round=round_no))
        qagent.observe(session, question, answer)
    object_guess, coop_guess = qagent.guesses(session)
    return GameRecord(
        scene=scene,
        turns=tuple(turns),
        coop_label=answerer.label,
        strategy_tag=answerer.tag,
        object_guess=int(object_guess),
        coop_guess=coop_guess,
        seed=seed,
    )
