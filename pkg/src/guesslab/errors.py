"""Exception hierarchy shared by all guesslab modules.

Two broad families matter for the CLI: configuration problems (bad flags,
bad model shapes, violated preconditions) exit with code 2, data problems
(unreadable or malformed corpora) exit with code 3.
"""

from __future__ import annotations


class GuessLabError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(GuessLabError):
    """Invalid configuration value or violated call precondition."""


class ModelShapeError(ConfigError):
    """Parameter vector does not match the expected feature dimension."""


class ConfigMismatchError(ConfigError):
    """A record does not fit the configured feature layout."""


class PreconditionError(ConfigError):
    """A documented precondition of a theory operation does not hold."""


class InfeasibleError(ConfigError):
    """Exhaustive computation refused: the instance is too large."""


class ProtocolViolationError(GuessLabError):
    """A player produced malformed output during an episode."""

    def __init__(self, party: str, round_no: int, detail: str) -> None:
        super().__init__(f"{party} violated the game protocol in round {round_no}: {detail}")
        self.party = party
        self.round_no = round_no


class TrainingAbortedError(GuessLabError):
    """Training stopped because parameters or gradients became non-finite."""

    def __init__(self, episode: int, seed: int, param_norm: float) -> None:
        super().__init__(
            f"non-finite values during training at episode {episode} "
            f"(seed {seed}, parameter norm {param_norm!r})"
        )
        self.episode = episode
        self.seed = seed
        self.param_norm = param_norm


class DataError(GuessLabError):
    """Unreadable, malformed, or schema-violating input data."""


class ParseError(DataError):
    """A corpus line failed to parse; carries the 1-based line number."""

    def __init__(self, line_no: int, detail: str) -> None:
        super().__init__(f"line {line_no}: {detail}")
        self.line_no = line_no


class SchemaError(DataError):
    """An external corpus entry is missing required fields."""


class InsufficientDataError(DataError):
    """Not enough data to fit a model."""


class UndefinedConditionalError(GuessLabError):
    """A conditional error rate was requested on an empty label subset."""


class DomainError(GuessLabError):
    """A sample point lies outside a finite hypothesis class's domain."""
