"""HTTP play service: a human takes the answer-player seat.

Sessions are held in memory; every finished game is appended to a JSONL log
in the same schema the simulator writes, so human games and simulated games
form one corpus. The question-player runs a frozen checkpoint in greedy mode:
its next question is a deterministic function of the dialogue so far, which
makes sessions reproducible given a pinned scene seed.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from .agent import AgentSession, QuestionAgent, SelectMode
from .errors import ConfigError
from .game import (
    Answer,
    CoopLabel,
    DialogueTurn,
    GameRecord,
    Question,
    Scene,
    generate_scene,
    render_question,
)

import numpy as np

ROLES = ("DECEIVE", "COOPERATE")


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str) -> None:
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


@dataclass
class PlaySession:
    id: str
    agent: QuestionAgent
    checkpoint_id: str
    scene: Scene
    role: str
    seed: int
    max_rounds: int
    agent_state: AgentSession
    pending: Question
    round_no: int = 1
    transcript: list[DialogueTurn] = field(default_factory=list)
    finished: bool = False
    result: dict | None = None
    notes: str | None = None
    created_at: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def question_payload(self) -> dict:
        return {
            "round": self.round_no,
            "text": render_question(self.pending),
            "structured": self.pending.to_json(),
        }

    def snapshot(self) -> dict:
        return {
            "session_id": self.id,
            "checkpoint": self.checkpoint_id,
            "state": "finished" if self.finished else "awaiting_answer",
            "role": self.role,
            "round": self.round_no,
            "max_rounds": self.max_rounds,
            "scene": self.scene.to_json(),
            "goal": self.scene.goal,
            "pending_question": None if self.finished else self.question_payload(),
            "transcript": [t.to_json() for t in self.transcript],
            "result": self.result,
            "created_at": self.created_at,
        }


class PlayServer:
    """All mutable service state: the checkpoint registry, live sessions, and
    the finished-game log."""

    def __init__(
        self,
        checkpoints: dict[str, QuestionAgent],
        log_path: str | Path | None = None,
        max_rounds: int | None = None,
        server_seed: int = 0,
    ) -> None:
        if not checkpoints:
            raise ConfigError("the play service needs at least one checkpoint")
        self.checkpoints = {
            name: agent.with_params(mode=SelectMode.GREEDY)
            for name, agent in checkpoints.items()
        }
        for name, agent in self.checkpoints.items():
            if max_rounds is not None and max_rounds != agent.config.max_rounds:
                raise ConfigError(
                    f"checkpoint {name!r} was trained for {agent.config.max_rounds} rounds; "
                    f"cannot serve it at {max_rounds}"
                )
        self.log_path = Path(log_path) if log_path is not None else None
        self.sessions: dict[str, PlaySession] = {}
        self.finished_records: list[GameRecord] = []
        self._seed_rng = np.random.default_rng(server_seed)
        self._log_lock = threading.Lock()

    def create_session(self, body: dict) -> PlaySession:
        checkpoint_id = str(body.get("checkpoint", "default"))
        agent = self.checkpoints.get(checkpoint_id)
        if agent is None:
            raise ApiError(404, "unknown_checkpoint", f"no checkpoint named {checkpoint_id!r}")
        role = str(body.get("role", body.get("role_instructions", "DECEIVE"))).upper()
        if role not in ROLES:
            raise ApiError(400, "validation_error", f"role must be one of {ROLES}")
        if body.get("scene_config") is not None:
            # The checkpoint's feature layout is tied to its scene shape, so
            # a client-supplied config must match it exactly.
            from .game import SceneConfig

            try:
                requested = SceneConfig.from_json(dict(body["scene_config"]))
            except (ConfigError, KeyError, TypeError, ValueError):
                raise ApiError(400, "validation_error", "malformed scene_config") from None
            if requested != agent.config.scene:
                raise ApiError(
                    400,
                    "validation_error",
                    "scene_config must match the checkpoint's scene configuration "
                    f"{agent.config.scene.to_json()}",
                )
        if "scene_seed" in body and body["scene_seed"] is not None:
            try:
                seed = int(body["scene_seed"])
            except (TypeError, ValueError):
                raise ApiError(400, "validation_error", "scene_seed must be an integer") from None
        else:
            seed = int(self._seed_rng.integers(2**31))
        scene = generate_scene(agent.config.scene, np.random.default_rng(seed))
        state = agent.begin(scene)
        question_rng = np.random.default_rng(seed + 1)
        pending = agent.next_question(state, 1, question_rng)
        session = PlaySession(
            id=uuid.uuid4().hex,
            agent=agent,
            checkpoint_id=checkpoint_id,
            scene=scene,
            role=role,
            seed=seed,
            max_rounds=agent.config.max_rounds,
            agent_state=state,
            pending=pending,
        )
        self.sessions[session.id] = session
        return session

    def get_session(self, session_id: str) -> PlaySession:
        session = self.sessions.get(session_id)
        if session is None:
            raise ApiError(404, "unknown_session", f"no session {session_id!r}")
        return session

    def post_answer(self, session_id: str, body: dict) -> dict:
        session = self.get_session(session_id)
        if not session.lock.acquire(blocking=False):
            raise ApiError(409, "conflict", "another answer for this session is in flight")
        try:
            return self._apply_answer(session, body)
        finally:
            session.lock.release()

    def _apply_answer(self, session: PlaySession, body: dict) -> dict:
        if session.finished:
            raise ApiError(409, "conflict", "session is finished")
        raw = body.get("answer")
        if raw not in ("yes", "no", "na"):
            raise ApiError(400, "validation_error", 'answer must be exactly "yes", "no", or "na"')
        if "round" in body and body["round"] is not None and int(body["round"]) != session.round_no:
            raise ApiError(
                409, "conflict", f"session is at round {session.round_no}, not {body['round']}"
            )
        if body.get("notes") is not None:
            session.notes = str(body["notes"])
        answer = Answer(raw)
        agent = session.agent
        question = session.pending
        session.transcript.append(DialogueTurn(question, answer, session.round_no))
        agent.observe(session.agent_state, question, answer)
        if session.round_no < session.max_rounds:
            session.round_no += 1
            question_rng = np.random.default_rng(session.seed + 1 + session.round_no)
            session.pending = agent.next_question(session.agent_state, session.round_no, question_rng)
            return {"status": "awaiting_answer", "question": session.question_payload()}
        object_guess, coop_guess = agent.guesses(session.agent_state)
        label = CoopLabel.NC if session.role == "DECEIVE" else CoopLabel.CP
        record = GameRecord(
            scene=session.scene,
            turns=tuple(session.transcript),
            coop_label=label,
            strategy_tag=f"human:{session.role.lower()}",
            object_guess=object_guess,
            coop_guess=coop_guess,
            seed=session.seed,
        )
        human_win = (
            object_guess != session.scene.goal
            if session.role == "DECEIVE"
            else object_guess == session.scene.goal
        )
        session.finished = True
        session.result = {
            "object_guess": object_guess,
            "coop_guess": coop_guess.value,
            "goal": session.scene.goal,
            "human_win": human_win,
            "record": record.to_json(),
        }
        self._append_log(session, record)
        return {"status": "finished", "result": session.result}

    def _append_log(self, session: PlaySession, record: GameRecord) -> None:
        with self._log_lock:
            self.finished_records.append(record)
            if self.log_path is not None:
                with open(self.log_path, "a", encoding="utf-8") as fh:
                    fh.write(record.to_jsonl() + "\n")
                if session.notes:
                    notes_path = self.log_path.with_suffix(".notes.jsonl")
                    import json as _json

                    with open(notes_path, "a", encoding="utf-8") as fh:
                        fh.write(
                            _json.dumps(
                                {"session_id": session.id, "seed": session.seed, "notes": session.notes},
                                sort_keys=True,
                            )
                            + "\n"
                        )

    def logs_jsonl(self) -> str:
        with self._log_lock:
            return "".join(rec.to_jsonl() + "\n" for rec in self.finished_records)


def create_app(
    checkpoints: dict[str, QuestionAgent],
    log_path: str | Path | None = None,
    max_rounds: int | None = None,
    server_seed: int = 0,
) -> FastAPI:
    server = PlayServer(checkpoints, log_path=log_path, max_rounds=max_rounds, server_seed=server_seed)
    app = FastAPI(title="guesslab play service")
    app.state.server = server

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(status_code=exc.status, content={"code": exc.code, "message": exc.message})

    @app.post("/sessions", status_code=201)
    async def create_session(body: dict[str, Any] | None = None) -> dict:
        session = server.create_session(body or {})
        return {
            "session_id": session.id,
            "role": session.role,
            "max_rounds": session.max_rounds,
            "scene": session.scene.to_json(),
            "goal": session.scene.goal,
            "scene_seed": session.seed,
            "question": session.question_payload(),
        }

    @app.post("/sessions/{session_id}/answer")
    async def post_answer(session_id: str, body: dict[str, Any]) -> dict:
        return server.post_answer(session_id, body)

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str) -> dict:
        return server.get_session(session_id).snapshot()

    @app.get("/logs")
    async def get_logs() -> PlainTextResponse:
        return PlainTextResponse(server.logs_jsonl(), media_type="application/x-ndjson")

    return app
