// State machine unit tests: phases, guards, and the result display rule.

import { describe, expect, it } from "vitest";

import type { GameResult, QuestionView, SceneView } from "../src/api.js";
import {
  answerSent,
  canAnswer,
  finished,
  initialState,
  isLastRound,
  nextQuestion,
  restoredFromSnapshot,
  resultSummary,
  sessionStarted,
} from "../src/state.js";

const scene: SceneView = {
  objects: [
    { id: 0, category: "ball", color: "red", size: "small", cell: [0, 0] },
    { id: 1, category: "book", color: "blue", size: "large", cell: [1, 1] },
  ],
  goal: 1,
  config: { n_objects: 2, grid_dim: 2, n_categories: 8, n_colors: 6 },
};

const q1: QuestionView = { round: 1, text: "Is the object red?", structured: { attribute: "color", value: "red" } };
const q2: QuestionView = { round: 2, text: "Is the object a ball?", structured: { attribute: "category", value: "ball" } };

function started() {
  return sessionStarted(initialState(), {
    sessionId: "s1",
    role: "DECEIVE",
    scene,
    goal: 1,
    maxRounds: 5,
    question: q1,
  });
}

describe("state machine", () => {
  it("starts idle and cannot answer", () => {
    const state = initialState();
    expect(state.phase).toBe("idle");
    expect(canAnswer(state)).toBe(false);
  });

  it("awaits an answer after session start", () => {
    const state = started();
    expect(state.phase).toBe("awaiting_answer");
    expect(canAnswer(state)).toBe(true);
    expect(state.round).toBe(1);
  });

  it("blocks answers while a request is in flight", () => {
    const busy = answerSent(started(), "no");
    expect(busy.phase).toBe("busy");
    expect(canAnswer(busy)).toBe(false);
    expect(() => answerSent(busy, "no")).toThrow();
  });

  it("records the transcript locally", () => {
    let state = answerSent(started(), "no");
    state = nextQuestion(state, q2);
    expect(state.transcript).toEqual([
      { questionText: "Is the object red?", answer: "no", round: 1 },
    ]);
    expect(state.round).toBe(2);
  });

  it("cannot answer once finished", () => {
    const result: GameResult = {
      object_guess: 0,
      coop_guess: "NC",
      goal: 1,
      human_win: true,
      record: {},
    };
    const state = finished(answerSent(started(), "no"), result);
    expect(state.phase).toBe("finished");
    expect(canAnswer(state)).toBe(false);
    expect(() => answerSent(state, "yes")).toThrow();
  });

  it("flags the last round for the notes box", () => {
    let state = started();
    expect(isLastRound(state)).toBe(false);
    state = nextQuestion(state, { ...q2, round: 5 });
    expect(isLastRound(state)).toBe(true);
  });

  it("result summary names a wrong guess explicitly", () => {
    const state = finished(started(), {
      object_guess: 0,
      coop_guess: "CP",
      goal: 1,
      human_win: true,
      record: {},
    });
    expect(resultSummary(state)).toContain("agent guessed WRONG object");
    expect(resultSummary(state)).toContain("You win.");
  });

  it("result summary names a right guess explicitly", () => {
    const state = finished(started(), {
      object_guess: 1,
      coop_guess: "NC",
      goal: 1,
      human_win: false,
      record: {},
    });
    expect(resultSummary(state)).toContain("agent guessed the RIGHT object");
    expect(resultSummary(state)).toContain("You lose.");
  });

  it("restores from a server snapshot", () => {
    const state = restoredFromSnapshot({
      session_id: "abc",
      state: "awaiting_answer",
      role: "COOPERATE",
      round: 3,
      max_rounds: 5,
      scene,
      goal: 1,
      pending_question: q2,
      transcript: [
        { question: { attribute: "color", value: "red" }, answer: "yes", round: 1 },
        { question: { attribute: "size", value: "small" }, answer: "no", round: 2 },
      ],
      result: null,
    });
    expect(state.phase).toBe("awaiting_answer");
    expect(state.sessionId).toBe("abc");
    expect(state.transcript).toHaveLength(2);
    expect(state.round).toBe(3);
  });
});
