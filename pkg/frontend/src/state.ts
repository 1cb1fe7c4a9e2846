// UI state machine. Mirrors the server's session states and adds the
// client-only "idle" (no session) and "busy" (request in flight) phases so
// the view layer can disable answer buttons outside AWAITING_ANSWER.

import type { GameResult, QuestionView, SceneView, SessionSnapshot } from "./api.js";

export type Phase = "idle" | "awaiting_answer" | "busy" | "finished" | "error";

export interface UiState {
  phase: Phase;
  sessionId: string | null;
  role: "DECEIVE" | "COOPERATE";
  scene: SceneView | null;
  goal: number | null;
  maxRounds: number;
  round: number;
  question: QuestionView | null;
  transcript: Array<{ questionText: string; answer: string; round: number }>;
  result: GameResult | null;
  errorMessage: string | null;
  notes: string;
}

export function initialState(): UiState {
  return {
    phase: "idle",
    sessionId: null,
    role: "DECEIVE",
    scene: null,
    goal: null,
    maxRounds: 0,
    round: 0,
    question: null,
    transcript: [],
    result: null,
    errorMessage: null,
    notes: "",
  };
}

export function canAnswer(state: UiState): boolean {
  return state.phase === "awaiting_answer" && state.question !== null;
}

export function isLastRound(state: UiState): boolean {
  return state.round === state.maxRounds;
}

export function sessionStarted(
  state: UiState,
  args: {
    sessionId: string;
    role: "DECEIVE" | "COOPERATE";
    scene: SceneView;
    goal: number;
    maxRounds: number;
    question: QuestionView;
  },
): UiState {
  return {
    ...initialState(),
    phase: "awaiting_answer",
    sessionId: args.sessionId,
    role: args.role,
    scene: args.scene,
    goal: args.goal,
    maxRounds: args.maxRounds,
    round: args.question.round,
    question: args.question,
    notes: state.notes,
  };
}

export function answerSent(state: UiState, answer: string): UiState {
  if (!canAnswer(state) || state.question === null) {
    throw new Error("cannot answer outside awaiting_answer");
  }
  return {
    ...state,
    phase: "busy",
    transcript: [
      ...state.transcript,
      { questionText: state.question.text, answer, round: state.round },
    ],
  };
}

export function nextQuestion(state: UiState, question: QuestionView): UiState {
  return { ...state, phase: "awaiting_answer", round: question.round, question };
}

export function finished(state: UiState, result: GameResult): UiState {
  return { ...state, phase: "finished", question: null, result };
}

export function failed(state: UiState, message: string): UiState {
  return { ...state, phase: "error", errorMessage: message };
}

export function restoredFromSnapshot(snapshot: SessionSnapshot): UiState {
  const base = initialState();
  return {
    ...base,
    phase: snapshot.state === "finished" ? "finished" : "awaiting_answer",
    sessionId: snapshot.session_id,
    role: snapshot.role,
    scene: snapshot.scene,
    goal: snapshot.goal,
    maxRounds: snapshot.max_rounds,
    round: snapshot.round,
    question: snapshot.pending_question,
    transcript: snapshot.transcript.map((t) => ({
      questionText: "",
      answer: t.answer,
      round: t.round,
    })),
    result: snapshot.result,
  };
}

// Display rule for the result banner: name the outcome from the agent's
// perspective so "wrong object" is explicit.
export function resultSummary(state: UiState): string {
  if (state.result === null) {
    return "";
  }
  const r = state.result;
  const objectPart =
    r.object_guess === r.goal
      ? `agent guessed the RIGHT object (#${r.object_guess})`
      : `agent guessed WRONG object (#${r.object_guess}, goal was #${r.goal})`;
  const coopPart = `agent called you ${r.coop_guess === "NC" ? "NON-COOPERATIVE" : "COOPERATIVE"}`;
  const verdict = r.human_win ? "You win." : "You lose.";
  return `${objectPart}; ${coopPart}. ${verdict}`;
}
