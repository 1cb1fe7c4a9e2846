// Typed client for the play-service HTTP API. The server is authoritative
// for all game logic; this module only moves JSON.

export interface SceneObject {
  id: number;
  category: string;
  color: string;
  size: "small" | "medium" | "large";
  cell: [number, number];
}

export interface SceneView {
  objects: SceneObject[];
  goal: number;
  config: { n_objects: number; grid_dim: number; n_categories: number; n_colors: number };
}

export interface QuestionView {
  round: number;
  text: string;
  structured: { attribute: string; value: string | number };
}

export interface SessionCreated {
  session_id: string;
  role: "DECEIVE" | "COOPERATE";
  max_rounds: number;
  scene: SceneView;
  goal: number;
  scene_seed: number;
  question: QuestionView;
}

export interface GameResult {
  object_guess: number;
  coop_guess: "CP" | "NC";
  goal: number;
  human_win: boolean;
  record: unknown;
}

export type AnswerResponse =
  | { status: "awaiting_answer"; question: QuestionView }
  | { status: "finished"; result: GameResult };

export interface SessionSnapshot {
  session_id: string;
  state: "awaiting_answer" | "finished";
  role: "DECEIVE" | "COOPERATE";
  round: number;
  max_rounds: number;
  scene: SceneView;
  goal: number;
  pending_question: QuestionView | null;
  transcript: Array<{ question: { attribute: string; value: string | number }; answer: string; round: number }>;
  result: GameResult | null;
}

export type AnswerToken = "yes" | "no" | "na";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(base + path, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  if (!resp.ok) {
    let code = "http_error";
    let message = `${resp.status}`;
    try {
      const body = (await resp.json()) as { code?: string; message?: string };
      code = body.code ?? code;
      message = body.message ?? message;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(resp.status, code, message);
  }
  return (await resp.json()) as T;
}

export class PlayClient {
  constructor(readonly base: string) {}

  createSession(opts: { role?: string; scene_seed?: number; checkpoint?: string } = {}): Promise<SessionCreated> {
    return request<SessionCreated>(this.base, "/sessions", {
      method: "POST",
      body: JSON.stringify(opts),
    });
  }

  postAnswer(
    sessionId: string,
    answer: AnswerToken,
    round: number,
    notes?: string,
  ): Promise<AnswerResponse> {
    const body: Record<string, unknown> = { answer, round };
    if (notes !== undefined && notes !== "") {
      body.notes = notes;
    }
    return request<AnswerResponse>(this.base, `/sessions/${sessionId}/answer`, {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  getSession(sessionId: string): Promise<SessionSnapshot> {
    return request<SessionSnapshot>(this.base, `/sessions/${sessionId}`);
  }

  async downloadLogs(): Promise<string> {
    const resp = await fetch(this.base + "/logs");
    if (!resp.ok) {
      throw new ApiError(resp.status, "http_error", `${resp.status}`);
    }
    return await resp.text();
  }
}
