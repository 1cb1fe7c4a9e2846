// Wires the API client, the state machine, and the renderer together.
// The session id lives in location.hash so a mid-game refresh restores the
// exact server state from GET /sessions/{id}.

import { ApiError, PlayClient } from "./api.js";
import { render } from "./render.js";
import {
  UiState,
  answerSent,
  failed,
  finished,
  initialState,
  isLastRound,
  nextQuestion,
  restoredFromSnapshot,
  sessionStarted,
} from "./state.js";

export class App {
  state: UiState = initialState();

  constructor(
    readonly client: PlayClient,
    readonly root: HTMLElement,
    readonly setHash: (h: string) => void = (h) => {
      window.location.hash = h;
    },
  ) {}

  private update(state: UiState): void {
    this.state = state;
    render(this.root, this.state, {
      onStart: (role) => void this.start(role),
      onAnswer: (token) => void this.answer(token),
      onNotesChange: (notes) => {
        this.state = { ...this.state, notes };
      },
    });
  }

  async start(role: string, sceneSeed?: number): Promise<void> {
    try {
      const created = await this.client.createSession({
        role,
        ...(sceneSeed !== undefined ? { scene_seed: sceneSeed } : {}),
      });
      this.setHash(created.session_id);
      this.update(
        sessionStarted(this.state, {
          sessionId: created.session_id,
          role: created.role,
          scene: created.scene,
          goal: created.goal,
          maxRounds: created.max_rounds,
          question: created.question,
        }),
      );
    } catch (err) {
      this.update(failed(this.state, String(err)));
    }
  }

  async answer(token: "yes" | "no" | "na"): Promise<void> {
    const sessionId = this.state.sessionId;
    if (sessionId === null) {
      return;
    }
    const round = this.state.round;
    const notes = isLastRound(this.state) ? this.state.notes : undefined;
    try {
      this.update(answerSent(this.state, token));
      const resp = await this.client.postAnswer(sessionId, token, round, notes);
      if (resp.status === "finished") {
        this.update(finished(this.state, resp.result));
      } else {
        this.update(nextQuestion(this.state, resp.question));
      }
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        await this.refresh(sessionId);
        return;
      }
      this.update(failed(this.state, String(err)));
    }
  }

  async refresh(sessionId: string): Promise<void> {
    try {
      const snapshot = await this.client.getSession(sessionId);
      this.update(restoredFromSnapshot(snapshot));
    } catch (err) {
      this.update(failed(this.state, String(err)));
    }
  }

  async boot(hash: string): Promise<void> {
    const sessionId = hash.replace(/^#/, "");
    if (sessionId) {
      await this.refresh(sessionId);
    } else {
      this.update(this.state);
    }
  }
}

export function mount(root: HTMLElement, base: string): App {
  const app = new App(new PlayClient(base), root);
  void app.boot(window.location.hash);
  return app;
}

declare global {
  interface Window {
    guesslab?: App;
  }
}

if (typeof document !== "undefined" && document.getElementById("app") !== null) {
  window.guesslab = mount(
    document.getElementById("app") as HTMLElement,
    (window as unknown as { GUESSLAB_API?: string }).GUESSLAB_API ?? "",
  );
}
