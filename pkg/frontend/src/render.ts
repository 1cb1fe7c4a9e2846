// DOM rendering: scene grid, pending question, answer buttons, result.
// Scenes draw as a grid of attribute-styled tiles (color fill, category
// label, size as font scale); the goal object carries a highlight ring while
// the game is live, since the human plays the answer-player and must know
// the secret.

import type { SceneView } from "./api.js";
import { UiState, canAnswer, isLastRound, resultSummary } from "./state.js";

const SIZE_SCALE: Record<string, string> = { small: "0.7", medium: "1.0", large: "1.35" };

export interface Handlers {
  onStart: (role: string) => void;
  onAnswer: (answer: "yes" | "no" | "na") => void;
  onNotesChange: (notes: string) => void;
}

export function renderScene(root: HTMLElement, scene: SceneView, goal: number): void {
  root.textContent = "";
  const grid = document.createElement("div");
  grid.className = "scene-grid";
  grid.style.display = "grid";
  grid.style.gridTemplateColumns = `repeat(${scene.config.grid_dim}, 72px)`;
  grid.style.gap = "4px";
  const byCell = new Map<string, typeof scene.objects>();
  for (const obj of scene.objects) {
    const key = `${obj.cell[0]},${obj.cell[1]}`;
    const list = byCell.get(key) ?? [];
    list.push(obj);
    byCell.set(key, list);
  }
  for (let r = 0; r < scene.config.grid_dim; r += 1) {
    for (let c = 0; c < scene.config.grid_dim; c += 1) {
      const cell = document.createElement("div");
      cell.className = "scene-cell";
      cell.style.minHeight = "72px";
      cell.style.border = "1px solid #ccc";
      for (const obj of byCell.get(`${r},${c}`) ?? []) {
        const tile = document.createElement("span");
        tile.className = "object-tile" + (obj.id === goal ? " goal" : "");
        tile.dataset.objectId = String(obj.id);
        tile.textContent = `${obj.category}`;
        tile.title = `#${obj.id}: ${obj.size} ${obj.color} ${obj.category} at (${obj.cell[0]}, ${obj.cell[1]})`;
        tile.style.background = obj.color;
        tile.style.color = obj.color === "black" ? "white" : "black";
        tile.style.fontSize = `${SIZE_SCALE[obj.size] ?? "1.0"}em`;
        tile.style.padding = "2px 4px";
        tile.style.margin = "2px";
        tile.style.display = "inline-block";
        if (obj.id === goal) {
          tile.style.outline = "3px solid gold";
        }
        cell.appendChild(tile);
      }
      grid.appendChild(cell);
    }
  }
  root.appendChild(grid);
}

export function render(root: HTMLElement, state: UiState, handlers: Handlers): void {
  root.textContent = "";

  const status = document.createElement("p");
  status.id = "status";
  root.appendChild(status);

  if (state.phase === "idle" || state.phase === "error") {
    if (state.phase === "error") {
      const banner = document.createElement("div");
      banner.id = "error-banner";
      banner.textContent = `Something went wrong: ${state.errorMessage ?? "unknown error"}. `;
      const retry = document.createElement("button");
      retry.id = "retry";
      retry.textContent = "Reload session";
      retry.addEventListener("click", () => handlers.onStart(state.role));
      banner.appendChild(retry);
      root.appendChild(banner);
    }
    status.textContent = "Start a game: you will answer questions about the highlighted secret object.";
    for (const role of ["DECEIVE", "COOPERATE"]) {
      const btn = document.createElement("button");
      btn.id = `start-${role.toLowerCase()}`;
      btn.textContent = role === "DECEIVE" ? "Play deceiver" : "Play cooperator";
      btn.addEventListener("click", () => handlers.onStart(role));
      root.appendChild(btn);
    }
    return;
  }

  if (state.scene !== null && state.goal !== null) {
    const sceneHost = document.createElement("div");
    sceneHost.id = "scene";
    root.appendChild(sceneHost);
    renderScene(sceneHost, state.scene, state.goal);
    const hint = document.createElement("p");
    hint.id = "role-hint";
    hint.textContent =
      state.role === "DECEIVE"
        ? "Your secret object is highlighted. Mislead the agent away from it."
        : "Your secret object is highlighted. Help the agent find it.";
    root.appendChild(hint);
  }

  const transcript = document.createElement("ol");
  transcript.id = "transcript";
  for (const turn of state.transcript) {
    const item = document.createElement("li");
    item.textContent = `${turn.questionText || "(earlier question)"} -> ${turn.answer}`;
    transcript.appendChild(item);
  }
  root.appendChild(transcript);

  if (state.phase === "finished") {
    status.textContent = "Game over.";
    const result = document.createElement("div");
    result.id = "result";
    result.textContent = resultSummary(state);
    root.appendChild(result);
    const again = document.createElement("button");
    again.id = "play-again";
    again.textContent = "Play again";
    again.addEventListener("click", () => handlers.onStart(state.role));
    root.appendChild(again);
    return;
  }

  status.textContent = `Round ${state.round} of ${state.maxRounds}`;
  const questionBox = document.createElement("p");
  questionBox.id = "question";
  questionBox.textContent = state.question?.text ?? "";
  root.appendChild(questionBox);

  const enabled = canAnswer(state);
  for (const token of ["yes", "no", "na"] as const) {
    const btn = document.createElement("button");
    btn.id = `answer-${token}`;
    btn.textContent = token === "na" ? "n/a" : token;
    btn.disabled = !enabled;
    btn.addEventListener("click", () => handlers.onAnswer(token));
    root.appendChild(btn);
  }

  if (isLastRound(state)) {
    const label = document.createElement("label");
    label.htmlFor = "notes";
    label.textContent = "Strategy notes (stored with this game):";
    const notes = document.createElement("textarea");
    notes.id = "notes";
    notes.value = state.notes;
    notes.addEventListener("input", () => handlers.onNotesChange(notes.value));
    root.appendChild(label);
    root.appendChild(notes);
  }
}
