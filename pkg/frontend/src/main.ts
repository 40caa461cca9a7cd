/** DOM + WebSocket shell. All decisions live in state.ts / protocol.ts. */

import { actionForKey } from "./keys.js";
import { decode, encode, type Outbound, type ServerMessage } from "./protocol.js";
import { cropView, formatReward, rgbCss, scoreSummary } from "./render.js";
import {
  applyServer,
  connectionChanged,
  initialState,
  markAwaiting,
  nextQueued,
  pressKey,
  type PlayState,
} from "./state.js";

const VIEW_RADIUS = 5;
const RECONNECT_DELAY_MS = 1500;

// ------------------------------------------------------------ configuration

const params = new URLSearchParams(window.location.search);
const config = {
  server: params.get("server") ?? `ws://${window.location.host}`,
  order: params.get("order") ?? "PCS",
  feedback: (params.get("feedback") ?? "on") !== "off",
  split: params.get("split"),
  size: Number(params.get("size") ?? "20"),
  pieces: Number(params.get("pieces") ?? "8"),
  seed: Number(params.get("seed") ?? "1"),
};

// ------------------------------------------------------------------ widgets

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const boardCanvas = el<HTMLCanvasElement>("board");
const insetCanvas = el<HTMLCanvasElement>("inset");
const logList = el<HTMLUListElement>("log");
const statusLine = el<HTMLElement>("status");
const outcomeBox = el<HTMLElement>("outcome");
const scoreBox = el<HTMLElement>("scores");
const banner = el<HTMLElement>("banner");
const errorLine = el<HTMLElement>("error");
const nextButton = el<HTMLButtonElement>("next-task");

// -------------------------------------------------------------------- state

let state: PlayState = initialState();
let ws: WebSocket | null = null;
let taskIndex = 0;
let renderedLogLength = -1;

function send(msg: Outbound): void {
  if (!ws || ws.readyState !== WebSocket.OPEN) return;
  ws.send(encode(msg));
}

function sendNewSession(): void {
  state = markAwaiting(state);
  send({
    type: "new_session",
    mode: "human",
    order: config.order,
    feedback: config.feedback,
  });
}

function sendReset(): void {
  const session = state.session;
  if (session === null) return;
  state = markAwaiting(state);
  if (config.split) {
    send({
      type: "reset",
      session,
      task_ref: { split: config.split, index: taskIndex },
    });
  } else {
    send({
      type: "reset",
      session,
      generate: { size: config.size, pieces: config.pieces, seed: config.seed + taskIndex },
    });
  }
}

// --------------------------------------------------------------- connection

function connect(): void {
  ws = new WebSocket(config.server);
  ws.onopen = () => {
    state = connectionChanged(state, true);
    sendNewSession();
    paint();
  };
  ws.onmessage = (event) => handleMessage(decode(String(event.data)));
  ws.onclose = () => {
    state = connectionChanged(state, false);
    paint();
    setTimeout(connect, RECONNECT_DELAY_MS);
  };
}

function handleMessage(msg: ServerMessage): void {
  const hadSession = state.session !== null;
  state = applyServer(state, msg);

  if (msg.type === "session" && !hadSession) {
    sendReset();
  } else if (msg.type === "observation" || msg.type === "error") {
    const [next, out] = nextQueued(state);
    state = next;
    if (out) send(out);
  }
  paint();
}

// -------------------------------------------------------------------- input

window.addEventListener("keydown", (event) => {
  const action = actionForKey(event.key);
  if (action === null) return;
  event.preventDefault();
  const [next, out] = pressKey(state, action);
  state = next;
  if (out) send(out);
  paint();
});

nextButton.addEventListener("click", () => {
  if (state.session === null || state.awaiting) return;
  taskIndex += 1;
  sendReset();
  paint();
});

// ------------------------------------------------------------------ drawing

function drawGrid(
  canvas: HTMLCanvasElement,
  image: readonly (readonly (readonly number[])[])[],
  gripper: [number, number] | null,
): void {
  const rows = image.length;
  const cols = rows > 0 ? image[0]!.length : 0;
  if (rows === 0 || cols === 0) return;
  const scale = Math.floor(canvas.width / cols);
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  for (let y = 0; y < rows; y++) {
    for (let x = 0; x < cols; x++) {
      const [r, g, b] = image[y]![x]! as [number, number, number];
      ctx.fillStyle = rgbCss([r, g, b]);
      ctx.fillRect(x * scale, y * scale, scale, scale);
    }
  }
  ctx.strokeStyle = "#444";
  ctx.lineWidth = 1;
  for (let y = 0; y <= rows; y++) {
    ctx.beginPath();
    ctx.moveTo(0, y * scale);
    ctx.lineTo(cols * scale, y * scale);
    ctx.stroke();
  }
  for (let x = 0; x <= cols; x++) {
    ctx.beginPath();
    ctx.moveTo(x * scale, 0);
    ctx.lineTo(x * scale, rows * scale);
    ctx.stroke();
  }
  if (gripper) {
    ctx.strokeStyle = "#e91e63";
    ctx.lineWidth = 3;
    ctx.strokeRect(gripper[0] * scale + 1.5, gripper[1] * scale + 1.5, scale - 3, scale - 3);
  }
}

function paint(): void {
  banner.style.display = state.connected || !state.everConnected ? "none" : "block";
  errorLine.textContent = state.lastError ?? "";

  const fbLabel = config.feedback ? "feedback on" : "feedback off";
  statusLine.textContent = state.board
    ? `${state.taskId ?? "…"} · step ${state.t} · order ${config.order} · ${fbLabel}`
    : state.connected
      ? "starting…"
      : "connecting…";

  if (state.board) {
    const size = state.board.width;
    const scale = size > 20 ? 16 : 24;
    const pixels = size * scale;
    if (boardCanvas.width !== pixels) {
      boardCanvas.width = pixels;
      boardCanvas.height = pixels;
    }
    drawGrid(boardCanvas, state.board.image, state.board.gripper);
    drawGrid(insetCanvas, cropView(state.board.image, state.board.gripper, VIEW_RADIUS), [
      VIEW_RADIUS,
      VIEW_RADIUS,
    ]);
  }

  if (renderedLogLength !== state.log.length) {
    renderedLogLength = state.log.length;
    logList.replaceChildren(
      ...state.log.map((entry) => {
        const item = document.createElement("li");
        item.className = entry.kind;
        item.textContent = `[${entry.t}] ${entry.text}`;
        return item;
      }),
    );
    logList.scrollTop = logList.scrollHeight;
  }

  if (state.outcome) {
    outcomeBox.className = `outcome ${state.outcome.status}`;
    outcomeBox.textContent =
      `${state.outcome.status.toUpperCase()} in ${state.outcome.steps} steps — ` +
      `reward ${formatReward(state.outcome.reward)}`;
  } else {
    outcomeBox.className = "outcome";
    outcomeBox.textContent = state.done ? "episode over" : "";
  }

  const summary = scoreSummary(state.scores);
  const rows = state.scores
    .map(
      (s, i) =>
        `<tr><td>${i + 1}</td><td>${s.taskId}</td><td class="${s.status}">${s.status}</td>` +
        `<td>${s.steps}</td><td>${formatReward(s.reward)}</td></tr>`,
    )
    .join("");
  scoreBox.innerHTML =
    `<div class="summary">episodes ${summary.episodes} · wins ${summary.successes} · ` +
    `mSR ${(summary.msr * 100).toFixed(1)}%</div>` +
    (rows
      ? `<table><tr><th>#</th><th>task</th><th>result</th><th>steps</th><th>reward</th></tr>${rows}</table>`
      : "");
}

paint();
connect();
