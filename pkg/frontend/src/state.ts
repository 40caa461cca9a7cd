/**
 * Client state as a pure fold over server messages.
 *
 * The server pushes human-mode events (frame, utterance, outcome) before
 * each reply, so applying messages in arrival order both renders the board
 * and logs the teacher's words before input is unblocked — the client adds
 * no game logic of its own.
 *
 * Requests are serialized: at most one is in flight, and key presses made
 * while waiting are buffered and flushed one per reply.
 */

import type {
  Action,
  FrameMsg,
  OutcomeMsg,
  ServerMessage,
  StepMsg,
} from "./protocol.js";

export interface LogEntry {
  kind: string;
  text: string;
  t: number;
}

export interface EpisodeScore {
  taskId: string;
  status: string;
  reward: number;
  steps: number;
}

export interface PlayState {
  session: string | null;
  connected: boolean;
  everConnected: boolean;
  board: FrameMsg | null;
  log: LogEntry[];
  taskId: string | null;
  t: number;
  done: boolean;
  outcome: OutcomeMsg | null;
  scores: EpisodeScore[];
  awaiting: boolean;
  queued: Action[];
  lastError: string | null;
}

export function initialState(): PlayState {
  return {
    session: null,
    connected: false,
    everConnected: false,
    board: null,
    log: [],
    taskId: null,
    t: 0,
    done: false,
    outcome: null,
    scores: [],
    awaiting: false,
    queued: [],
    lastError: null,
  };
}

/** Fold one server message into the state. Pure. */
export function applyServer(s: PlayState, m: ServerMessage): PlayState {
  switch (m.type) {
    case "welcome":
      return s;
    case "session":
      return {
        ...s,
        session: m.session,
        awaiting: false,
        board: null,
        log: [],
        taskId: null,
        t: 0,
        done: false,
        outcome: null,
        queued: [],
        lastError: null,
      };
    case "frame":
      return { ...s, board: m };
    case "utterance":
      return { ...s, log: [...s.log, { kind: m.kind, text: m.text, t: m.t }] };
    case "outcome":
      return {
        ...s,
        outcome: m,
        scores: [
          ...s.scores,
          {
            taskId: s.taskId ?? "?",
            status: m.status,
            reward: m.reward,
            steps: m.steps,
          },
        ],
      };
    case "observation": {
      const fresh = m.obs.t === 0;
      return {
        ...s,
        awaiting: false,
        taskId: m.task_id,
        t: m.obs.t,
        done: m.done,
        lastError: null,
        // a t=0 observation is a reset reply: clear the previous episode
        log: fresh ? s.log.slice(logStartOfEpisode(s)) : s.log,
        outcome: fresh ? null : s.outcome,
        queued: fresh ? [] : s.queued,
      };
    }
    case "closed":
      return { ...s, session: null, awaiting: false };
    case "error":
      return { ...s, awaiting: false, lastError: `${m.code}: ${m.message}` };
  }
}

/**
 * Index of the first log entry belonging to the episode being reset into.
 * The reset's own events (frame, initial RE) arrive before its observation
 * reply, so entries from the pre-reset episode are everything before the
 * trailing initial_re.
 */
function logStartOfEpisode(s: PlayState): number {
  for (let i = s.log.length - 1; i >= 0; i--) {
    if (s.log[i]!.kind === "initial_re") return i;
  }
  return s.log.length;
}

/**
 * Handle a key press: emit a step if the line is free, otherwise buffer it.
 * Presses are ignored between episodes (done, or no session yet).
 */
export function pressKey(s: PlayState, action: Action): [PlayState, StepMsg | null] {
  if (s.session === null || s.done || !s.connected) return [s, null];
  if (s.awaiting) {
    return [{ ...s, queued: [...s.queued, action] }, null];
  }
  return [
    { ...s, awaiting: true },
    { type: "step", session: s.session, action },
  ];
}

/** After a reply: flush at most one buffered press. */
export function nextQueued(s: PlayState): [PlayState, StepMsg | null] {
  if (s.awaiting || s.done || s.session === null || s.queued.length === 0) {
    return [s.queued.length > 0 && (s.done || s.session === null) ? { ...s, queued: [] } : s, null];
  }
  const [head, ...rest] = s.queued;
  return [
    { ...s, queued: rest, awaiting: true },
    { type: "step", session: s.session, action: head! },
  ];
}

/** Mark a request in flight (used for reset / new_session sends). */
export function markAwaiting(s: PlayState): PlayState {
  return { ...s, awaiting: true };
}

export function connectionChanged(s: PlayState, connected: boolean): PlayState {
  return {
    ...s,
    connected,
    everConnected: s.everConnected || connected,
    // a dropped transport can never deliver the pending reply
    awaiting: connected ? s.awaiting : false,
    session: connected ? s.session : null,
  };
}
