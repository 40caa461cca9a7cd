/**
 * Wire protocol types and guards (see the server's PROTOCOL.md).
 *
 * One JSON object per WebSocket text message. The follower may only ever
 * send session control and step actions — `encode` enforces that at the
 * single point where outgoing messages become bytes.
 */

export type Action = 0 | 1 | 2 | 3 | 4 | 5;

export const ACTION_NAMES = ["LEFT", "RIGHT", "UP", "DOWN", "WAIT", "GRIP"] as const;

export type Rgb = [number, number, number];

// ---------------------------------------------------------------- outbound

export interface HelloMsg {
  type: "hello";
}

export interface NewSessionMsg {
  type: "new_session";
  mode: "human" | "agent";
  order: string;
  feedback: boolean;
}

export interface ResetMsg {
  type: "reset";
  session: string;
  task_ref?: { split: string; index: number };
  generate?: { size: number; pieces: number; seed?: number };
}

export interface StepMsg {
  type: "step";
  session: string;
  action: Action;
}

export interface CloseMsg {
  type: "close";
  session: string;
}

export type Outbound = HelloMsg | NewSessionMsg | ResetMsg | StepMsg | CloseMsg;

/** The complete set of message types the client is allowed to emit. */
export const OUTBOUND_TYPES: ReadonlySet<string> = new Set([
  "hello",
  "new_session",
  "reset",
  "step",
  "close",
]);

/** Throws unless the message is session control or a step. */
export function assertOutbound(msg: { type: string }): void {
  if (!OUTBOUND_TYPES.has(msg.type)) {
    throw new Error(`forbidden outbound message type: ${msg.type}`);
  }
}

/** Serialize an outgoing message, enforcing the outbound whitelist. */
export function encode(msg: Outbound): string {
  assertOutbound(msg);
  return JSON.stringify(msg);
}

// ----------------------------------------------------------------- inbound

export interface WelcomeMsg {
  type: "welcome";
  service: string;
  protocol: number;
  version: string;
  actions: string[];
}

export interface SessionMsg {
  type: "session";
  session: string;
  mode: string;
  order: string;
  feedback: boolean;
  actions: string[];
}

export interface TokenRow {
  text: string;
  tokens: number[];
}

export interface ObservationMsg {
  type: "observation";
  session: string;
  task_id: string;
  obs: {
    view: Rgb[][] | null;
    coords: [number, number];
    re: TokenRow;
    fb: TokenRow;
    t: number;
  };
  reward: number;
  done: boolean;
  outcome: { status: string; steps: number; reward: number } | null;
}

export interface FrameMsg {
  type: "frame";
  session: string;
  t: number;
  width: number;
  height: number;
  image: Rgb[][];
  gripper: [number, number];
}

export interface UtteranceMsg {
  type: "utterance";
  session: string;
  kind: "initial_re" | "direction_feedback" | "piece_feedback" | "repeated_re";
  text: string;
  tokens: number[];
  t: number;
}

export interface OutcomeMsg {
  type: "outcome";
  session: string;
  status: "correct" | "wrong" | "timeout";
  steps: number;
  reward: number;
}

export interface ClosedMsg {
  type: "closed";
  session: string;
}

export interface ErrorMsg {
  type: "error";
  code: string;
  message: string;
  session?: string;
}

export type ServerMessage =
  | WelcomeMsg
  | SessionMsg
  | ObservationMsg
  | FrameMsg
  | UtteranceMsg
  | OutcomeMsg
  | ClosedMsg
  | ErrorMsg;

/** Parse one server message; malformed input becomes a synthetic error. */
export function decode(data: string): ServerMessage {
  let parsed: unknown;
  try {
    parsed = JSON.parse(data);
  } catch {
    return { type: "error", code: "CLIENT_PARSE", message: `unparseable message: ${data}` };
  }
  if (
    typeof parsed !== "object" ||
    parsed === null ||
    typeof (parsed as { type?: unknown }).type !== "string"
  ) {
    return { type: "error", code: "CLIENT_PARSE", message: "message without a type" };
  }
  return parsed as ServerMessage;
}
