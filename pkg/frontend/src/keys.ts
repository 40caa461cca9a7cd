/** Keyboard layout: arrows move, space grips, period waits. */

import type { Action } from "./protocol.js";

const KEYMAP: Record<string, Action> = {
  ArrowLeft: 0,
  ArrowRight: 1,
  ArrowUp: 2,
  ArrowDown: 3,
  ".": 4,
  " ": 5,
};

/** The action for a KeyboardEvent.key, or null for unbound keys. */
export function actionForKey(key: string): Action | null {
  return key in KEYMAP ? KEYMAP[key]! : null;
}
