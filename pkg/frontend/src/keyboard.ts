/** Keyboard-first input: 1/2/3 pick a label, s skips. */

import { Choice } from "./api.js";

export const KEY_BINDINGS: Record<string, Choice> = {
  "1": "opioid-related",
  "2": "not-opioid-related",
  "3": "unsure",
  s: "skip",
};

export interface KeyEventLike {
  key: string;
  repeat?: boolean;
  target?: unknown;
}

export function choiceForKey(event: KeyEventLike): Choice | null {
  if (event.repeat) return null;
  const target = event.target as { tagName?: string } | undefined;
  if (target?.tagName === "INPUT" || target?.tagName === "TEXTAREA") return null;
  return KEY_BINDINGS[event.key.toLowerCase()] ?? null;
}

export interface EventTargetLike {
  addEventListener(type: string, listener: (event: KeyEventLike) => void): void;
  removeEventListener(type: string, listener: (event: KeyEventLike) => void): void;
}

/** Route keydown events to the handler; returns an unbind function. */
export function bindKeys(
  target: EventTargetLike,
  onChoice: (choice: Choice) => void,
): () => void {
  const listener = (event: KeyEventLike) => {
    const choice = choiceForKey(event);
    if (choice !== null) onChoice(choice);
  };
  target.addEventListener("keydown", listener);
  return () => target.removeEventListener("keydown", listener);
}
