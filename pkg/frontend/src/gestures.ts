/** Gesture vocabulary and slider presets.
 *
 * The preset angles mirror the server's canonical per-gesture prototypes;
 * they only position the sliders. Classification always happens
 * server-side from the raw angles the sliders send. */

export const GESTURES = [
  "palm", "gun", "ok", "call_me", "rock", "fist", "thumb_up", "index_up",
] as const;

export type Gesture = (typeof GESTURES)[number];

export const FINGERS = ["thumb", "index", "middle", "ring", "little"] as const;

export const PRESETS: Record<Gesture, [number, number, number, number, number]> = {
  palm: [5, 5, 5, 5, 5],
  gun: [15, 10, 160, 160, 160],
  ok: [100, 110, 25, 20, 20],
  call_me: [10, 165, 165, 165, 15],
  rock: [80, 10, 165, 165, 10],
  fist: [170, 170, 170, 170, 170],
  thumb_up: [10, 170, 170, 170, 170],
  index_up: [75, 10, 165, 165, 165],
};
