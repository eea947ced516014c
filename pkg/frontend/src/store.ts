/** Dashboard session state.
 *
 * Telemetry is stored as one immutable snapshot per message, so a render
 * can never mix fields from two steps. Disconnecting disables input in
 * the same synchronous update (before subscribers are notified). In safe
 * input mode at most one input may be un-acked at a time. */

import { Ack, Err, Telemetry } from "./wire.js";

export type ConnectionState = "connecting" | "open" | "closed";
export type InputMode = "buttons" | "sliders" | "replay";

export interface SessionView {
  connection: ConnectionState;
  telemetry: Telemetry | null;
  inputEnabled: boolean;
  mode: InputMode;
  pendingSeq: number | null;
  lastAck: Ack | null;
  lastError: string | null;
}

export type Listener = (view: SessionView) => void;

export class SessionStore {
  view: SessionView = {
    connection: "connecting",
    telemetry: null,
    inputEnabled: false,
    mode: "buttons",
    pendingSeq: null,
    lastAck: null,
    lastError: null,
  };
  safeInput = true;
  private listeners: Listener[] = [];

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  private update(patch: Partial<SessionView>): void {
    this.view = { ...this.view, ...patch };
    for (const fn of this.listeners) fn(this.view);
  }

  setConnection(state: ConnectionState): void {
    this.update({
      connection: state,
      inputEnabled: state === "open",
      pendingSeq: state === "open" ? this.view.pendingSeq : null,
    });
  }

  setMode(mode: InputMode): void {
    this.update({ mode });
  }

  applyTelemetry(message: Telemetry): void {
    // Whole-snapshot replacement: the view either shows the previous
    // message or this one, never a blend.
    this.update({ telemetry: message });
  }

  applyAck(ack: Ack): void {
    const pendingSeq =
      this.view.pendingSeq === ack.seq ? null : this.view.pendingSeq;
    this.update({ lastAck: ack, pendingSeq, lastError: null });
  }

  applyErr(err: Err): void {
    // Rejected inputs are surfaced, not retried.
    const pendingSeq =
      err.seq !== undefined && this.view.pendingSeq === err.seq
        ? null
        : this.view.pendingSeq;
    this.update({ lastError: err.reason, pendingSeq });
  }

  canSend(): boolean {
    if (!this.view.inputEnabled) return false;
    return !this.safeInput || this.view.pendingSeq === null;
  }

  markSent(seq: number): void {
    this.update({ pendingSeq: this.safeInput ? seq : null });
  }
}
