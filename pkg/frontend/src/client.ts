/** Gateway client: one socket, inputs in click order, acks correlated by
 * sequence number. The socket is injected so tests can use any
 * WebSocket-compatible implementation. */

import { SessionStore } from "./store.js";
import {
  ConfigUpdate,
  configUpdateMessage,
  gestureMessage,
  gloveMessage,
  parseServerMessage,
} from "./wire.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: "open", listener: () => void): void;
  addEventListener(type: "close", listener: () => void): void;
  addEventListener(type: "message", listener: (event: { data: unknown }) => void): void;
  addEventListener(type: "error", listener: (event: unknown) => void): void;
}

export type SocketFactory = () => SocketLike;

export class GatewayClient {
  private socket: SocketLike | null = null;
  private seq = 0;

  constructor(private store: SessionStore, private factory: SocketFactory) {}

  connect(): void {
    this.store.setConnection("connecting");
    const socket = this.factory();
    this.socket = socket;
    socket.addEventListener("open", () => this.store.setConnection("open"));
    socket.addEventListener("close", () => this.store.setConnection("closed"));
    socket.addEventListener("error", () => this.store.setConnection("closed"));
    socket.addEventListener("message", (event) => {
      this.handleMessage(String(event.data));
    });
  }

  disconnect(): void {
    this.socket?.close();
  }

  handleMessage(raw: string): void {
    let message;
    try {
      message = parseServerMessage(raw);
    } catch (e) {
      this.store.applyErr({ type: "err", reason: String(e) });
      return;
    }
    if (message.type === "telemetry") this.store.applyTelemetry(message);
    else if (message.type === "ack") this.store.applyAck(message);
    else this.store.applyErr(message);
  }

  private dispatch(serialized: string, seq: number): number | null {
    if (!this.store.canSend() || this.socket === null) return null;
    this.socket.send(serialized);
    this.store.markSent(seq);
    return seq;
  }

  /** Returns the message seq, or null when input is blocked client-side. */
  sendGesture(label: string): number | null {
    const seq = ++this.seq;
    return this.dispatch(gestureMessage(label, seq), seq);
  }

  sendGlove(angles: number[]): number | null {
    const seq = ++this.seq;
    return this.dispatch(gloveMessage(angles, seq), seq);
  }

  sendConfig(fields: ConfigUpdate): number | null {
    const seq = ++this.seq;
    return this.dispatch(configUpdateMessage(fields, seq), seq);
  }
}
