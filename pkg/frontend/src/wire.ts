/** Gateway wire protocol: message shapes, parsing and serialization. */

export interface ForceEstimateMsg {
  force: number | null;
  camera_hue: number | null;
  valid: boolean;
}

export interface Telemetry {
  type: "telemetry";
  step: number;
  t: number;
  phase: string;
  gesture: string | null;
  command: string;
  hue: number;
  hue_rgb: [number, number, number];
  force_estimate: ForceEstimateMsg;
  safety_limit: number;
  arm_pose: number[];
  pressures?: number[];
  fsr?: number[];
  fsl?: number[];
  contact_forces?: number[];
  emergency?: boolean;
  frame_b64?: string;
}

export interface Ack {
  type: "ack";
  seq: number;
  step?: number;
  gesture?: string | null;
  command?: string;
  input?: string;
}

export interface Err {
  type: "err";
  seq?: number;
  reason: string;
}

export type ServerMessage = Telemetry | Ack | Err;

export class WireError extends Error {}

function isNumber(x: unknown): x is number {
  return typeof x === "number" && Number.isFinite(x);
}

export function parseServerMessage(raw: string): ServerMessage {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    throw new WireError("server message is not JSON");
  }
  if (typeof data !== "object" || data === null) {
    throw new WireError("server message is not an object");
  }
  const msg = data as Record<string, unknown>;
  switch (msg.type) {
    case "telemetry": {
      if (!isNumber(msg.step) || typeof msg.phase !== "string"
          || !isNumber(msg.hue) || !Array.isArray(msg.hue_rgb)
          || typeof msg.force_estimate !== "object"
          || msg.force_estimate === null) {
        throw new WireError("malformed telemetry message");
      }
      return msg as unknown as Telemetry;
    }
    case "ack":
      if (!isNumber(msg.seq)) throw new WireError("ack without seq");
      return msg as unknown as Ack;
    case "err":
      if (typeof msg.reason !== "string") throw new WireError("err without reason");
      return msg as unknown as Err;
    default:
      throw new WireError(`unknown server message type: ${String(msg.type)}`);
  }
}

export function gestureMessage(label: string, seq: number): string {
  if (!label) throw new WireError("gesture label is empty");
  return JSON.stringify({ type: "gesture", label, seq });
}

export function gloveMessage(angles: number[], seq: number): string {
  if (angles.length !== 5 || !angles.every(isNumber)) {
    throw new WireError("glove sample needs five finite angles");
  }
  if (angles.some((a) => a < 0 || a > 180)) {
    throw new WireError("glove angles must lie in [0, 180]");
  }
  return JSON.stringify({ type: "glove_sample", angles, seq });
}

export interface ConfigUpdate {
  safety_limit?: number;
  cv_interval_ticks?: number;
  telemetry_verbose?: boolean;
}

export function configUpdateMessage(fields: ConfigUpdate, seq: number): string {
  if (Object.keys(fields).length === 0) {
    throw new WireError("config update is empty");
  }
  return JSON.stringify({ type: "config_update", seq, ...fields });
}
