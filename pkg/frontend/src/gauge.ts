/** Force gauge geometry for the dashboard, on the fixed [0, 4] scale. */

export const FORCE_SCALE_MAX = 4.0;

export type GaugeZone = "idle" | "ok" | "warn" | "over";

export interface GaugeView {
  fraction: number;        // filled portion of the gauge, [0, 1]
  limitFraction: number;   // where the safety mark sits, [0, 1]
  zone: GaugeZone;
  label: string;
}

export function gaugeView(force: number | null, valid: boolean,
                          safetyLimit: number): GaugeView {
  const limitFraction = Math.min(Math.max(safetyLimit / FORCE_SCALE_MAX, 0), 1);
  if (force === null || !valid) {
    return { fraction: 0, limitFraction, zone: "idle", label: "no estimate" };
  }
  const clamped = Math.min(Math.max(force, 0), FORCE_SCALE_MAX);
  const fraction = clamped / FORCE_SCALE_MAX;
  let zone: GaugeZone = "ok";
  if (force > safetyLimit) zone = "over";
  else if (force > 0.8 * safetyLimit) zone = "warn";
  return { fraction, limitFraction, zone, label: clamped.toFixed(2) };
}
