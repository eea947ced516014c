/** Binary PPM (P6) decoding for the telemetry frame stream. */

export interface RgbImage {
  width: number;
  height: number;
  /** RGBA, ready for a canvas ImageData. */
  rgba: Uint8ClampedArray<ArrayBuffer>;
}

export class PpmError extends Error {}

function isSpace(byte: number): boolean {
  return byte === 0x20 || byte === 0x09 || byte === 0x0a || byte === 0x0d;
}

export function decodePpm(bytes: Uint8Array): RgbImage {
  const fields: string[] = [];
  let pos = 0;
  while (fields.length < 4) {
    while (pos < bytes.length && isSpace(bytes[pos])) pos++;
    if (bytes[pos] === 0x23) { // '#' comment to end of line
      while (pos < bytes.length && bytes[pos] !== 0x0a) pos++;
      continue;
    }
    const start = pos;
    while (pos < bytes.length && !isSpace(bytes[pos])) pos++;
    if (pos === start) throw new PpmError("truncated PPM header");
    fields.push(String.fromCharCode(...bytes.subarray(start, pos)));
    if (fields.length === 4) pos++; // single whitespace byte after maxval
  }
  if (fields[0] !== "P6") throw new PpmError("not a binary PPM (P6)");
  const width = Number(fields[1]);
  const height = Number(fields[2]);
  const maxval = Number(fields[3]);
  if (!Number.isInteger(width) || !Number.isInteger(height)
      || width <= 0 || height <= 0) {
    throw new PpmError("bad PPM dimensions");
  }
  if (maxval !== 255) throw new PpmError("only maxval 255 is supported");
  const n = width * height;
  if (bytes.length - pos < n * 3) throw new PpmError("truncated PPM raster");

  const rgba = new Uint8ClampedArray(n * 4);
  for (let i = 0; i < n; i++) {
    rgba[i * 4] = bytes[pos + i * 3];
    rgba[i * 4 + 1] = bytes[pos + i * 3 + 1];
    rgba[i * 4 + 2] = bytes[pos + i * 3 + 2];
    rgba[i * 4 + 3] = 255;
  }
  return { width, height, rgba };
}

export function decodeBase64Ppm(b64: string): RgbImage {
  const binary = atob(b64);
  const bytes = new Uint8Array(binary.length);
  for (let i = 0; i < binary.length; i++) bytes[i] = binary.charCodeAt(i);
  return decodePpm(bytes);
}
