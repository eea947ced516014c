/** Byte-hue color rendering, matching the LED convention on the wire
 * (hue byte h maps to h * 360 / 256 degrees, full saturation and value). */

export function byteHueToRgb(hue: number): [number, number, number] {
  const deg = ((hue * 360) / 256) % 360;
  const h = deg / 60;
  const x = 1 - Math.abs((h % 2) - 1);
  const sector = Math.floor(h) % 6;
  const table: [number, number, number][] = [
    [1, x, 0], [x, 1, 0], [0, 1, x], [0, x, 1], [x, 0, 1], [1, 0, x],
  ];
  const [r, g, b] = table[sector];
  return [Math.round(r * 255), Math.round(g * 255), Math.round(b * 255)];
}

export function byteHueToCss(hue: number): string {
  const [r, g, b] = byteHueToRgb(hue);
  return `rgb(${r}, ${g}, ${b})`;
}
