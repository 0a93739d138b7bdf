/** Minimal deterministic SVG plotting primitives.
 *
 * Everything is plain string assembly with fixed canvas size, fonts and
 * formatting, so identical inputs yield byte-identical files.  No DOM, no
 * raster backend.
 */

export const WIDTH = 660;
export const HEIGHT = 440;
export const MARGIN = { top: 34, right: 24, bottom: 48, left: 64 };

export const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#e377c2",
];

const FONT = 'font-family="Helvetica,Arial,sans-serif"';

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Fixed 2-decimal coordinate formatting; "-0.00" normalized to "0.00". */
export function fmt(value: number): string {
  const s = value.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

function fmtTick(value: number): string {
  if (Number.isInteger(value)) return String(value);
  const s = value
    .toFixed(4)
    .replace(/0+$/, "")
    .replace(/\.$/, "");
  return s === "-0" ? "0" : s;
}

/** Round tick positions covering [lo, hi] with roughly `count` steps. */
export function niceTicks(lo: number, hi: number, count = 6): number[] {
  if (!(hi > lo)) {
    const pad = Math.abs(lo) > 0 ? Math.abs(lo) * 0.5 : 1;
    return niceTicks(lo - pad, lo + pad, count);
  }
  const raw = (hi - lo) / Math.max(1, count);
  const magnitude = Math.pow(10, Math.floor(Math.log10(raw)));
  let step = magnitude * 10;
  for (const mult of [1, 2, 5]) {
    if (magnitude * mult >= raw) {
      step = magnitude * mult;
      break;
    }
  }
  const decimals = Math.max(0, -Math.floor(Math.log10(step))) + 1;
  const first = Math.ceil(lo / step - 1e-9);
  const last = Math.floor(hi / step + 1e-9);
  const out: number[] = [];
  for (let i = first; i <= last; i++) {
    out.push(Number((i * step).toFixed(decimals)));
  }
  return out;
}

export class Scale {
  constructor(
    readonly d0: number,
    readonly d1: number,
    readonly r0: number,
    readonly r1: number,
  ) {}

  map(value: number): number {
    const span = this.d1 - this.d0;
    const t = span === 0 ? 0.5 : (value - this.d0) / span;
    return this.r0 + t * (this.r1 - this.r0);
  }
}

export function padDomain(lo: number, hi: number, frac = 0.05): [number, number] {
  if (hi === lo) return [lo - 1, hi + 1];
  const pad = (hi - lo) * frac;
  return [lo - pad, hi + pad];
}

export function polyline(
  points: Array<[number, number]>,
  stroke: string,
  options: { width?: number; dash?: string } = {},
): string {
  const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
  const dash = options.dash ? ` stroke-dasharray="${options.dash}"` : "";
  return (
    `<polyline fill="none" stroke="${stroke}" ` +
    `stroke-width="${options.width ?? 1.5}"${dash} points="${pts}"/>`
  );
}

export function circle(x: number, y: number, r: number, fill: string): string {
  return `<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${fmt(r)}" fill="${fill}"/>`;
}

export function rect(
  x: number,
  y: number,
  w: number,
  h: number,
  fill: string,
): string {
  return (
    `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" ` +
    `height="${fmt(h)}" fill="${fill}"/>`
  );
}

export function text(
  x: number,
  y: number,
  value: string,
  options: { size?: number; anchor?: string; fill?: string; rotate?: boolean } = {},
): string {
  const anchor = options.anchor ?? "start";
  const size = options.size ?? 11;
  const fill = options.fill ?? "#222";
  const transform = options.rotate
    ? ` transform="rotate(-90 ${fmt(x)} ${fmt(y)})"`
    : "";
  return (
    `<text x="${fmt(x)}" y="${fmt(y)}" ${FONT} font-size="${size}" ` +
    `text-anchor="${anchor}" fill="${fill}"${transform}>${esc(value)}</text>`
  );
}

export interface Axes {
  x: Scale;
  y: Scale;
  parts: string[];
}

/** Plot frame: clipped axes box, grid lines, tick labels, axis titles. */
export function axes(
  xDomain: [number, number],
  yDomain: [number, number],
  xLabel: string,
  yLabel: string,
  title: string,
): Axes {
  const x = new Scale(xDomain[0], xDomain[1], MARGIN.left, WIDTH - MARGIN.right);
  const y = new Scale(yDomain[0], yDomain[1], HEIGHT - MARGIN.bottom, MARGIN.top);
  const parts: string[] = [];
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" ` +
      `width="${WIDTH - MARGIN.left - MARGIN.right}" ` +
      `height="${HEIGHT - MARGIN.top - MARGIN.bottom}" ` +
      `fill="#fcfcfc" stroke="#333" stroke-width="1"/>`,
  );
  for (const tick of niceTicks(xDomain[0], xDomain[1])) {
    const px = x.map(tick);
    parts.push(
      `<line x1="${fmt(px)}" y1="${MARGIN.top}" x2="${fmt(px)}" ` +
        `y2="${HEIGHT - MARGIN.bottom}" stroke="#e0e0e0" stroke-width="0.5"/>`,
    );
    parts.push(
      text(px, HEIGHT - MARGIN.bottom + 16, fmtTick(tick), {
        anchor: "middle",
      }),
    );
  }
  for (const tick of niceTicks(yDomain[0], yDomain[1])) {
    const py = y.map(tick);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${fmt(py)}" x2="${WIDTH - MARGIN.right}" ` +
        `y2="${fmt(py)}" stroke="#e0e0e0" stroke-width="0.5"/>`,
    );
    parts.push(text(MARGIN.left - 8, py + 4, fmtTick(tick), { anchor: "end" }));
  }
  parts.push(
    text(WIDTH / 2, HEIGHT - 12, xLabel, { anchor: "middle", size: 12 }),
    text(18, HEIGHT / 2, yLabel, { anchor: "middle", size: 12, rotate: true }),
    text(WIDTH / 2, 20, title, { anchor: "middle", size: 13 }),
  );
  return { x, y, parts };
}

export type LegendCorner = "tr" | "br" | "tl" | "bl";

export function legend(
  entries: Array<{ label: string; color: string; dash?: string }>,
  corner: LegendCorner = "tr",
): string[] {
  const lineHeight = 16;
  const boxWidth = 8 + 24 + 6 + 13 + Math.max(...entries.map((e) => e.label.length)) * 6.2;
  const boxHeight = entries.length * lineHeight + 10;
  const x0 = corner.endsWith("l")
    ? MARGIN.left + 8
    : WIDTH - MARGIN.right - boxWidth - 8;
  const y0 = corner.startsWith("t")
    ? MARGIN.top + 8
    : HEIGHT - MARGIN.bottom - boxHeight - 8;
  const parts: string[] = [
    `<rect x="${fmt(x0)}" y="${fmt(y0)}" width="${fmt(boxWidth)}" ` +
      `height="${fmt(boxHeight)}" fill="#ffffff" fill-opacity="0.85" ` +
      `stroke="#999" stroke-width="0.5"/>`,
  ];
  entries.forEach((entry, i) => {
    const cy = y0 + 14 + i * lineHeight;
    parts.push(
      polyline(
        [
          [x0 + 8, cy - 4],
          [x0 + 32, cy - 4],
        ],
        entry.color,
        { width: 2, dash: entry.dash },
      ),
    );
    parts.push(text(x0 + 38, cy, entry.label, { size: 10.5 }));
  });
  return parts;
}

export function document(parts: string[]): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" ` +
    `height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">\n` +
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>\n` +
    parts.join("\n") +
    "\n</svg>\n"
  );
}
