/**
 * Self-contained SVG renderers: correlation scatters with fit lines and
 * R/p annotations, Shapley beeswarm charts, and F1 histograms. Output is
 * plain markup with no runtime dependencies, deterministic per input.
 */

import type { Histogram, LinearFit } from './stats.js';

const WIDTH = 640;
const HEIGHT = 420;
const MARGIN = { top: 40, right: 24, bottom: 48, left: 64 };

function fmt(x: number): string {
  return Number.isInteger(x) ? String(x) : x.toPrecision(4);
}

function escapeXml(s: string): string {
  return s.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');
}

interface Scale {
  (value: number): number;
  lo: number;
  hi: number;
}

function scale(lo: number, hi: number, rangeLo: number, rangeHi: number): Scale {
  const span = hi > lo ? hi - lo : 1;
  const fn = ((value: number) =>
    rangeLo + ((value - lo) / span) * (rangeHi - rangeLo)) as Scale;
  fn.lo = lo;
  fn.hi = hi;
  return fn;
}

function axes(xLabel: string, yLabel: string, title: string, xs: Scale, ys: Scale): string {
  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const ticks = 5;
  const parts: string[] = [];
  parts.push(
    `<text x="${WIDTH / 2}" y="20" text-anchor="middle" font-size="14" font-weight="bold">${escapeXml(title)}</text>`,
  );
  parts.push(
    `<line x1="${MARGIN.left}" y1="${HEIGHT - MARGIN.bottom}" x2="${WIDTH - MARGIN.right}" y2="${HEIGHT - MARGIN.bottom}" stroke="black"/>`,
    `<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" y2="${HEIGHT - MARGIN.bottom}" stroke="black"/>`,
  );
  for (let i = 0; i <= ticks; i++) {
    const vx = xs.lo + ((xs.hi - xs.lo) * i) / ticks;
    const px = MARGIN.left + (plotW * i) / ticks;
    parts.push(
      `<line x1="${px}" y1="${HEIGHT - MARGIN.bottom}" x2="${px}" y2="${HEIGHT - MARGIN.bottom + 4}" stroke="black"/>`,
      `<text x="${px}" y="${HEIGHT - MARGIN.bottom + 18}" text-anchor="middle" font-size="10">${fmt(vx)}</text>`,
    );
    const vy = ys.lo + ((ys.hi - ys.lo) * i) / ticks;
    const py = ys(vy);
    parts.push(
      `<line x1="${MARGIN.left - 4}" y1="${py}" x2="${MARGIN.left}" y2="${py}" stroke="black"/>`,
      `<text x="${MARGIN.left - 8}" y="${py + 3}" text-anchor="end" font-size="10">${fmt(vy)}</text>`,
    );
  }
  parts.push(
    `<text x="${WIDTH / 2}" y="${HEIGHT - 10}" text-anchor="middle" font-size="12">${escapeXml(xLabel)}</text>`,
    `<text x="16" y="${HEIGHT / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 16 ${HEIGHT / 2})">${escapeXml(yLabel)}</text>`,
  );
  return parts.join('\n');
}

function svgDocument(body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">\n` +
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>\n` +
    body +
    '\n</svg>\n'
  );
}

export interface ScatterSpec {
  xs: number[];
  ys: number[];
  xLabel: string;
  yLabel: string;
  title: string;
  fit: LinearFit;
  annotation: string;
}

export function scatterPlot(spec: ScatterSpec): string {
  const sx = scale(Math.min(...spec.xs), Math.max(...spec.xs), MARGIN.left, WIDTH - MARGIN.right);
  const sy = scale(Math.min(...spec.ys), Math.max(...spec.ys), HEIGHT - MARGIN.bottom, MARGIN.top);
  const parts: string[] = [axes(spec.xLabel, spec.yLabel, spec.title, sx, sy)];
  for (let i = 0; i < spec.xs.length; i++) {
    parts.push(
      `<circle cx="${sx(spec.xs[i]).toFixed(2)}" cy="${sy(spec.ys[i]).toFixed(2)}" r="3" fill="steelblue" fill-opacity="0.55"/>`,
    );
  }
  const y1 = spec.fit.intercept + spec.fit.slope * sx.lo;
  const y2 = spec.fit.intercept + spec.fit.slope * sx.hi;
  parts.push(
    `<line x1="${sx(sx.lo)}" y1="${sy(y1).toFixed(2)}" x2="${sx(sx.hi)}" y2="${sy(y2).toFixed(2)}" stroke="crimson" stroke-width="2"/>`,
  );
  parts.push(
    `<text x="${WIDTH - MARGIN.right}" y="${MARGIN.top - 6}" text-anchor="end" font-size="12">${escapeXml(spec.annotation)}</text>`,
  );
  return svgDocument(parts.join('\n'));
}

export interface BeeswarmSpec {
  /** Feature names ranked most-important first. */
  features: string[];
  /** shap[row][featureIndexInFeatures] */
  shap: number[][];
  /** Raw feature values, same shape, used for point coloring. */
  values: number[][];
  title: string;
}

/** Deterministic stacked jitter: points binned by x, fanned around the row line. */
export function beeswarmPlot(spec: BeeswarmSpec): string {
  const all = spec.shap.flat();
  const lo = Math.min(...all, 0);
  const hi = Math.max(...all, 0);
  const sx = scale(lo, hi, MARGIN.left, WIDTH - MARGIN.right);
  const rowGap = (HEIGHT - MARGIN.top - MARGIN.bottom) / Math.max(spec.features.length, 1);
  const parts: string[] = [
    `<text x="${WIDTH / 2}" y="20" text-anchor="middle" font-size="14" font-weight="bold">${escapeXml(spec.title)}</text>`,
    `<line x1="${sx(0)}" y1="${MARGIN.top}" x2="${sx(0)}" y2="${HEIGHT - MARGIN.bottom}" stroke="#999" stroke-dasharray="4 3"/>`,
    `<text x="${WIDTH / 2}" y="${HEIGHT - 10}" text-anchor="middle" font-size="12">Shapley value (impact on prediction)</text>`,
  ];
  for (let f = 0; f < spec.features.length; f++) {
    const rowY = MARGIN.top + rowGap * (f + 0.5);
    parts.push(
      `<text x="${MARGIN.left - 8}" y="${rowY + 3}" text-anchor="end" font-size="11">${escapeXml(spec.features[f])}</text>`,
      `<line x1="${MARGIN.left}" y1="${rowY}" x2="${WIDTH - MARGIN.right}" y2="${rowY}" stroke="#eee"/>`,
    );
    const columnValues = spec.values.map((row) => row[f]);
    const vLo = Math.min(...columnValues);
    const vHi = Math.max(...columnValues);
    const bins = new Map<number, number>();
    for (let r = 0; r < spec.shap.length; r++) {
      const x = sx(spec.shap[r][f]);
      const bin = Math.round(x / 6);
      const stack = bins.get(bin) ?? 0;
      bins.set(bin, stack + 1);
      const offset = (stack % 2 === 0 ? 1 : -1) * Math.ceil(stack / 2) * 4;
      const heat = vHi > vLo ? (columnValues[r] - vLo) / (vHi - vLo) : 0.5;
      const red = Math.round(40 + heat * 200);
      const blue = Math.round(240 - heat * 200);
      parts.push(
        `<circle cx="${x.toFixed(2)}" cy="${(rowY + offset).toFixed(2)}" r="2.5" fill="rgb(${red},60,${blue})" fill-opacity="0.8"/>`,
      );
    }
  }
  return svgDocument(parts.join('\n'));
}

export function histogramPlot(h: Histogram, xLabel: string, title: string): string {
  const total = h.counts.reduce((a, b) => a + b, 0);
  const sx = scale(h.edges[0], h.edges[h.edges.length - 1], MARGIN.left, WIDTH - MARGIN.right);
  const sy = scale(0, Math.max(...h.counts, 1), HEIGHT - MARGIN.bottom, MARGIN.top);
  const parts: string[] = [axes(xLabel, 'count', `${title} (n=${total})`, sx, sy)];
  for (let i = 0; i < h.counts.length; i++) {
    const x0 = sx(h.edges[i]);
    const x1 = sx(h.edges[i + 1]);
    const y = sy(h.counts[i]);
    parts.push(
      `<rect x="${x0.toFixed(2)}" y="${y.toFixed(2)}" width="${(x1 - x0 - 1).toFixed(2)}" height="${(HEIGHT - MARGIN.bottom - y).toFixed(2)}" fill="steelblue" fill-opacity="0.8"/>`,
    );
  }
  return svgDocument(parts.join('\n'));
}
