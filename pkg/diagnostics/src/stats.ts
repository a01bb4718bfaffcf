/**
 * Elementary statistics used across the pipeline: Pearson correlation
 * with a two-sided t-test p-value, least-squares fit lines for the
 * scatter plots, and histogram binning.
 */

export function mean(xs: number[]): number {
  if (xs.length === 0) throw new Error('mean of empty sample');
  return xs.reduce((a, b) => a + b, 0) / xs.length;
}

export function variance(xs: number[]): number {
  const m = mean(xs);
  return xs.reduce((a, x) => a + (x - m) * (x - m), 0) / xs.length;
}

/** Lanczos approximation of log Gamma. */
export function logGamma(x: number): number {
  const g = [
    676.5203681218851, -1259.1392167224028, 771.32342877765313,
    -176.61502916214059, 12.507343278686905, -0.13857109526572012,
    9.9843695780195716e-6, 1.5056327351493116e-7,
  ];
  if (x < 0.5) {
    return Math.log(Math.PI / Math.sin(Math.PI * x)) - logGamma(1 - x);
  }
  x -= 1;
  let a = 0.99999999999980993;
  const t = x + 7.5;
  for (let i = 0; i < g.length; i++) a += g[i] / (x + i + 1);
  return 0.5 * Math.log(2 * Math.PI) + (x + 0.5) * Math.log(t) - t + Math.log(a);
}

/** Continued fraction for the regularized incomplete beta (Lentz). */
function betaContinuedFraction(a: number, b: number, x: number): number {
  const EPS = 1e-14;
  const FPMIN = 1e-300;
  const qab = a + b;
  const qap = a + 1;
  const qam = a - 1;
  let c = 1;
  let d = 1 - (qab * x) / qap;
  if (Math.abs(d) < FPMIN) d = FPMIN;
  d = 1 / d;
  let h = d;
  for (let m = 1; m <= 300; m++) {
    const m2 = 2 * m;
    let aa = (m * (b - m) * x) / ((qam + m2) * (a + m2));
    d = 1 + aa * d;
    if (Math.abs(d) < FPMIN) d = FPMIN;
    c = 1 + aa / c;
    if (Math.abs(c) < FPMIN) c = FPMIN;
    d = 1 / d;
    h *= d * c;
    aa = (-(a + m) * (qab + m) * x) / ((a + m2) * (qap + m2));
    d = 1 + aa * d;
    if (Math.abs(d) < FPMIN) d = FPMIN;
    c = 1 + aa / c;
    if (Math.abs(c) < FPMIN) c = FPMIN;
    d = 1 / d;
    const del = d * c;
    h *= del;
    if (Math.abs(del - 1) < EPS) break;
  }
  return h;
}

/** Regularized incomplete beta function I_x(a, b). */
export function regularizedIncompleteBeta(a: number, b: number, x: number): number {
  if (x <= 0) return 0;
  if (x >= 1) return 1;
  const lnBt = logGamma(a + b) - logGamma(a) - logGamma(b) + a * Math.log(x) + b * Math.log(1 - x);
  const bt = Math.exp(lnBt);
  if (x < (a + 1) / (a + b + 2)) {
    return (bt * betaContinuedFraction(a, b, x)) / a;
  }
  return 1 - (bt * betaContinuedFraction(b, a, 1 - x)) / b;
}

/** Two-sided p-value of a t statistic with `df` degrees of freedom. */
export function studentTwoSidedP(t: number, df: number): number {
  if (!Number.isFinite(t)) return 0;
  return regularizedIncompleteBeta(df / 2, 0.5, df / (df + t * t));
}

export interface PearsonResult {
  r: number;
  p: number;
  n: number;
}

/**
 * Pearson correlation with a two-sided t-test p-value.
 * Requires n >= 3 and nonzero variance on both sides.
 */
export function pearson(xs: number[], ys: number[]): PearsonResult {
  const n = xs.length;
  if (n !== ys.length) throw new Error('pearson: length mismatch');
  if (n < 3) throw new Error(`pearson: need at least 3 points, got ${n}`);
  const mx = mean(xs);
  const my = mean(ys);
  let sxy = 0;
  let sxx = 0;
  let syy = 0;
  for (let i = 0; i < n; i++) {
    const dx = xs[i] - mx;
    const dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx === 0 || syy === 0) {
    throw new Error('pearson: degenerate variance');
  }
  let r = sxy / Math.sqrt(sxx * syy);
  r = Math.max(-1, Math.min(1, r));
  const df = n - 2;
  const denom = 1 - r * r;
  const p = denom <= Number.EPSILON ? 0 : studentTwoSidedP(r * Math.sqrt(df / denom), df);
  return { r, p, n };
}

export interface LinearFit {
  slope: number;
  intercept: number;
}

export function leastSquares(xs: number[], ys: number[]): LinearFit {
  const mx = mean(xs);
  const my = mean(ys);
  let sxy = 0;
  let sxx = 0;
  for (let i = 0; i < xs.length; i++) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const slope = sxx === 0 ? 0 : sxy / sxx;
  return { slope, intercept: my - slope * mx };
}

/** Coefficient of determination of predictions against truth. */
export function rSquared(truth: number[], predicted: number[]): number {
  const my = mean(truth);
  let ssRes = 0;
  let ssTot = 0;
  for (let i = 0; i < truth.length; i++) {
    ssRes += (truth[i] - predicted[i]) ** 2;
    ssTot += (truth[i] - my) ** 2;
  }
  return ssTot === 0 ? 0 : 1 - ssRes / ssTot;
}

export interface Histogram {
  edges: number[];
  counts: number[];
}

export function histogram(xs: number[], bins: number, lo?: number, hi?: number): Histogram {
  if (bins <= 0) throw new Error('histogram: bins must be positive');
  const min = lo ?? Math.min(...xs);
  const max = hi ?? Math.max(...xs);
  const width = max > min ? (max - min) / bins : 1;
  const counts = new Array<number>(bins).fill(0);
  for (const x of xs) {
    let k = Math.floor((x - min) / width);
    if (k >= bins) k = bins - 1;
    if (k < 0) k = 0;
    counts[k] += 1;
  }
  const edges = Array.from({ length: bins + 1 }, (_, i) => min + i * width);
  return { edges, counts };
}
