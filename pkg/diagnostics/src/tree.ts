/**
 * CART-style regression tree with variance-reduction splits. Trees carry
 * per-node coverage (training rows reaching the node) because the
 * Shapley attribution walks weight paths by coverage ratios.
 */

import { SplitMix64 } from './rng.js';
import type { TreeNode, TreeSplit } from './types.js';

export interface TreeFitOptions {
  maxDepth: number;
  minLeaf: number;
  mtry: number;
  rng: SplitMix64;
}

interface BestSplit {
  feature: number;
  threshold: number;
  score: number;
}

function sumOf(ys: number[], idx: number[]): { s: number; s2: number } {
  let s = 0;
  let s2 = 0;
  for (const i of idx) {
    s += ys[i];
    s2 += ys[i] * ys[i];
  }
  return { s, s2 };
}

function bestSplitFor(
  X: number[][],
  y: number[],
  idx: number[],
  feature: number,
  minLeaf: number,
): BestSplit | null {
  const order = [...idx].sort((a, b) => X[a][feature] - X[b][feature] || a - b);
  const n = order.length;
  const { s: total } = sumOf(y, order);
  let leftSum = 0;
  let best: BestSplit | null = null;
  for (let i = 0; i < n - 1; i++) {
    leftSum += y[order[i]];
    const a = X[order[i]][feature];
    const b = X[order[i + 1]][feature];
    if (a === b) continue;
    const nl = i + 1;
    const nr = n - nl;
    if (nl < minLeaf || nr < minLeaf) continue;
    // Maximizing sum of squared child means weighted by size minimizes SSE.
    const rightSum = total - leftSum;
    const score = (leftSum * leftSum) / nl + (rightSum * rightSum) / nr;
    if (best === null || score > best.score) {
      best = { feature, threshold: (a + b) / 2, score };
    }
  }
  return best;
}

export function fitTree(
  X: number[][],
  y: number[],
  idx: number[],
  options: TreeFitOptions,
  depth = 0,
): TreeNode {
  const n = idx.length;
  const { s } = sumOf(y, idx);
  const value = s / n;
  const constantTarget = idx.every((i) => y[i] === y[idx[0]]);
  if (depth >= options.maxDepth || n < 2 * options.minLeaf || constantTarget) {
    return { kind: 'leaf', value, cover: n };
  }
  const nFeatures = X[0].length;
  const candidates = Array.from({ length: nFeatures }, (_, f) => f);
  options.rng.shuffle(candidates);
  const mtry = options.mtry > 0 ? Math.min(options.mtry, nFeatures) : nFeatures;

  let best: BestSplit | null = null;
  for (const feature of candidates.slice(0, mtry)) {
    const candidate = bestSplitFor(X, y, idx, feature, options.minLeaf);
    if (candidate && (best === null || candidate.score > best.score)) {
      best = candidate;
    }
  }
  if (best === null) {
    return { kind: 'leaf', value, cover: n };
  }
  const leftIdx = idx.filter((i) => X[i][best!.feature] <= best!.threshold);
  const rightIdx = idx.filter((i) => X[i][best!.feature] > best!.threshold);
  const node: TreeSplit = {
    kind: 'split',
    feature: best.feature,
    threshold: best.threshold,
    value,
    cover: n,
    left: fitTree(X, y, leftIdx, options, depth + 1),
    right: fitTree(X, y, rightIdx, options, depth + 1),
  };
  return node;
}

export function predictTree(node: TreeNode, x: number[]): number {
  let current = node;
  while (current.kind === 'split') {
    current = x[current.feature] <= current.threshold ? current.left : current.right;
  }
  return current.value;
}

/** Coverage-weighted expected value of the tree (the SHAP baseline). */
export function treeExpectedValue(node: TreeNode): number {
  if (node.kind === 'leaf') return node.value;
  const { left, right, cover } = node;
  return (left.cover * treeExpectedValue(left) + right.cover * treeExpectedValue(right)) / cover;
}
