/**
 * Exact Shapley attribution for tree ensembles (the polynomial-time
 * TreeSHAP recursion of Lundberg, Erion & Lee). Conditional expectations
 * are defined by coverage-weighted tree paths, so local accuracy holds
 * exactly: baseline + sum(phi) equals the model prediction, which the
 * test suite checks to 1e-6.
 */

import { RandomForest } from './forest.js';
import type { TreeNode } from './types.js';

interface PathElement {
  d: number; // feature index, -1 for the root sentinel
  z: number; // fraction of zero (feature hidden) paths flowing through
  o: number; // fraction of one (feature shown) paths flowing through
  w: number; // permutation weight
}

function extendPath(m: PathElement[], pz: number, po: number, pi: number): void {
  const l = m.length;
  m.push({ d: pi, z: pz, o: po, w: l === 0 ? 1 : 0 });
  for (let i = l - 1; i >= 0; i--) {
    m[i + 1].w += (po * m[i].w * (i + 1)) / (l + 1);
    m[i].w = (pz * m[i].w * (l - i)) / (l + 1);
  }
}

function unwindPath(m: PathElement[], index: number): PathElement[] {
  const out = m.map((e) => ({ ...e }));
  const l = out.length - 1;
  const { z, o } = out[index];
  let next = out[l].w;
  for (let j = l - 1; j >= 0; j--) {
    if (o !== 0) {
      const tmp = out[j].w;
      out[j].w = (next * (l + 1)) / ((j + 1) * o);
      next = tmp - (out[j].w * z * (l - j)) / (l + 1);
    } else {
      out[j].w = (out[j].w * (l + 1)) / (z * (l - j));
    }
  }
  for (let j = index; j < l; j++) {
    out[j] = { d: out[j + 1].d, z: out[j + 1].z, o: out[j + 1].o, w: out[j].w };
  }
  out.pop();
  return out;
}

function unwoundPathSum(m: PathElement[], index: number): number {
  const l = m.length - 1;
  const { z, o } = m[index];
  let next = m[l].w;
  let total = 0;
  if (o !== 0) {
    for (let j = l - 1; j >= 0; j--) {
      const tmp = next / ((j + 1) * o);
      total += tmp;
      next = m[j].w - tmp * z * (l - j);
    }
  } else {
    for (let j = l - 1; j >= 0; j--) {
      total += m[j].w / (z * (l - j));
    }
  }
  return total * (l + 1);
}

export function treeShapValues(tree: TreeNode, x: number[], nFeatures: number): number[] {
  const phi = new Array<number>(nFeatures).fill(0);

  function recurse(node: TreeNode, path: PathElement[], pz: number, po: number, pi: number): void {
    const m = path.map((e) => ({ ...e }));
    extendPath(m, pz, po, pi);
    if (node.kind === 'leaf') {
      for (let i = 1; i < m.length; i++) {
        const w = unwoundPathSum(m, i);
        phi[m[i].d] += w * (m[i].o - m[i].z) * node.value;
      }
      return;
    }
    const goesLeft = x[node.feature] <= node.threshold;
    const hot = goesLeft ? node.left : node.right;
    const cold = goesLeft ? node.right : node.left;
    let iz = 1;
    let io = 1;
    let current = m;
    const seen = m.findIndex((e) => e.d === node.feature);
    if (seen >= 0) {
      iz = m[seen].z;
      io = m[seen].o;
      current = unwindPath(m, seen);
    }
    recurse(hot, current, (iz * hot.cover) / node.cover, io, node.feature);
    recurse(cold, current, (iz * cold.cover) / node.cover, 0, node.feature);
  }

  recurse(tree, [], 1, 1, -1);
  return phi;
}

/** Mean per-tree Shapley values for one sample under a forest. */
export function forestShapValues(forest: RandomForest, x: number[], nFeatures: number): number[] {
  const phi = new Array<number>(nFeatures).fill(0);
  for (const tree of forest.trees) {
    const contribution = treeShapValues(tree, x, nFeatures);
    for (let f = 0; f < nFeatures; f++) phi[f] += contribution[f];
  }
  return phi.map((v) => v / forest.trees.length);
}

export function shapMatrix(forest: RandomForest, X: number[][]): number[][] {
  const nFeatures = X[0]?.length ?? 0;
  return X.map((x) => forestShapValues(forest, x, nFeatures));
}

export function meanAbsByFeature(shap: number[][]): number[] {
  if (shap.length === 0) return [];
  const out = new Array<number>(shap[0].length).fill(0);
  for (const row of shap) {
    for (let f = 0; f < row.length; f++) out[f] += Math.abs(row[f]);
  }
  return out.map((v) => v / shap.length);
}
