/** Test-only builders and the brute-force Shapley oracle. */

import { SplitMix64 } from '../src/rng.js';
import type { ResultRow, TreeNode } from '../src/types.js';

export function syntheticRows(
  n: number,
  seed: number,
  target: (f: {
    effect_depth: number;
    hoa_states: number;
    transition_count: number;
    causal_inputs_count: number;
    unique_inputs_in_trace: number;
  }, noise: () => number) => { f1_ap: number; f1_ts: number },
): ResultRow[] {
  const rng = new SplitMix64(seed);
  const rows: ResultRow[] = [];
  for (let i = 0; i < n; i++) {
    const features = {
      effect_depth: rng.int(9),
      hoa_states: 2 + rng.int(30),
      transition_count: 2 + rng.int(120),
      causal_inputs_count: rng.int(12),
      unique_inputs_in_trace: rng.int(6),
    };
    const { f1_ap, f1_ts } = target(features, () => rng.next());
    rows.push({
      taskId: `t${String(i).padStart(4, '0')}`,
      model: 'synthetic',
      difficulty: i % 2 === 0 ? 'normal' : 'hard',
      f1_ap,
      f1_ts,
      ...features,
      log10_transition_count: Math.log10(Math.max(features.transition_count, 0.5)),
      log10_hoa_states: Math.log10(Math.max(features.hoa_states, 0.5)),
      log10_unique_inputs_in_trace: Math.log10(Math.max(features.unique_inputs_in_trace, 0.5)),
      logZeroFlags: [],
    });
  }
  return rows;
}

/** E[f(x) | x_S] with the tree-path conditional expectation semantics. */
export function expectedValueWithSubset(node: TreeNode, x: number[], subset: Set<number>): number {
  if (node.kind === 'leaf') return node.value;
  if (subset.has(node.feature)) {
    const child = x[node.feature] <= node.threshold ? node.left : node.right;
    return expectedValueWithSubset(child, x, subset);
  }
  return (
    (node.left.cover * expectedValueWithSubset(node.left, x, subset) +
      node.right.cover * expectedValueWithSubset(node.right, x, subset)) /
    node.cover
  );
}

function factorial(n: number): number {
  let out = 1;
  for (let i = 2; i <= n; i++) out *= i;
  return out;
}

/** Exponential-time Shapley values straight from the definition. */
export function bruteForceShap(tree: TreeNode, x: number[], nFeatures: number): number[] {
  const features = Array.from({ length: nFeatures }, (_, i) => i);
  const phi = new Array<number>(nFeatures).fill(0);
  for (const i of features) {
    const others = features.filter((f) => f !== i);
    for (let bits = 0; bits < 1 << others.length; bits++) {
      const subset = new Set<number>();
      for (let k = 0; k < others.length; k++) {
        if ((bits >> k) & 1) subset.add(others[k]);
      }
      const weight =
        (factorial(subset.size) * factorial(nFeatures - subset.size - 1)) / factorial(nFeatures);
      const withoutI = expectedValueWithSubset(tree, x, subset);
      subset.add(i);
      const withI = expectedValueWithSubset(tree, x, subset);
      phi[i] += weight * (withI - withoutI);
    }
  }
  return phi;
}
