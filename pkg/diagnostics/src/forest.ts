/** Random-forest regressor: bootstrap rows, feature-subsampled splits. */

import { SplitMix64 } from './rng.js';
import { fitTree, predictTree, treeExpectedValue } from './tree.js';
import type { ForestOptions, TreeNode } from './types.js';

export class RandomForest {
  readonly trees: TreeNode[] = [];
  readonly options: ForestOptions;

  constructor(options: ForestOptions) {
    this.options = options;
  }

  fit(X: number[][], y: number[]): this {
    if (X.length !== y.length) throw new Error('forest: X/y length mismatch');
    if (X.length === 0) throw new Error('forest: empty training set');
    const rng = new SplitMix64(this.options.seed);
    const nFeatures = X[0].length;
    const mtry = this.options.mtry > 0 ? this.options.mtry : Math.max(1, Math.floor(nFeatures / 3));
    for (let t = 0; t < this.options.nTrees; t++) {
      const bootstrap = Array.from({ length: X.length }, () => rng.int(X.length));
      this.trees.push(
        fitTree(X, y, bootstrap, {
          maxDepth: this.options.maxDepth,
          minLeaf: this.options.minLeaf,
          mtry,
          rng,
        }),
      );
    }
    return this;
  }

  predictOne(x: number[]): number {
    let total = 0;
    for (const tree of this.trees) total += predictTree(tree, x);
    return total / this.trees.length;
  }

  predict(X: number[][]): number[] {
    return X.map((x) => this.predictOne(x));
  }

  /** Mean of per-tree coverage-weighted expected values. */
  expectedValue(): number {
    let total = 0;
    for (const tree of this.trees) total += treeExpectedValue(tree);
    return total / this.trees.length;
  }
}

/** Deterministic 80/20 train/holdout split of row indices. */
export function trainHoldoutSplit(n: number, seed: number): { train: number[]; holdout: number[] } {
  const indices = Array.from({ length: n }, (_, i) => i);
  new SplitMix64(seed).shuffle(indices);
  const cut = Math.max(1, Math.floor(n * 0.8));
  return { train: indices.slice(0, cut), holdout: indices.slice(cut) };
}
