/** Shared row and model types for the diagnostics pipeline. */

export const BASE_FEATURES = [
  'effect_depth',
  'hoa_states',
  'transition_count',
  'causal_inputs_count',
  'unique_inputs_in_trace',
] as const;

export type BaseFeature = (typeof BASE_FEATURES)[number];

export const LOG_FEATURES = [
  'log10_transition_count',
  'log10_hoa_states',
  'log10_unique_inputs_in_trace',
] as const;

export type LogFeature = (typeof LOG_FEATURES)[number];

export type Target = 'f1_ap' | 'f1_ts';

/** One scored task joined with its difficulty features. */
export interface ResultRow {
  taskId: string;
  model: string;
  difficulty: string;
  f1_ap: number;
  f1_ts: number;
  effect_depth: number;
  hoa_states: number;
  transition_count: number;
  causal_inputs_count: number;
  unique_inputs_in_trace: number;
  log10_transition_count: number;
  log10_hoa_states: number;
  log10_unique_inputs_in_trace: number;
  /** Names of features whose zero value was mapped to log10(0.5). */
  logZeroFlags: string[];
}

export interface Correlation {
  feature: string;
  target: Target;
  n: number;
  r: number;
  p: number;
}

export interface ForestOptions {
  nTrees: number;
  maxDepth: number;
  minLeaf: number;
  /** Features sampled per split; 0 means max(1, floor(nFeatures / 3)). */
  mtry: number;
  seed: number;
}

export const DEFAULT_FOREST: ForestOptions = {
  nTrees: 100,
  maxDepth: 8,
  minLeaf: 2,
  mtry: 0,
  seed: 42,
};

export interface TreeLeaf {
  kind: 'leaf';
  value: number;
  cover: number;
}

export interface TreeSplit {
  kind: 'split';
  feature: number;
  threshold: number;
  left: TreeNode;
  right: TreeNode;
  value: number;
  cover: number;
}

export type TreeNode = TreeLeaf | TreeSplit;

export interface ImportanceReport {
  r2: number;
  /** Per-sample Shapley values, rows x features. */
  shap: number[][];
  /** Forest expected value (mean of per-tree baselines). */
  baseline: number;
  /** Features ranked by mean absolute attribution, descending. */
  ranking: { feature: string; meanAbsShap: number }[];
  options: ForestOptions;
  holdoutSize: number;
}
