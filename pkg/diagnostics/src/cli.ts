#!/usr/bin/env node
/**
 * diagnose --scores scores.csv --features features.csv --out outdir
 *          [--seed 42] [--trees 100] [--max-depth 8]
 *
 * Reads the scorer's per-task CSVs, runs correlation and forest/Shapley
 * analysis, and writes stats tables plus SVG plots into the out dir.
 */

import { realpathSync } from 'node:fs';
import { fileURLToPath } from 'node:url';
import { parseArgs } from 'node:util';

import { loadJoined } from './csv.js';
import { renderReports } from './analyze.js';
import { DEFAULT_FOREST } from './types.js';

function usage(): never {
  console.error(
    'usage: diagnose --scores <scores.csv> --features <features.csv> --out <dir> ' +
      '[--seed N] [--trees N] [--max-depth N]',
  );
  process.exit(2);
}

export function main(argv: string[]): void {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        scores: { type: 'string' },
        features: { type: 'string' },
        out: { type: 'string' },
        seed: { type: 'string', default: String(DEFAULT_FOREST.seed) },
        trees: { type: 'string', default: String(DEFAULT_FOREST.nTrees) },
        'max-depth': { type: 'string', default: String(DEFAULT_FOREST.maxDepth) },
      },
    });
  } catch (error) {
    console.error((error as Error).message);
    usage();
  }
  const { scores, features, out } = parsed.values;
  if (!scores || !features || !out) usage();

  const rows = loadJoined(scores, features);
  const result = renderReports(rows, {
    ...DEFAULT_FOREST,
    seed: Number(parsed.values.seed),
    nTrees: Number(parsed.values.trees),
    maxDepth: Number(parsed.values['max-depth']),
    outDir: out,
  });
  console.log(`analyzed ${rows.length} rows -> ${out}`);
  for (const [target, report] of Object.entries(result.importance)) {
    console.log(
      `  ${target}: holdout R2=${report.r2.toFixed(3)}, ` +
        `top feature by mean |shap|: ${report.ranking[0].feature}`,
    );
  }
}

// Resolve symlinked bin shims so `diagnose` and `node dist/cli.js` both work.
const invokedDirectly = (() => {
  if (!process.argv[1]) return false;
  try {
    return realpathSync(process.argv[1]) === fileURLToPath(import.meta.url);
  } catch {
    return false;
  }
})();
if (invokedDirectly) {
  main(process.argv.slice(2));
}
