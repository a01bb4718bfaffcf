/**
 * The full analysis pass over joined score/feature rows: per-feature
 * Pearson correlations against both F1 targets, a random-forest fit with
 * holdout R-squared and per-sample Shapley attributions, and the plot
 * files. Everything is a pure function of (rows, options); the stats
 * tables are byte-reproducible across reruns.
 */

import { mkdirSync, writeFileSync } from 'node:fs';
import { join } from 'node:path';

import { trainHoldoutSplit, RandomForest } from './forest.js';
import { beeswarmPlot, histogramPlot, scatterPlot } from './plots.js';
import { histogram, leastSquares, pearson, rSquared } from './stats.js';
import { meanAbsByFeature, shapMatrix } from './shap.js';
import {
  BASE_FEATURES,
  DEFAULT_FOREST,
  LOG_FEATURES,
  type Correlation,
  type ForestOptions,
  type ImportanceReport,
  type ResultRow,
  type Target,
} from './types.js';

const MIN_ROWS_FOR_FOREST = 50;

export function correlate(rows: ResultRow[], feature: string, target: Target): Correlation {
  const xs = rows.map((row) => row[feature as keyof ResultRow] as number);
  const ys = rows.map((row) => row[target]);
  const { r, p, n } = pearson(xs, ys);
  return { feature, target, n, r, p };
}

export function featureImportance(
  rows: ResultRow[],
  target: Target,
  options: ForestOptions = DEFAULT_FOREST,
): ImportanceReport {
  if (rows.length < MIN_ROWS_FOR_FOREST) {
    throw new Error(
      `feature importance needs at least ${MIN_ROWS_FOR_FOREST} rows, got ${rows.length}`,
    );
  }
  // Record exactly the forest hyperparameters, nothing environmental.
  options = {
    nTrees: options.nTrees,
    maxDepth: options.maxDepth,
    minLeaf: options.minLeaf,
    mtry: options.mtry,
    seed: options.seed,
  };
  const X = rows.map((row) => BASE_FEATURES.map((f) => row[f]));
  const y = rows.map((row) => row[target]);
  const { train, holdout } = trainHoldoutSplit(rows.length, options.seed);
  const forest = new RandomForest(options).fit(
    train.map((i) => X[i]),
    train.map((i) => y[i]),
  );
  const r2 = rSquared(
    holdout.map((i) => y[i]),
    forest.predict(holdout.map((i) => X[i])),
  );
  const shap = shapMatrix(forest, X);
  const meanAbs = meanAbsByFeature(shap);
  const ranking = BASE_FEATURES.map((feature, i) => ({ feature, meanAbsShap: meanAbs[i] }))
    .sort((a, b) => b.meanAbsShap - a.meanAbsShap || a.feature.localeCompare(b.feature));
  return {
    r2,
    shap,
    baseline: forest.expectedValue(),
    ranking,
    options,
    holdoutSize: holdout.length,
  };
}

export interface AnalysisResult {
  correlations: Correlation[];
  importance: Partial<Record<Target, ImportanceReport>>;
  statsCsv: string;
  statsJson: string;
  warnings: string[];
}

function csvEscape(value: string): string {
  return /[",\n]/.test(value) ? `"${value.replace(/"/g, '""')}"` : value;
}

export function analyze(rows: ResultRow[], options: ForestOptions = DEFAULT_FOREST): AnalysisResult {
  if (rows.length === 0) throw new Error('no rows to analyze');
  const warnings: string[] = [];
  const targets: Target[] = ['f1_ap', 'f1_ts'];
  const correlations: Correlation[] = [];
  for (const target of targets) {
    for (const feature of [...BASE_FEATURES, ...LOG_FEATURES]) {
      try {
        correlations.push(correlate(rows, feature, target));
      } catch (error) {
        warnings.push(`skipped correlation ${feature} vs ${target}: ${(error as Error).message}`);
      }
    }
  }

  const importance: Partial<Record<Target, ImportanceReport>> = {};
  for (const target of targets) {
    try {
      importance[target] = featureImportance(rows, target, options);
    } catch (error) {
      warnings.push(`skipped feature importance for ${target}: ${(error as Error).message}`);
    }
  }

  const lines = ['kind,feature,target,n,value,p'];
  for (const c of correlations) {
    lines.push(`pearson_r,${csvEscape(c.feature)},${c.target},${c.n},${c.r},${c.p}`);
  }
  for (const target of targets) {
    const report = importance[target];
    if (report) {
      lines.push(`holdout_r2,,${target},${report.holdoutSize},${report.r2},`);
      for (const entry of report.ranking) {
        lines.push(`mean_abs_shap,${csvEscape(entry.feature)},${target},${rows.length},${entry.meanAbsShap},`);
      }
    }
  }
  const statsCsv = lines.join('\n') + '\n';

  const statsJson =
    JSON.stringify(
      {
        rows: rows.length,
        correlations,
        importance: Object.fromEntries(
          targets
            .filter((t) => importance[t])
            .map((t) => [
              t,
              {
                holdout_r2: importance[t]!.r2,
                holdout_size: importance[t]!.holdoutSize,
                baseline: importance[t]!.baseline,
                ranking: importance[t]!.ranking,
                hyperparameters: importance[t]!.options,
              },
            ]),
        ),
        log_zero_rows: rows.filter((r) => r.logZeroFlags.length > 0).length,
      },
      null,
      2,
    ) + '\n';

  return { correlations, importance, statsCsv, statsJson, warnings };
}

export interface RenderOptions extends ForestOptions {
  outDir: string;
}

/** Run the analysis and write stats tables plus every plot family. */
export function renderReports(rows: ResultRow[], options: RenderOptions): AnalysisResult {
  const result = analyze(rows, options);
  mkdirSync(options.outDir, { recursive: true });
  writeFileSync(join(options.outDir, 'stats.csv'), result.statsCsv, 'utf-8');
  writeFileSync(join(options.outDir, 'stats.json'), result.statsJson, 'utf-8');
  writeFileSync(
    join(options.outDir, 'hyperparams.json'),
    JSON.stringify(
      { nTrees: options.nTrees, maxDepth: options.maxDepth, minLeaf: options.minLeaf, mtry: options.mtry, seed: options.seed },
      null,
      2,
    ) + '\n',
    'utf-8',
  );

  for (const c of result.correlations.filter((c) => (LOG_FEATURES as readonly string[]).includes(c.feature))) {
    const xs = rows.map((row) => row[c.feature as keyof ResultRow] as number);
    const ys = rows.map((row) => row[c.target]);
    const svg = scatterPlot({
      xs,
      ys,
      xLabel: c.feature,
      yLabel: c.target.toUpperCase(),
      title: `${c.feature} vs ${c.target.toUpperCase()}`,
      fit: leastSquares(xs, ys),
      annotation: `R=${c.r.toFixed(3)}, p=${c.p.toExponential(2)}, n=${c.n}`,
    });
    writeFileSync(join(options.outDir, `corr_${c.feature}_${c.target}.svg`), svg, 'utf-8');
  }

  for (const target of ['f1_ap', 'f1_ts'] as Target[]) {
    const report = result.importance[target];
    if (report) {
      const order = report.ranking.map((entry) =>
        BASE_FEATURES.indexOf(entry.feature as (typeof BASE_FEATURES)[number]),
      );
      const svg = beeswarmPlot({
        features: report.ranking.map((entry) => entry.feature),
        shap: report.shap.map((row) => order.map((f) => row[f])),
        values: rows.map((row) => order.map((f) => row[BASE_FEATURES[f]])),
        title: `Shapley attribution for ${target.toUpperCase()}`,
      });
      writeFileSync(join(options.outDir, `shap_beeswarm_${target}.svg`), svg, 'utf-8');
    }
    const h = histogram(rows.map((row) => row[target]), 20, 0, 1);
    writeFileSync(
      join(options.outDir, `hist_${target}.svg`),
      histogramPlot(h, target.toUpperCase(), `Distribution of ${target.toUpperCase()}`),
      'utf-8',
    );
  }

  for (const warning of result.warnings) {
    console.warn(`warning: ${warning}`);
  }
  return result;
}
