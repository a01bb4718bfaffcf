import { execFileSync } from 'node:child_process';
import { existsSync, mkdtempSync, readFileSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';

import { describe, expect, it } from 'vitest';

import { SplitMix64 } from '../src/rng.js';

const PKG_ROOT = join(dirname(fileURLToPath(import.meta.url)), '..');
const CLI = join(PKG_ROOT, 'dist', 'cli.js');

// Headers must match what the scorer writes.
const SCORES_HEADER =
  'task_id,model,kind,difficulty,parse_failed,f1_ap,f1_ts,precision_ap,recall_ap,precision_ts,recall_ts';
const FEATURES_HEADER =
  'task_id,effect_depth,hoa_states,transition_count,causal_inputs_count,unique_inputs_in_trace';

function writeFixture(dir: string, n: number): { scores: string; features: string } {
  const rng = new SplitMix64(7);
  const scores: string[] = [SCORES_HEADER];
  const features: string[] = [FEATURES_HEADER];
  for (let i = 0; i < n; i++) {
    const depth = rng.int(9);
    const states = 2 + rng.int(20);
    const transitions = 2 + rng.int(60);
    const causal = rng.int(8);
    const unique = rng.int(5);
    const f1 = Math.max(0, Math.min(1, 1 - 0.08 * depth + 0.2 * (rng.next() - 0.5)));
    scores.push(
      `tce-${String(i).padStart(5, '0')},m,TCE,${i % 3 ? 'normal' : 'hard'},False,${f1},${f1 * 0.9},${f1},${f1},${f1},${f1}`,
    );
    features.push(
      `tce-${String(i).padStart(5, '0')},${depth},${states},${transitions},${causal},${unique}`,
    );
  }
  const scoresPath = join(dir, 'scores.csv');
  const featuresPath = join(dir, 'features.csv');
  writeFileSync(scoresPath, scores.join('\n') + '\n');
  writeFileSync(featuresPath, features.join('\n') + '\n');
  return { scores: scoresPath, features: featuresPath };
}

describe('diagnose CLI', () => {
  it('writes stats tables and every plot family', () => {
    const dir = mkdtempSync(join(tmpdir(), 'diag-cli-'));
    const { scores, features } = writeFixture(dir, 120);
    const out = join(dir, 'out');
    const stdout = execFileSync(
      'node',
      [CLI, '--scores', scores, '--features', features, '--out', out, '--trees', '25'],
      { encoding: 'utf-8' },
    );
    expect(stdout).toContain('analyzed 120 rows');
    for (const name of [
      'stats.csv',
      'stats.json',
      'hyperparams.json',
      'shap_beeswarm_f1_ap.svg',
      'shap_beeswarm_f1_ts.svg',
      'hist_f1_ap.svg',
      'hist_f1_ts.svg',
      'corr_log10_transition_count_f1_ap.svg',
      'corr_log10_hoa_states_f1_ts.svg',
      'corr_log10_unique_inputs_in_trace_f1_ts.svg',
    ]) {
      expect(existsSync(join(out, name)), name).toBe(true);
    }
    const statsCsv = readFileSync(join(out, 'stats.csv'), 'utf-8');
    expect(statsCsv.startsWith('kind,feature,target,n,value,p\n')).toBe(true);
    expect(statsCsv).toContain('pearson_r,effect_depth,f1_ap,120,');
    expect(statsCsv).toContain('holdout_r2,,f1_ap,');
    // The constructed fixture decays with effect depth; the sign must show.
    const line = statsCsv.split('\n').find((l) => l.startsWith('pearson_r,effect_depth,f1_ap'));
    expect(Number(line!.split(',')[4])).toBeLessThan(0);
  });

  it('exits with usage on missing flags', () => {
    expect(() => execFileSync('node', [CLI, '--scores', 'x.csv'], { encoding: 'utf-8' })).toThrow();
  });
});
