/**
 * Loading and joining of the scorer's output files: per-task score rows
 * (scores.csv) and per-task difficulty features (features.csv), joined
 * on task_id into analysis rows with log-transformed feature copies.
 */

import { readFileSync } from 'node:fs';
import Papa from 'papaparse';
import { BASE_FEATURES, type ResultRow } from './types.js';

/** Zero counts have no log; they map to log10(0.5) and are flagged. */
export function log10OrHalf(value: number): { value: number; flagged: boolean } {
  if (value > 0) return { value: Math.log10(value), flagged: false };
  return { value: Math.log10(0.5), flagged: true };
}

function parseCsv(path: string): Record<string, string>[] {
  const text = readFileSync(path, 'utf-8');
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new Error(`${path}: CSV parse error at row ${first.row}: ${first.message}`);
  }
  return parsed.data;
}

function toNumber(raw: string | undefined, column: string, path: string): number {
  const value = Number(raw);
  if (raw === undefined || raw === '' || Number.isNaN(value)) {
    throw new Error(`${path}: column ${column} has non-numeric value ${raw ?? '<missing>'}`);
  }
  return value;
}

export function loadJoined(scoresPath: string, featuresPath: string): ResultRow[] {
  const features = new Map<string, Record<string, string>>();
  for (const record of parseCsv(featuresPath)) {
    features.set(record.task_id, record);
  }
  const rows: ResultRow[] = [];
  for (const record of parseCsv(scoresPath)) {
    const feature = features.get(record.task_id);
    if (feature === undefined) {
      throw new Error(`scores row ${record.task_id} has no matching features row`);
    }
    const base = Object.fromEntries(
      BASE_FEATURES.map((name) => [name, toNumber(feature[name], name, featuresPath)]),
    ) as Record<(typeof BASE_FEATURES)[number], number>;
    const flags: string[] = [];
    const logs = {
      log10_transition_count: log10OrHalf(base.transition_count),
      log10_hoa_states: log10OrHalf(base.hoa_states),
      log10_unique_inputs_in_trace: log10OrHalf(base.unique_inputs_in_trace),
    };
    for (const [name, entry] of Object.entries(logs)) {
      if (entry.flagged) flags.push(name);
    }
    rows.push({
      taskId: record.task_id,
      model: record.model ?? '',
      difficulty: record.difficulty ?? '',
      f1_ap: toNumber(record.f1_ap, 'f1_ap', scoresPath),
      f1_ts: toNumber(record.f1_ts, 'f1_ts', scoresPath),
      ...base,
      log10_transition_count: logs.log10_transition_count.value,
      log10_hoa_states: logs.log10_hoa_states.value,
      log10_unique_inputs_in_trace: logs.log10_unique_inputs_in_trace.value,
      logZeroFlags: flags,
    });
  }
  return rows;
}
