/** Full wizard pass against the live control service and mock provider. */

import { afterEach, beforeEach, expect, inject, it, vi } from 'vitest';

import { WizardActions } from '../src/actions.js';
import { ApiClient } from '../src/api.js';
import { Store, canEnterTab } from '../src/store.js';

const CNKI_COLUMNS = ['篇名', '摘要', '关键词', '作者', '来源', '发表时间', 'DOI'];

function csvCell(value: string): string {
  return /[",\n]/.test(value) ? `"${value.replace(/"/g, '""')}"` : value;
}

function buildCsv(rows: number): string {
  const lines = [CNKI_COLUMNS.join(',')];
  for (let i = 0; i < rows; i++) {
    lines.push([
      `中医药研究论文 ${i}`,
      `本研究探讨了主题 ${i} 的作用机制, 并总结了疗效`,
      `中医药; 主题${i}`,
      `作者${i}`,
      '中医药信息学报',
      `202${i % 5}-01-15`,
      `10.1234/tcm.${i}`,
    ].map(csvCell).join(','));
  }
  return lines.join('\r\n') + '\r\n';
}

async function until(check: () => boolean, timeoutMs = 45_000, note = ''): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (check()) return;
    await new Promise((resolve) => setTimeout(resolve, 10));
  }
  throw new Error(`condition never became true ${note}`);
}

let consoleErrors: unknown[][];
let restoreConsole: () => void;

beforeEach(() => {
  consoleErrors = [];
  const original = console.error;
  console.error = (...args: unknown[]) => {
    consoleErrors.push(args);
    original(...args);
  };
  restoreConsole = () => {
    console.error = original;
  };
});

afterEach(() => restoreConsole());

it('runs the five-stage wizard end to end against the mock provider', async () => {
  const serviceUrl = inject('serviceUrl');
  const mockUrl = inject('mockUrl');

  const api = new ApiClient(serviceUrl);
  const store = new Store();
  const actions = new WizardActions(api, store);

  // Stage 1: API configuration.
  await actions.bootstrap();
  expect(store.get().serviceOk).toBe(true);
  expect(Object.keys(store.get().providers)).toContain('custom');
  await actions.saveSettings({
    provider: 'custom',
    base_url: mockUrl,
    model: 'mock-model',
    api_key: 'wizard-test-key',
    temperature: null,
    concurrency: 3,
    interval_ms: 0,
    max_retries: 3,
    retry_delay_ms: 0,
    typed_annotations: false,
  });
  expect(store.get().settings?.has_credential).toBe(true);

  // Stage 2: upload; mapping badges appear and the schema tab unlocks.
  expect(canEnterTab(store.get(), 'schema')).toBe(false);
  await actions.uploadFile(new Blob([buildCsv(50)]), 'cnki.csv');
  expect(store.get().table?.row_count).toBe(50);
  expect(Object.keys(store.get().mapping)).toHaveLength(7);
  expect(store.get().mapping['Title']).toBe('篇名');
  expect(canEnterTab(store.get(), 'schema')).toBe(true);
  expect(store.goTo('schema')).toBe(true);

  // Stage 3: preset schema + prompt preview.
  expect(canEnterTab(store.get(), 'run')).toBe(false);
  await actions.applyPreset('paper_info');
  expect(store.get().schema.fields).toHaveLength(6);
  expect(canEnterTab(store.get(), 'run')).toBe(true);
  await actions.showPromptPreview();
  const modal = store.get().modal;
  expect(modal?.sections[0]?.text).toContain('Research Topic: string');
  expect(modal?.sections[1]?.text).toContain('中医药研究论文 0');
  actions.closeModal();

  // Stage 4: run 50 records; pause mid-flight, then resume.
  expect(store.goTo('run')).toBe(true);
  await actions.startRun(false);
  await until(() => store.get().recordEventsSeen >= 10, 45_000, '(10 records)');
  await actions.pauseRun();
  expect(store.get().progress?.state).toBe('paused');
  await new Promise((resolve) => setTimeout(resolve, 300));
  const frozen = store.get().progress?.processed ?? 0;
  expect(frozen).toBeLessThan(50);
  await actions.resumeRun();
  expect(store.get().progress?.state).toBe('running');
  await until(() => store.get().progress?.state === 'done', 45_000, '(run done)');

  // Every record completion arrived exactly once over the event stream.
  expect(store.get().recordEventsSeen).toBe(50);
  expect(store.get().progress?.processed).toBe(50);
  expect(store.get().progress?.failed).toBe(0);

  // Stage 5: results grid edit + export.
  await actions.refreshResults();
  expect(store.goTo('results')).toBe(true);
  expect(store.get().results).toHaveLength(50);
  await actions.editCell(3, 'Methodology', 'RCT-edited');
  expect(store.get().results[3]?.extracted['Methodology']).toBe('RCT-edited');

  const csv = await actions.exportText('all_columns', 'csv');
  expect(csv).toContain('RCT-edited');
  const lines = csv.split('\r\n').filter((line) => line.length > 0);
  expect(lines).toHaveLength(51); // header + 50 rows
  expect(lines[0]).toContain('Research Topic');

  // The whole pass stayed clean on the console.
  expect(consoleErrors).toHaveLength(0);
}, 120_000);

it('recovers the service state for a second client', async () => {
  const serviceUrl = inject('serviceUrl');
  const api = new ApiClient(serviceUrl);
  const store = new Store();
  const actions = new WizardActions(api, store);

  await actions.bootstrap();
  await actions.refreshResults();
  // The previous test's run is still there: a late-joining client sees it.
  expect(store.get().results).toHaveLength(50);
  expect(store.get().results[3]?.extracted['Methodology']).toBe('RCT-edited');
});
