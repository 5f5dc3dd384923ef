// @vitest-environment happy-dom
/** Render smoke test: every tab mounts without console errors. */

import { afterEach, beforeEach, expect, it } from 'vitest';

import { WizardActions } from '../src/actions.js';
import { ApiClient } from '../src/api.js';
import { Store } from '../src/store.js';
import { mountWizard } from '../src/wizard.js';
import type { Progress, RecordResult, SchemaField } from '../src/types.js';

const FIELDS: SchemaField[] = [
  { name: 'Research Topic', description: '', type: 'text', required: true },
  { name: 'Methodology', description: '', type: 'text', required: true },
];

const RESULTS: RecordResult[] = [
  { row_index: 0, status: 'success', extracted: { 'Research Topic': 'x', Methodology: 'y' },
    raw_response: '{}', error: null, attempts: 1, input_chars: 10, output_chars: 5 },
  { row_index: 1, status: 'failed', extracted: {},
    raw_response: '', error: 'ProviderError: 500', attempts: 4, input_chars: 10, output_chars: 0 },
];

const PROGRESS: Progress = {
  total: 2, processed: 2, succeeded: 1, failed: 1,
  token_estimate: 42, eta_seconds: null, current_title: null, state: 'done',
};

let consoleErrors: unknown[][];
let restore: () => void;

beforeEach(() => {
  consoleErrors = [];
  const original = console.error;
  console.error = (...args: unknown[]) => {
    consoleErrors.push(args);
  };
  restore = () => {
    console.error = original;
  };
});

afterEach(() => restore());

function mounted(): { root: HTMLElement; store: Store } {
  document.body.innerHTML = '<div id="app"></div>';
  const root = document.getElementById('app') as HTMLElement;
  const store = new Store();
  const actions = new WizardActions(new ApiClient('http://127.0.0.1:1'), store);
  mountWizard(root, store, actions);
  return { root, store };
}

it('renders the provider tab with five gated tabs', () => {
  const { root } = mounted();
  const tabs = root.querySelectorAll('nav button');
  expect(tabs).toHaveLength(5);
  expect(root.textContent).toContain('API Configuration');
  expect(root.textContent).toContain('LLM provider');
  const disabled = [...tabs].filter((tab) => (tab as HTMLButtonElement).disabled);
  expect(disabled.length).toBe(3); // schema, run, results locked initially
  expect(consoleErrors).toHaveLength(0);
});

it('walks every tab once state allows it', () => {
  const { root, store } = mounted();
  store.set({
    table: { source_name: 'x.csv', columns: ['篇名', '摘要'], row_count: 2,
             preview: [{ 篇名: 'a', 摘要: 'b' }] },
    mapping: { Title: '篇名', Abstract: '摘要' },
    schema: { fields: FIELDS, user_template: '标题: {{篇名}}' },
    results: RESULTS,
    progress: PROGRESS,
  });

  expect(store.goTo('upload')).toBe(true);
  expect(root.textContent).toContain('Recognized columns');
  expect(root.textContent).toContain('Title ← 篇名');

  expect(store.goTo('schema')).toBe(true);
  expect(root.textContent).toContain('User prompt template');
  expect(root.textContent).toContain('{{篇名}}');

  expect(store.goTo('run')).toBe(true);
  expect(root.textContent).toContain('Task execution');
  expect(root.textContent).toContain('2 / 2');

  expect(store.goTo('results')).toBe(true);
  expect(root.textContent).toContain('Export CSV');
  expect(root.textContent).toContain('failed (4×)');
  const failedCell = root.querySelector('.status-bad');
  expect(failedCell?.getAttribute('title')).toBe('ProviderError: 500');
  expect(root.querySelectorAll('.results-grid tr')).toHaveLength(3); // header + 2

  expect(consoleErrors).toHaveLength(0);
});

it('shows the blocking banner when the service is unreachable', () => {
  const { root, store } = mounted();
  store.set({ serviceOk: false });
  const banner = root.querySelector('.banner');
  expect(banner?.classList.contains('hidden')).toBe(false);
  expect(banner?.textContent).toContain('unreachable');
  store.set({ serviceOk: true });
  expect(root.querySelector('.banner')?.classList.contains('hidden')).toBe(true);
});

it('toasts appear and render by kind', () => {
  const { root, store } = mounted();
  store.toast('success', 'saved!');
  store.toast('error', 'boom');
  const toasts = root.querySelectorAll('.toast');
  expect(toasts).toHaveLength(2);
  expect(toasts[1]?.classList.contains('toast-error')).toBe(true);
});
