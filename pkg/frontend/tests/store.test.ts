import { describe, expect, it } from 'vitest';

import { Store, canEnterTab, initialState } from '../src/store.js';
import type { Progress, TableInfo } from '../src/types.js';

const table: TableInfo = {
  source_name: 't.csv',
  columns: ['篇名', '摘要'],
  row_count: 3,
  preview: [],
};

function progressAt(processed: number, state: Progress['state'] = 'running'): Progress {
  return {
    total: 10, processed, succeeded: processed, failed: 0,
    token_estimate: processed * 10, eta_seconds: 5, current_title: null, state,
  };
}

describe('tab gating', () => {
  it('only provider and upload are reachable initially', () => {
    const state = initialState();
    expect(canEnterTab(state, 'provider')).toBe(true);
    expect(canEnterTab(state, 'upload')).toBe(true);
    expect(canEnterTab(state, 'schema')).toBe(false);
    expect(canEnterTab(state, 'run')).toBe(false);
    expect(canEnterTab(state, 'results')).toBe(false);
  });

  it('schema unlocks after upload, run after schema, results after results', () => {
    const store = new Store();
    store.set({ table });
    expect(canEnterTab(store.get(), 'schema')).toBe(true);
    expect(canEnterTab(store.get(), 'run')).toBe(false);

    store.set({ schema: { fields: [{ name: 'x', description: '', type: 'text', required: true }], user_template: '' } });
    expect(canEnterTab(store.get(), 'run')).toBe(true);
    expect(canEnterTab(store.get(), 'results')).toBe(false);

    store.set({ progress: progressAt(10, 'done') });
    expect(canEnterTab(store.get(), 'results')).toBe(true);
  });

  it('goTo refuses locked tabs', () => {
    const store = new Store();
    expect(store.goTo('run')).toBe(false);
    expect(store.get().activeTab).toBe('provider');
    store.set({ table });
    expect(store.goTo('schema')).toBe(true);
    expect(store.get().activeTab).toBe('schema');
  });
});

describe('run events', () => {
  it('record events advance counters and the event tally', () => {
    const store = new Store();
    store.applyRunEvent({ type: 'record', row_index: 0, status: 'success',
                          attempts: 1, processed: 1, succeeded: 1, failed: 0, total: 5 });
    store.applyRunEvent({ type: 'record', row_index: 1, status: 'failed',
                          attempts: 4, processed: 2, succeeded: 1, failed: 1, total: 5 });
    const state = store.get();
    expect(state.recordEventsSeen).toBe(2);
    expect(state.progress?.processed).toBe(2);
    expect(state.progress?.failed).toBe(1);
  });

  it('state events flip the run state', () => {
    const store = new Store();
    store.set({ progress: progressAt(3) });
    store.applyRunEvent({ type: 'state', state: 'paused' });
    expect(store.get().progress?.state).toBe('paused');
  });
});

describe('mergeProgress', () => {
  it('accepts fresher snapshots', () => {
    const store = new Store();
    store.mergeProgress(progressAt(2));
    store.mergeProgress(progressAt(5));
    expect(store.get().progress?.processed).toBe(5);
  });

  it('never regresses counters from stale polls', () => {
    const store = new Store();
    store.mergeProgress(progressAt(7));
    store.mergeProgress(progressAt(4));
    const progress = store.get().progress;
    expect(progress?.processed).toBe(7);
    // Stale poll still refreshes auxiliary stats.
    expect(progress?.token_estimate).toBe(40);
  });

  it('never downgrades a terminal state', () => {
    const store = new Store();
    store.mergeProgress(progressAt(10, 'done'));
    store.mergeProgress(progressAt(10, 'running'));
    expect(store.get().progress?.state).toBe('done');
  });
});
