/** Central UI state: a tiny observable store plus the tab-gating rule. */

import type {
  Progress,
  ProviderInfo,
  RecordResult,
  RunEvent,
  SchemaDoc,
  Settings,
  TabId,
  TableInfo,
} from './types.js';

export interface Toast {
  id: number;
  kind: 'success' | 'error' | 'info';
  message: string;
}

export interface ModalState {
  kind: 'prompt-preview' | 'row-test';
  title: string;
  sections: { label: string; text: string }[];
}

export interface UiState {
  activeTab: TabId;
  serviceOk: boolean;
  providers: Record<string, ProviderInfo>;
  settings: Settings | null;
  table: TableInfo | null;
  mapping: Record<string, string>;
  schema: SchemaDoc;
  progress: Progress | null;
  results: RecordResult[];
  recordEventsSeen: number;
  toasts: Toast[];
  modal: ModalState | null;
}

export function initialState(): UiState {
  return {
    activeTab: 'provider',
    serviceOk: true,
    providers: {},
    settings: null,
    table: null,
    mapping: {},
    schema: { fields: [], user_template: '' },
    progress: null,
    results: [],
    recordEventsSeen: 0,
    toasts: [],
    modal: null,
  };
}

/** Tabs unlock in pipeline order as their prerequisites appear. */
export function canEnterTab(state: UiState, tab: TabId): boolean {
  switch (tab) {
    case 'provider':
      return true;
    case 'upload':
      return true;
    case 'schema':
      return state.table !== null;
    case 'run':
      return state.table !== null && state.schema.fields.length > 0;
    case 'results':
      return state.results.length > 0 || state.progress?.state === 'done';
    default:
      return false;
  }
}

export class Store {
  private state: UiState;
  private listeners = new Set<(state: UiState) => void>();
  private toastSeq = 0;

  constructor(state: UiState = initialState()) {
    this.state = state;
  }

  get(): UiState {
    return this.state;
  }

  set(patch: Partial<UiState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  subscribe(listener: (state: UiState) => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  goTo(tab: TabId): boolean {
    if (!canEnterTab(this.state, tab)) return false;
    this.set({ activeTab: tab });
    return true;
  }

  toast(kind: Toast['kind'], message: string): void {
    const toast = { id: ++this.toastSeq, kind, message };
    this.set({ toasts: [...this.state.toasts, toast] });
    const timer = setTimeout(() => {
      this.set({ toasts: this.state.toasts.filter((t) => t.id !== toast.id) });
    }, 4000);
    // In node-based tests a pending toast timer must not keep the process up.
    (timer as { unref?: () => void }).unref?.();
  }

  /** Fold in a polled progress snapshot without regressing newer event data. */
  mergeProgress(incoming: Progress): void {
    const current = this.state.progress;
    if (!current) {
      this.set({ progress: incoming });
      return;
    }
    const terminal = current.state === 'done' || current.state === 'cancelled';
    if (terminal && incoming.state !== current.state) return;
    if (incoming.processed < current.processed) {
      this.set({
        progress: {
          ...incoming,
          processed: current.processed,
          succeeded: current.succeeded,
          failed: current.failed,
          state: current.state,
        },
      });
      return;
    }
    this.set({ progress: incoming });
  }

  applyRunEvent(event: RunEvent): void {
    if (event.type === 'record') {
      const progress: Progress = {
        ...(this.state.progress ?? {
          total: event.total,
          token_estimate: 0,
          eta_seconds: null,
          current_title: null,
          state: 'running',
        }),
        total: event.total,
        processed: event.processed,
        succeeded: event.succeeded,
        failed: event.failed,
      };
      this.set({ progress, recordEventsSeen: this.state.recordEventsSeen + 1 });
    } else if (event.type === 'state') {
      const progress = this.state.progress
        ? { ...this.state.progress, state: event.state }
        : null;
      this.set({ progress });
    } else if (event.type === 'warning') {
      this.toast('info', event.message);
    }
  }
}
