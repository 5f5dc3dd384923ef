/** Wizard actions: each user intent becomes service calls plus store updates.
 *
 * All parsing, mapping, prompting, and engine behavior live server-side;
 * this layer only orchestrates requests and mirrors state.
 */

import { ApiClient, ApiError } from './api.js';
import { subscribeSse, type SseHandle } from './sse.js';
import { Store } from './store.js';
import type { Progress, RunEvent, SchemaDoc, Settings } from './types.js';

export class WizardActions {
  private sse: SseHandle | null = null;
  private pollTimer: ReturnType<typeof setInterval> | null = null;

  constructor(public api: ApiClient, public store: Store) {}

  async bootstrap(): Promise<void> {
    try {
      const [providers, settings, progress] = await Promise.all([
        this.api.getProviders(),
        this.api.getSettings(),
        this.api.progress(),
      ]);
      this.store.set({ providers, settings, progress, serviceOk: true });
    } catch (error) {
      this.store.set({ serviceOk: false });
      throw error;
    }
  }

  async saveSettings(settings: Settings): Promise<void> {
    const saved = await this.api.putSettings(settings);
    this.store.set({ settings: saved });
    this.store.toast('success', 'Settings saved');
  }

  async uploadFile(data: Blob, filename: string): Promise<void> {
    const response = await this.api.upload(data, filename);
    this.store.set({
      table: {
        source_name: response.source_name,
        columns: response.columns,
        row_count: response.row_count,
        preview: response.preview,
      },
      mapping: response.mapping,
      results: [],
      recordEventsSeen: 0,
      progress: null,
    });
    const mapped = Object.keys(response.mapping).length;
    this.store.toast('success',
      `Loaded ${response.row_count} rows, recognized ${mapped} columns`);
  }

  async saveMapping(entries: Record<string, string>): Promise<void> {
    const response = await this.api.putMapping(entries);
    this.store.set({ mapping: response.entries });
  }

  async applyPreset(name: string): Promise<void> {
    const schema = await this.api.putSchema({ preset: name });
    this.store.set({ schema });
    this.store.toast('success', `Applied preset: ${name}`);
  }

  async saveSchema(doc: Partial<SchemaDoc>): Promise<void> {
    const schema = await this.api.putSchema(doc);
    this.store.set({ schema });
  }

  async showPromptPreview(): Promise<void> {
    const preview = await this.api.promptPreview(0);
    this.store.set({
      modal: {
        kind: 'prompt-preview',
        title: 'Prompt preview',
        sections: [
          { label: 'System prompt', text: preview.system_prompt },
          { label: 'User prompt (row 1)', text: preview.user_prompt },
        ],
      },
    });
  }

  async testSingleRow(rowIndex = 0): Promise<void> {
    const result = await this.api.promptTest(rowIndex);
    this.store.set({
      modal: {
        kind: 'row-test',
        title: `Single-row test (row ${rowIndex + 1}): ${result.status}`,
        sections: [
          { label: 'Extracted', text: JSON.stringify(result.extracted, null, 2) },
          { label: 'Raw response', text: result.raw_response },
        ],
      },
    });
  }

  closeModal(): void {
    this.store.set({ modal: null });
  }

  /** Start a run and follow it over SSE, falling back to 1 s polling. */
  async startRun(resume = true): Promise<void> {
    this.stopFollowing();
    this.store.set({ recordEventsSeen: 0 });
    this.followEvents();
    // The stream must be registered server-side before the run launches,
    // otherwise early record events are lost.
    if (this.sse) await this.sse.ready;
    try {
      await this.api.run(resume);
    } catch (error) {
      this.stopFollowing();
      throw error;
    }
    // Record events carry the counters; a slow 1 s poll keeps token/ETA/title
    // fresh and doubles as the fallback when the stream drops.
    this.startPolling(1000);
  }

  followEvents(): void {
    this.sse = subscribeSse(
      `${this.api.baseUrl}/events`,
      (payload) => {
        const event = JSON.parse(payload) as RunEvent;
        this.store.applyRunEvent(event);
        if (event.type === 'state' && (event.state === 'done' || event.state === 'cancelled')) {
          void this.refreshResults();
          this.stopFollowing();
        }
      },
      () => this.startPolling(1000),
    );
  }

  /** Poll progress until terminal; merge guards against stale snapshots. */
  startPolling(intervalMs: number): void {
    if (this.pollTimer !== null) return;
    this.pollTimer = setInterval(async () => {
      try {
        const progress = await this.api.progress();
        this.store.mergeProgress(progress);
        if (!this.store.get().serviceOk) this.store.set({ serviceOk: true });
        if (progress.state === 'done' || progress.state === 'cancelled' ||
            progress.state === 'idle') {
          this.stopFollowing();
          await this.refreshResults();
        }
      } catch {
        this.store.set({ serviceOk: false });
      }
    }, intervalMs);
    (this.pollTimer as unknown as { unref?: () => void }).unref?.();
  }

  stopFollowing(): void {
    if (this.sse) {
      const sse = this.sse;
      this.sse = null;
      sse.close();
    }
    if (this.pollTimer !== null) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }

  async pauseRun(): Promise<Progress> {
    const progress = await this.api.pause();
    this.store.mergeProgress(progress);
    return progress;
  }

  async resumeRun(): Promise<Progress> {
    const progress = await this.api.resume();
    this.store.mergeProgress(progress);
    return progress;
  }

  async cancelRun(): Promise<Progress> {
    const progress = await this.api.cancel();
    this.store.mergeProgress(progress);
    return progress;
  }

  async refreshProgress(): Promise<void> {
    this.store.mergeProgress(await this.api.progress());
  }

  async refreshResults(): Promise<void> {
    const response = await this.api.results();
    this.store.set({ results: response.results });
  }

  async editCell(rowIndex: number, name: string, value: string): Promise<void> {
    const updated = await this.api.editCell(rowIndex, name, value);
    this.store.set({
      results: this.store.get().results.map((r) =>
        r.row_index === rowIndex ? updated : r),
    });
    this.store.toast('success', `Row ${rowIndex + 1} updated`);
  }

  async retryRow(rowIndex: number): Promise<void> {
    const updated = await this.api.retryRow(rowIndex);
    this.store.set({
      results: this.store.get().results.map((r) =>
        r.row_index === rowIndex ? updated : r),
    });
    this.store.toast(updated.status === 'success' ? 'success' : 'error',
      `Row ${rowIndex + 1} retry: ${updated.status}`);
  }

  async exportText(mode: string, format: string, includeStatus = false): Promise<string> {
    const blob = await this.api.exportBytes(mode, format, includeStatus);
    return blob.text();
  }

  handleFailure(error: unknown): void {
    if (error instanceof ApiError) {
      this.store.toast('error', error.detail);
    } else if (error instanceof TypeError) {
      // fetch network failure: the local service is gone.
      this.store.set({ serviceOk: false });
    } else {
      this.store.toast('error', String(error));
    }
  }
}
