/** Thin typed client for the control service; no business rules live here. */

import type {
  Progress,
  ProviderInfo,
  RecordResult,
  SchemaDoc,
  Settings,
  TableInfo,
  UploadResponse,
} from './types.js';

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function parseError(response: Response): Promise<never> {
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (body && typeof body.detail === 'string') detail = body.detail;
    else if (body) detail = JSON.stringify(body);
  } catch {
    /* non-JSON error body */
  }
  throw new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(public baseUrl: string = '') {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  private json<T>(path: string, method: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method,
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    });
  }

  getProviders(): Promise<Record<string, ProviderInfo>> {
    return this.request('/providers');
  }

  getSettings(): Promise<Settings> {
    return this.request('/settings');
  }

  putSettings(settings: Settings): Promise<Settings> {
    return this.json('/settings', 'PUT', settings);
  }

  async upload(data: Blob, filename: string): Promise<UploadResponse> {
    const form = new FormData();
    form.append('file', data, filename);
    return this.request('/upload', { method: 'POST', body: form });
  }

  getTable(): Promise<TableInfo> {
    return this.request('/table');
  }

  getMapping(): Promise<{ entries: Record<string, string> }> {
    return this.request('/mapping');
  }

  putMapping(entries: Record<string, string>): Promise<{ entries: Record<string, string> }> {
    return this.json('/mapping', 'PUT', { entries });
  }

  getSchema(): Promise<SchemaDoc> {
    return this.request('/schema');
  }

  putSchema(doc: Partial<SchemaDoc> & { preset?: string }): Promise<SchemaDoc> {
    return this.json('/schema', 'PUT', doc);
  }

  promptPreview(rowIndex = 0): Promise<{ system_prompt: string; user_prompt: string }> {
    return this.json('/prompt/preview', 'POST', { row_index: rowIndex });
  }

  promptTest(rowIndex: number): Promise<RecordResult> {
    return this.json('/prompt/test', 'POST', { row_index: rowIndex });
  }

  run(resume = true): Promise<{ task_id: string; total: number; resumed: number }> {
    return this.json('/run', 'POST', { resume });
  }

  pause(): Promise<Progress> {
    return this.request('/pause', { method: 'POST' });
  }

  resume(): Promise<Progress> {
    return this.request('/resume', { method: 'POST' });
  }

  cancel(): Promise<Progress> {
    return this.request('/cancel', { method: 'POST' });
  }

  progress(): Promise<Progress> {
    return this.request('/progress');
  }

  results(): Promise<{ results: RecordResult[] }> {
    return this.request('/results');
  }

  retryRow(rowIndex: number): Promise<RecordResult> {
    return this.request(`/results/${rowIndex}/retry`, { method: 'POST' });
  }

  editCell(rowIndex: number, name: string, value: string): Promise<RecordResult> {
    return this.json(`/results/${rowIndex}/field`, 'PUT', { name, value });
  }

  exportUrl(mode: string, format: string, includeStatus = false): string {
    const params = new URLSearchParams({
      mode,
      format,
      include_status: String(includeStatus),
    });
    return `${this.baseUrl}/export?${params}`;
  }

  async exportBytes(mode: string, format: string, includeStatus = false): Promise<Blob> {
    const response = await fetch(this.exportUrl(mode, format, includeStatus));
    if (!response.ok) await parseError(response);
    return response.blob();
  }

  clearAllData(): Promise<{ cleared: boolean }> {
    return this.request('/clear', { method: 'POST' });
  }
}
