/** JSON shapes exchanged with the control service. */

export interface ProviderInfo {
  base_url: string;
  models: string[];
  mutation: string;
}

export interface Settings {
  provider: string;
  base_url: string | null;
  model: string;
  api_key?: string | null;
  temperature: number | null;
  concurrency: number;
  interval_ms: number;
  max_retries: number;
  retry_delay_ms: number;
  typed_annotations: boolean;
  has_credential?: boolean;
}

export interface TableInfo {
  source_name: string;
  columns: string[];
  row_count: number;
  preview: Record<string, string>[];
}

export interface UploadResponse extends TableInfo {
  mapping: Record<string, string>;
}

export interface SchemaField {
  name: string;
  description: string;
  type: 'text' | 'number' | 'list' | 'boolean';
  required: boolean;
}

export interface SchemaDoc {
  fields: SchemaField[];
  user_template: string;
}

export interface Progress {
  total: number;
  processed: number;
  succeeded: number;
  failed: number;
  token_estimate: number;
  eta_seconds: number | null;
  current_title: string | null;
  state: 'idle' | 'running' | 'paused' | 'cancelled' | 'done';
}

export interface RecordResult {
  row_index: number;
  status: 'pending' | 'running' | 'success' | 'failed';
  extracted: Record<string, unknown>;
  raw_response: string;
  error: string | null;
  attempts: number;
  input_chars: number;
  output_chars: number;
}

export type RunEvent =
  | { type: 'record'; row_index: number; status: string; attempts: number;
      processed: number; succeeded: number; failed: number; total: number }
  | { type: 'state'; state: Progress['state'] }
  | { type: 'warning'; message: string };

export const TAB_IDS = ['provider', 'upload', 'schema', 'run', 'results'] as const;
export type TabId = (typeof TAB_IDS)[number];

export const TAB_TITLES: Record<TabId, string> = {
  provider: 'API Configuration',
  upload: 'Data Upload',
  schema: 'Extraction Configuration',
  run: 'Task Execution',
  results: 'Result Export',
};
