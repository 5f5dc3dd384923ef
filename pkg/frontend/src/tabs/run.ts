import type { WizardActions } from '../actions.js';
import { button, el } from '../dom.js';
import type { UiState } from '../store.js';

function formatEta(seconds: number | null): string {
  if (seconds === null) return '—';
  if (seconds < 90) return `${Math.round(seconds)} s`;
  return `${Math.round(seconds / 60)} min`;
}

export function renderRunTab(root: HTMLElement, state: UiState,
                             actions: WizardActions): void {
  const progress = state.progress;
  const running = progress?.state === 'running' || progress?.state === 'paused';

  const start = button('Start extraction', () => {
    void actions.startRun(true).catch((e) => actions.handleFailure(e));
  }, 'btn btn-primary');
  start.disabled = running;

  const fresh = button('Restart from scratch', () => {
    void actions.startRun(false).catch((e) => actions.handleFailure(e));
  }, 'btn');
  fresh.disabled = running;

  const pause = button('Pause', () => {
    void actions.pauseRun().catch((e) => actions.handleFailure(e));
  }, 'btn');
  pause.disabled = progress?.state !== 'running';

  const resume = button('Resume', () => {
    void actions.resumeRun().catch((e) => actions.handleFailure(e));
  }, 'btn');
  resume.disabled = progress?.state !== 'paused';

  const cancel = button('Cancel', () => {
    void actions.cancelRun().catch((e) => actions.handleFailure(e));
  }, 'btn btn-danger');
  cancel.disabled = !running;

  const total = progress?.total ?? state.table?.row_count ?? 0;
  const processed = progress?.processed ?? 0;
  const percent = total > 0 ? Math.round((processed / total) * 100) : 0;

  const bar = el('div', { class: 'progress-track' }, [
    el('div', { class: 'progress-fill' }),
  ]);
  (bar.firstChild as HTMLElement).style.width = `${percent}%`;

  const counters = el('div', { class: 'counters' }, [
    counter('State', progress?.state ?? 'idle'),
    counter('Processed', `${processed} / ${total}`),
    counter('Succeeded', String(progress?.succeeded ?? 0), 'ok'),
    counter('Failed', String(progress?.failed ?? 0),
            (progress?.failed ?? 0) > 0 ? 'bad' : ''),
    counter('Tokens (est.)', String(progress?.token_estimate ?? 0)),
    counter('ETA', formatEta(progress?.eta_seconds ?? null)),
  ]);

  root.append(el('div', { class: 'card' }, [
    el('h2', { text: 'Task execution' }),
    el('div', { class: 'row' }, [start, fresh, pause, resume, cancel]),
    bar,
    counters,
    el('p', { class: 'hint current-title',
              text: progress?.current_title ? `Processing: ${progress.current_title}` : '' }),
  ]));
}

function counter(label: string, value: string, tone = ''): HTMLElement {
  return el('div', { class: `counter ${tone}` }, [
    el('span', { class: 'counter-value', text: value }),
    el('span', { class: 'counter-label', text: label }),
  ]);
}
