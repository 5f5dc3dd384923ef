import type { WizardActions } from '../actions.js';
import { el } from '../dom.js';
import type { UiState } from '../store.js';

const CATEGORIES = ['Title', 'Abstract', 'Keywords', 'Authors', 'Source', 'PubDate', 'DOI'];

export function renderUploadTab(root: HTMLElement, state: UiState,
                                actions: WizardActions): void {
  const fileInput = el('input', { type: 'file', accept: '.csv,.xlsx', class: 'hidden' });
  fileInput.addEventListener('change', () => {
    const file = fileInput.files?.[0];
    if (file) void actions.uploadFile(file, file.name)
      .catch((error) => actions.handleFailure(error));
  });

  const zone = el('div', { class: 'dropzone' }, [
    el('p', { text: 'Drop a CSV or xlsx export here' }),
    el('p', { class: 'hint', text: 'or click to browse' }),
  ]);
  zone.addEventListener('click', () => fileInput.click());
  zone.addEventListener('dragover', (event) => {
    event.preventDefault();
    zone.classList.add('dragging');
  });
  zone.addEventListener('dragleave', () => zone.classList.remove('dragging'));
  zone.addEventListener('drop', (event) => {
    event.preventDefault();
    zone.classList.remove('dragging');
    const file = event.dataTransfer?.files?.[0];
    if (file) void actions.uploadFile(file, file.name)
      .catch((error) => actions.handleFailure(error));
  });

  root.append(el('div', { class: 'card' }, [
    el('h2', { text: 'Data upload' }), zone, fileInput,
  ]));

  if (!state.table) return;

  const badges = el('div', { class: 'badges' });
  for (const category of CATEGORIES) {
    const column = state.mapping[category];
    badges.append(el('span', {
      class: column ? 'badge badge-ok' : 'badge badge-miss',
      text: column ? `${category} ← ${column}` : `${category}: not found`,
    }));
  }

  const mappingEditor = el('div', { class: 'mapping-grid' });
  for (const category of CATEGORIES) {
    const select = el('select', { class: 'input input-small' });
    select.append(el('option', { value: '', text: '(none)' }));
    for (const column of state.table.columns) {
      const option = el('option', { value: column, text: column });
      if (state.mapping[category] === column) option.selected = true;
      select.append(option);
    }
    select.addEventListener('change', () => {
      const entries: Record<string, string> = { ...state.mapping };
      if (select.value) entries[category] = select.value;
      else delete entries[category];
      void actions.saveMapping(entries).catch((error) => actions.handleFailure(error));
    });
    mappingEditor.append(el('div', { class: 'mapping-row' }, [
      el('span', { class: 'field-label', text: category }), select,
    ]));
  }

  const preview = el('table', { class: 'preview' });
  const headerRow = el('tr');
  for (const column of state.table.columns) headerRow.append(el('th', { text: column }));
  preview.append(headerRow);
  for (const row of state.table.preview) {
    const tr = el('tr');
    for (const column of state.table.columns) {
      const cell = row[column] ?? '';
      tr.append(el('td', { title: cell, text: cell.length > 40 ? cell.slice(0, 40) + '…' : cell }));
    }
    preview.append(tr);
  }

  root.append(
    el('div', { class: 'card' }, [
      el('h2', { text: `${state.table.source_name} — ${state.table.row_count} rows` }),
      el('h3', { text: 'Recognized columns' }),
      badges,
      el('h3', { text: 'Adjust mapping' }),
      mappingEditor,
    ]),
    el('div', { class: 'card' }, [
      el('h3', { text: 'Preview (first rows)' }),
      el('div', { class: 'scroll-x' }, [preview]),
    ]),
  );
}
