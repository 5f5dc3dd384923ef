import type { WizardActions } from '../actions.js';
import { button, el } from '../dom.js';
import type { UiState } from '../store.js';

export function renderResultsTab(root: HTMLElement, state: UiState,
                                 actions: WizardActions): void {
  const fieldNames = state.schema.fields.map((f) => f.name);

  const modeSelect = el('select', { class: 'input input-small' }, [
    el('option', { value: 'all_columns', text: 'original + extracted' }),
    el('option', { value: 'extracted_only', text: 'extracted only' }),
  ]);
  const statusToggle = el('input', { type: 'checkbox' });

  const exports = el('div', { class: 'row' });
  for (const format of ['csv', 'json', 'xlsx']) {
    exports.append(button(`Export ${format.toUpperCase()}`, () => {
      const anchor = document.createElement('a');
      anchor.href = actions.api.exportUrl(modeSelect.value, format, statusToggle.checked);
      anchor.download = '';
      anchor.click();
    }, 'btn'));
  }

  const grid = el('table', { class: 'preview results-grid' });
  const header = el('tr', {}, [el('th', { text: '#' }), el('th', { text: 'status' })]);
  for (const name of fieldNames) header.append(el('th', { text: name }));
  header.append(el('th', { text: '' }));
  grid.append(header);

  for (const result of state.results) {
    const tr = el('tr', { class: result.status === 'failed' ? 'row-failed' : '' });
    tr.append(el('td', { text: String(result.row_index + 1) }));
    tr.append(el('td', {
      class: result.status === 'success' ? 'status-ok' : 'status-bad',
      title: result.error ?? '',
      text: result.status + (result.attempts > 1 ? ` (${result.attempts}×)` : ''),
    }));
    for (const name of fieldNames) {
      const raw = result.extracted[name];
      const display = raw === undefined || raw === null
        ? ''
        : Array.isArray(raw) ? raw.join('; ') : String(raw);
      const cell = el('td', { class: 'editable', title: 'click to edit', text: display });
      cell.addEventListener('click', () => beginEdit(cell, result.row_index, name, display));
      tr.append(cell);
    }
    const retry = button('retry', () => {
      void actions.retryRow(result.row_index).catch((e) => actions.handleFailure(e));
    }, 'btn btn-small');
    tr.append(el('td', {}, [retry]));
    grid.append(tr);
  }

  function beginEdit(cell: HTMLTableCellElement, rowIndex: number,
                     name: string, current: string): void {
    if (cell.querySelector('input')) return;
    const input = el('input', { class: 'input input-small' });
    input.value = current;
    cell.replaceChildren(input);
    input.focus();

    const commit = () => {
      void actions.editCell(rowIndex, name, input.value)
        .catch((e) => actions.handleFailure(e));
    };
    input.addEventListener('keydown', (event) => {
      if (event.key === 'Enter') commit();
      if (event.key === 'Escape') cell.textContent = current;
    });
    input.addEventListener('blur', commit);
  }

  root.append(el('div', { class: 'card' }, [
    el('h2', { text: 'Results' }),
    el('div', { class: 'row' }, [
      exports,
      el('label', { class: 'checkbox' }, [statusToggle, 'include status columns']),
    ]),
    el('div', { class: 'scroll-x' }, [grid]),
    el('p', { class: 'hint', text: 'Click any extracted cell to correct it; ' +
                                   'edits are saved immediately and survive export.' }),
  ]));
}
