import type { WizardActions } from '../actions.js';
import { button, el, insertAtCursor } from '../dom.js';
import type { UiState } from '../store.js';
import type { SchemaField } from '../types.js';

const FIELD_TYPES: SchemaField['type'][] = ['text', 'number', 'list', 'boolean'];

export function renderSchemaTab(root: HTMLElement, state: UiState,
                                actions: WizardActions): void {
  const fields: SchemaField[] = state.schema.fields.map((f) => ({ ...f }));

  const fieldRows = el('div', { class: 'field-rows' });

  function fieldRow(field: SchemaField, index: number): HTMLElement {
    const name = el('input', { class: 'input input-small', placeholder: 'field name' });
    name.value = field.name;
    name.addEventListener('change', () => { fields[index].name = name.value; });

    const description = el('input', { class: 'input', placeholder: 'description (optional)' });
    description.value = field.description;
    description.addEventListener('change', () => {
      fields[index].description = description.value;
    });

    const type = el('select', { class: 'input input-small' });
    for (const t of FIELD_TYPES) {
      const option = el('option', { value: t, text: t });
      if (t === field.type) option.selected = true;
      type.append(option);
    }
    type.addEventListener('change', () => {
      fields[index].type = type.value as SchemaField['type'];
    });

    const required = el('input', { type: 'checkbox' });
    required.checked = field.required;
    required.addEventListener('change', () => { fields[index].required = required.checked; });

    const remove = button('×', () => {
      fields.splice(index, 1);
      void actions.saveSchema({ fields }).catch((e) => actions.handleFailure(e));
    }, 'btn btn-small btn-danger');

    return el('div', { class: 'field-row' }, [
      name, description, type,
      el('label', { class: 'checkbox' }, [required, 'required']),
      remove,
    ]);
  }

  fields.forEach((field, index) => fieldRows.append(fieldRow(field, index)));

  const addField = button('+ Add field', () => {
    fields.push({ name: '', description: '', type: 'text', required: true });
    void actions.saveSchema({ fields: fields.filter((f) => f.name) })
      .catch((e) => actions.handleFailure(e));
    fieldRows.append(fieldRow(fields[fields.length - 1], fields.length - 1));
  }, 'btn btn-small');

  const saveFields = button('Save fields', () => {
    void actions.saveSchema({ fields: fields.filter((f) => f.name) })
      .then(() => actions.store.toast('success', 'Schema saved'))
      .catch((e) => actions.handleFailure(e));
  }, 'btn btn-primary');

  const presets = el('div', { class: 'row' }, [
    button('Preset: paper information', () => {
      void actions.applyPreset('paper_info').catch((e) => actions.handleFailure(e));
    }, 'btn'),
    button('Preset: literature review', () => {
      void actions.applyPreset('lit_review').catch((e) => actions.handleFailure(e));
    }, 'btn'),
  ]);

  const template = el('textarea', { class: 'input textarea', rows: '6',
                                    placeholder: 'Leave empty to build one from the mapping' });
  template.value = state.schema.user_template;
  template.addEventListener('change', () => {
    void actions.saveSchema({ user_template: template.value })
      .catch((e) => actions.handleFailure(e));
  });

  const tags = el('div', { class: 'badges' });
  for (const column of state.table?.columns ?? []) {
    const tag = button(`{{${column}}}`, () => {
      insertAtCursor(template, `{{${column}}}`);
      void actions.saveSchema({ user_template: template.value })
        .catch((e) => actions.handleFailure(e));
    }, 'badge badge-tag');
    tags.append(tag);
  }

  const previewBtn = button('Preview prompt', () => {
    void actions.showPromptPreview().catch((e) => actions.handleFailure(e));
  }, 'btn');
  const testBtn = button('Test first row', () => {
    actions.store.toast('info', 'Testing row 1…');
    void actions.testSingleRow(0).catch((e) => actions.handleFailure(e));
  }, 'btn');

  root.append(
    el('div', { class: 'card' }, [
      el('h2', { text: 'Extraction fields' }),
      presets,
      fieldRows,
      el('div', { class: 'row' }, [addField, saveFields]),
    ]),
    el('div', { class: 'card' }, [
      el('h2', { text: 'User prompt template' }),
      el('p', { class: 'hint', text: 'Click a column tag to insert it at the cursor.' }),
      tags,
      template,
      el('div', { class: 'row' }, [previewBtn, testBtn]),
    ]),
  );
}
