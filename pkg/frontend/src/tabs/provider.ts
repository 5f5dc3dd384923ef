import type { WizardActions } from '../actions.js';
import { button, el, labeled } from '../dom.js';
import type { UiState } from '../store.js';
import type { Settings } from '../types.js';

export function renderProviderTab(root: HTMLElement, state: UiState,
                                  actions: WizardActions): void {
  const settings: Settings = state.settings ?? {
    provider: 'custom', base_url: null, model: '', temperature: null,
    concurrency: 3, interval_ms: 0, max_retries: 3, retry_delay_ms: 1000,
    typed_annotations: false,
  };

  const providerSelect = el('select', { class: 'input' });
  for (const id of Object.keys(state.providers)) {
    const option = el('option', { value: id, text: id });
    if (id === settings.provider) option.selected = true;
    providerSelect.append(option);
  }

  const baseUrlInput = el('input', { class: 'input', placeholder: 'https://…/v1' });
  baseUrlInput.value = settings.base_url ?? '';

  const modelInput = el('input', { class: 'input', list: 'model-options' });
  modelInput.value = settings.model;
  const modelOptions = el('datalist', { id: 'model-options' });

  function refreshModelOptions(): void {
    modelOptions.replaceChildren();
    const info = state.providers[providerSelect.value];
    for (const model of info?.models ?? []) {
      modelOptions.append(el('option', { value: model }));
    }
  }
  refreshModelOptions();
  providerSelect.addEventListener('change', refreshModelOptions);

  const keyInput = el('input', { class: 'input', type: 'password', autocomplete: 'off',
                                 placeholder: settings.has_credential ? '(stored)' : 'sk-…' });
  const showKey = button('show', () => {
    const masked = keyInput.type === 'password';
    keyInput.type = masked ? 'text' : 'password';
    showKey.textContent = masked ? 'hide' : 'show';
  }, 'btn btn-small');

  const concurrencyInput = el('input', { class: 'input', type: 'number',
                                         min: '1', max: '10' });
  concurrencyInput.value = String(settings.concurrency);
  const intervalInput = el('input', { class: 'input', type: 'number',
                                      min: '0', max: '10000', step: '100' });
  intervalInput.value = String(settings.interval_ms);
  const retriesInput = el('input', { class: 'input', type: 'number', min: '0', max: '10' });
  retriesInput.value = String(settings.max_retries);
  const temperatureInput = el('input', { class: 'input', type: 'number',
                                         min: '0', max: '2', step: '0.1',
                                         placeholder: 'provider default' });
  if (settings.temperature !== null) temperatureInput.value = String(settings.temperature);

  const save = button('Save settings', () => {
    void actions.saveSettings({
      ...settings,
      provider: providerSelect.value,
      base_url: baseUrlInput.value || null,
      model: modelInput.value,
      api_key: keyInput.value || null,
      temperature: temperatureInput.value === '' ? null : Number(temperatureInput.value),
      concurrency: Number(concurrencyInput.value),
      interval_ms: Number(intervalInput.value),
      max_retries: Number(retriesInput.value),
    }).then(() => { keyInput.value = ''; })
      .catch((error) => actions.handleFailure(error));
  }, 'btn btn-primary');

  const clear = button('Clear all local data', () => {
    void actions.api.clearAllData()
      .then(() => actions.store.toast('success', 'Local data cleared'))
      .catch((error) => actions.handleFailure(error));
  }, 'btn btn-danger');

  root.append(
    el('div', { class: 'card' }, [
      el('h2', { text: 'LLM provider' }),
      labeled('Provider', providerSelect),
      labeled('Base URL (custom endpoints)', baseUrlInput),
      labeled('Model', el('span', {}, [modelInput, modelOptions])),
      labeled('API key', el('span', { class: 'row' }, [keyInput, showKey])),
      el('p', { class: 'hint',
                text: 'Keys are stored locally, Base64-obfuscated. Requests go ' +
                      'directly from this machine to the provider.' }),
    ]),
    el('div', { class: 'card' }, [
      el('h2', { text: 'Request shaping' }),
      labeled('Concurrency (1-10)', concurrencyInput),
      labeled('Interval between requests, ms (0-10000)', intervalInput),
      labeled('Automatic retries', retriesInput),
      labeled('Temperature', temperatureInput),
      el('div', { class: 'row' }, [save, clear]),
    ]),
  );
}
