/** Tab shell: navigation with stage gating, toasts, modals, service banner. */

import type { WizardActions } from './actions.js';
import { button, el } from './dom.js';
import { canEnterTab, type Store, type UiState } from './store.js';
import { renderProviderTab } from './tabs/provider.js';
import { renderResultsTab } from './tabs/results.js';
import { renderRunTab } from './tabs/run.js';
import { renderSchemaTab } from './tabs/schema.js';
import { renderUploadTab } from './tabs/upload.js';
import { TAB_IDS, TAB_TITLES, type TabId } from './types.js';

const RENDERERS: Record<TabId, (root: HTMLElement, state: UiState,
                                actions: WizardActions) => void> = {
  provider: renderProviderTab,
  upload: renderUploadTab,
  schema: renderSchemaTab,
  run: renderRunTab,
  results: renderResultsTab,
};

function contentKey(state: UiState): string {
  // Rebuild the main pane only when something it renders from changes;
  // keystrokes in inputs never land in the store, so typing is safe.
  return JSON.stringify([
    state.activeTab, state.serviceOk, Object.keys(state.providers),
    state.settings, state.table, state.mapping, state.schema,
    state.progress, state.results.length,
    state.results.map((r) => [r.row_index, r.status, r.extracted]),
  ]);
}

export function mountWizard(root: HTMLElement, store: Store,
                            actions: WizardActions): void {
  const banner = el('div', { class: 'banner hidden' });
  const nav = el('nav', { class: 'wizard-nav' });
  const content = el('section', { class: 'wizard-content' });
  const toasts = el('div', { class: 'toasts' });
  const modal = el('div', { class: 'modal-overlay hidden' });

  root.append(
    el('header', { class: 'topbar' }, [
      el('h1', { text: 'litxtract' }),
      el('span', { class: 'subtitle', text: 'schema-guided literature extraction' }),
    ]),
    banner, nav, content, toasts, modal,
  );

  let lastKey = '';

  function renderNav(state: UiState): void {
    nav.replaceChildren();
    TAB_IDS.forEach((tab, index) => {
      const enterable = canEnterTab(state, tab);
      const node = button(`${index + 1}. ${TAB_TITLES[tab]}`, () => {
        store.goTo(tab);
      }, 'tab');
      node.disabled = !enterable;
      if (tab === state.activeTab) node.classList.add('active');
      nav.append(node);
    });
  }

  function renderBanner(state: UiState): void {
    if (state.serviceOk) {
      banner.classList.add('hidden');
      return;
    }
    banner.classList.remove('hidden');
    banner.replaceChildren(
      el('span', { text: 'Control service unreachable.' }),
      button('Retry', () => {
        void actions.bootstrap().catch(() => undefined);
      }, 'btn btn-small'),
    );
  }

  function renderToasts(state: UiState): void {
    toasts.replaceChildren(
      ...state.toasts.map((toast) =>
        el('div', { class: `toast toast-${toast.kind}`, text: toast.message })),
    );
  }

  function renderModal(state: UiState): void {
    if (!state.modal) {
      modal.classList.add('hidden');
      modal.replaceChildren();
      return;
    }
    modal.classList.remove('hidden');
    modal.replaceChildren(el('div', { class: 'modal' }, [
      el('div', { class: 'modal-head' }, [
        el('h3', { text: state.modal.title }),
        button('close', () => actions.closeModal(), 'btn btn-small'),
      ]),
      ...state.modal.sections.map((section) =>
        el('div', {}, [
          el('h4', { text: section.label }),
          el('pre', { class: 'modal-pre', text: section.text }),
        ])),
    ]));
  }

  function sync(state: UiState): void {
    renderBanner(state);
    renderToasts(state);
    renderModal(state);
    const key = contentKey(state);
    if (key === lastKey) return;
    lastKey = key;
    renderNav(state);
    content.replaceChildren();
    RENDERERS[state.activeTab](content, state, actions);
  }

  sync(store.get());
  store.subscribe(sync);
}
