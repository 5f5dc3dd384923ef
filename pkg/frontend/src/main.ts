import { ApiClient } from './api.js';
import { WizardActions } from './actions.js';
import { Store } from './store.js';
import { mountWizard } from './wizard.js';

const api = new ApiClient('');
const store = new Store();
const actions = new WizardActions(api, store);

const root = document.getElementById('app');
if (!root) throw new Error('missing #app mount point');

mountWizard(root, store, actions);
void actions.bootstrap().catch(() => {
  // Banner with retry is already showing; nothing else to do.
});
