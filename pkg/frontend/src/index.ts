export { ApiClient, ApiError } from "./client.js";
export { ROUTES, matchRoute } from "./routes.js";
export { FormModel, renderForm, validateField } from "./form.js";
export { UiSession } from "./session.js";
export { JobHistory } from "./jobs.js";
export { previewRunCount, previewLabel, wizardReady, predictionPreview } from "./wizard.js";
export { dashboardView } from "./dashboard.js";
export * from "./types.js";
