import { FormField } from "./types.js";

export interface FieldState {
  field: FormField;
  value: unknown;
  error: string | null;
}

/** Validate one field value against its widget kind. */
export function validateField(field: FormField, value: unknown): string | null {
  const empty = value === undefined || value === null || value === "";
  if (empty) {
    return field.required ? "required" : null;
  }
  switch (field.widget) {
    case "number":
      return typeof value === "number" && Number.isFinite(value) ? null : "must be a number";
    case "checkbox":
      return typeof value === "boolean" ? null : "must be a boolean";
    case "select":
      return field.options.includes(String(value)) ? null : "not an allowed option";
    case "text":
    case "file-picker":
      return typeof value === "string" ? null : "must be a string";
  }
}

/** One widget per input parameter; submit enabled only when every
 * required field validates. */
export class FormModel {
  readonly fields: FieldState[];

  constructor(schema: FormField[]) {
    this.fields = schema.map((field) => {
      const value = field.default ?? (field.widget === "checkbox" ? false : "");
      return { field, value, error: validateField(field, value) };
    });
  }

  setValue(fieldId: string, value: unknown): void {
    const state = this.fields.find((f) => f.field.field_id === fieldId);
    if (!state) throw new Error(`no such field: ${fieldId}`);
    state.value = value;
    state.error = validateField(state.field, value);
  }

  get submitEnabled(): boolean {
    return this.fields.every((f) => f.error === null);
  }

  /** Bindings for POST /v1/tasks; optional empty fields are omitted. */
  bindings(): Record<string, unknown> {
    const out: Record<string, unknown> = {};
    for (const { field, value } of this.fields) {
      if (value === "" || value === null || value === undefined) continue;
      out[field.field_id] = value;
    }
    return out;
  }
}

export interface Widget {
  fieldId: string;
  kind: FormField["widget"];
  html: string;
}

/** Render the form as plain widgets; exactly one per field. */
export function renderForm(model: FormModel): Widget[] {
  return model.fields.map(({ field, value, error }) => {
    const id = field.field_id;
    let control: string;
    switch (field.widget) {
      case "number":
        control = `<input type="number" name="${id}" value="${value ?? ""}">`;
        break;
      case "checkbox":
        control = `<input type="checkbox" name="${id}"${value ? " checked" : ""}>`;
        break;
      case "select":
        control =
          `<select name="${id}">` +
          field.options
            .map((o) => `<option${o === value ? " selected" : ""}>${o}</option>`)
            .join("") +
          `</select>`;
        break;
      case "file-picker":
        control = `<input type="text" name="${id}" placeholder="path or size:<mb>" value="${value ?? ""}">`;
        break;
      case "text":
        control = `<input type="text" name="${id}" value="${value ?? ""}">`;
        break;
    }
    const message = error ? `<span class="error">${error}</span>` : "";
    return {
      fieldId: id,
      kind: field.widget,
      html: `<label>${field.label}${field.required ? " *" : ""}</label>${control}${message}`,
    };
  });
}
