import { describe, expect, it } from "vitest";

import { FormModel, renderForm } from "../src/form.js";
import { FormField } from "../src/types.js";

function field(partial: Partial<FormField> & { field_id: string }): FormField {
  return {
    label: partial.field_id,
    widget: "text",
    required: true,
    default: null,
    options: [],
    ...partial,
  } as FormField;
}

// a deterministic spread of descriptor shapes, mirroring what the
// service's form endpoint can produce
function generatedDescriptors(): FormField[][] {
  const widgets: FormField["widget"][] = ["number", "text", "checkbox", "file-picker", "select"];
  const descriptors: FormField[][] = [];
  for (let d = 0; d < 10; d++) {
    const n = (d % 5) + 1;
    const fields: FormField[] = [];
    for (let i = 0; i < n; i++) {
      const widget = widgets[(d + i) % widgets.length]!;
      fields.push(
        field({
          field_id: `p${i}`,
          widget,
          required: (d + i) % 3 !== 0,
          options: widget === "select" ? ["a", "b", "c"] : [],
          default: widget === "checkbox" ? false : null,
        })
      );
    }
    descriptors.push(fields);
  }
  return descriptors;
}

describe("form generation", () => {
  it("renders exactly one widget per input for 10 generated descriptors", () => {
    for (const schema of generatedDescriptors()) {
      const widgets = renderForm(new FormModel(schema));
      expect(widgets.length).toBe(schema.length);
      expect(widgets.map((w) => w.fieldId)).toEqual(schema.map((f) => f.field_id));
      widgets.forEach((w, i) => expect(w.kind).toBe(schema[i]!.widget));
    }
  });

  it("disables submit while a required field is empty", () => {
    const model = new FormModel([
      field({ field_id: "size", widget: "number" }),
      field({ field_id: "note", widget: "text", required: false }),
    ]);
    expect(model.submitEnabled).toBe(false);
    model.setValue("size", 500);
    expect(model.submitEnabled).toBe(true);
    model.setValue("size", "");
    expect(model.submitEnabled).toBe(false);
  });

  it("validates widget kinds", () => {
    const model = new FormModel([
      field({ field_id: "n", widget: "number" }),
      field({ field_id: "mode", widget: "select", options: ["fast", "slow"] }),
      field({ field_id: "flag", widget: "checkbox", required: false, default: false }),
    ]);
    model.setValue("n", "not a number");
    expect(model.fields[0]!.error).toBe("must be a number");
    model.setValue("mode", "warp");
    expect(model.fields[1]!.error).toBe("not an allowed option");
    model.setValue("n", 3);
    model.setValue("mode", "fast");
    expect(model.submitEnabled).toBe(true);
    expect(model.bindings()).toEqual({ n: 3, mode: "fast", flag: false });
  });

  it("prefills defaults and treats optional empty fields as omitted", () => {
    const model = new FormModel([
      field({ field_id: "k", widget: "number", required: false, default: 7 }),
      field({ field_id: "path", widget: "file-picker", required: false }),
    ]);
    expect(model.submitEnabled).toBe(true);
    expect(model.bindings()).toEqual({ k: 7 });
  });
});
