/**
 * DOM wiring for the studio single-page app.
 *
 * Rendering is deliberately plain: build elements, attach listeners, redraw
 * the gallery from server data after every change. All decision logic lives
 * in state.ts / validation.ts so it can be tested without a browser.
 */
import { ApiError, StudioClient } from "./api.js";
import {
  beginGeneration,
  buildRequest,
  cardViewModel,
  completeGeneration,
  defaultFormState,
  dequeueFeedback,
  failGeneration,
  initialSession,
  queueFeedback,
  type SessionState,
} from "./state.js";
import type { StudioFormState } from "./types.js";
import { validateForm, validateRating } from "./validation.js";

const SLIDERS: {
  field: "paletteK" | "whitespaceRatio" | "styleStrength";
  label: string;
  min: number;
  max: number;
  step: number;
}[] = [
  { field: "paletteK", label: "Key colors", min: 1, max: 16, step: 1 },
  { field: "whitespaceRatio", label: "White space", min: 0, max: 0.9, step: 0.05 },
  { field: "styleStrength", label: "Style strength", min: 0, max: 1, step: 0.05 },
];

export class StudioApp {
  private form: StudioFormState = defaultFormState();
  private session: SessionState = initialSession();
  private styleIds: string[] = [];

  constructor(
    private readonly root: HTMLElement,
    private readonly client: StudioClient,
  ) {}

  async start(): Promise<void> {
    this.root.innerHTML = `
      <form id="studio-form">
        <input id="text" placeholder="Dish name" />
        <input id="dish-image" type="file" accept="image/*" />
        <input id="caption" placeholder="Caption (optional)" />
        <div id="sliders"></div>
        <div id="weights"></div>
        <select id="style"><option value="">No style transfer</option></select>
        <label><input id="seed-lock" type="checkbox" /> Lock seed</label>
        <button id="generate" type="submit" disabled>Generate</button>
        <div id="form-errors" role="alert"></div>
        <div id="retry-banner" hidden>Request failed — <button id="retry" type="button">retry</button></div>
      </form>
      <section id="gallery"></section>
    `;
    this.buildSliders();
    this.bindForm();
    await Promise.all([this.loadStyles(), this.refreshGallery()]);
  }

  private buildSliders(): void {
    const host = this.query("#sliders");
    for (const spec of SLIDERS) {
      const input = document.createElement("input");
      input.type = "range";
      input.min = String(spec.min);
      input.max = String(spec.max);
      input.step = String(spec.step);
      input.value = String(this.form[spec.field]);
      input.title = spec.label;
      input.addEventListener("input", () => {
        this.form = { ...this.form, [spec.field]: Number(input.value) };
        this.renderErrors();
      });
      host.append(input);
    }
    const weights = this.query("#weights");
    for (let i = 0; i < 5; i += 1) {
      const input = document.createElement("input");
      input.type = "range";
      input.min = "0";
      input.max = "1";
      input.step = "0.05";
      input.value = String(this.form.weights[i]);
      input.title = `Character ${i + 1} weight`;
      input.addEventListener("input", () => {
        const next = [...this.form.weights] as StudioFormState["weights"];
        next[i] = Number(input.value);
        this.form = { ...this.form, weights: next };
        this.renderErrors();
      });
      weights.append(input);
    }
  }

  private bindForm(): void {
    const text = this.query<HTMLInputElement>("#text");
    text.addEventListener("input", () => {
      this.form = { ...this.form, text: text.value };
      this.renderErrors();
    });
    const caption = this.query<HTMLInputElement>("#caption");
    caption.addEventListener("input", () => {
      this.form = { ...this.form, caption: caption.value };
    });
    const file = this.query<HTMLInputElement>("#dish-image");
    file.addEventListener("change", () => {
      this.form = { ...this.form, dishImageFile: file.files?.[0] ?? null };
    });
    const style = this.query<HTMLSelectElement>("#style");
    style.addEventListener("change", () => {
      this.form = { ...this.form, styleId: style.value || null };
    });
    const seedLock = this.query<HTMLInputElement>("#seed-lock");
    seedLock.addEventListener("change", () => {
      this.form = { ...this.form, seedLock: seedLock.checked };
    });
    this.query<HTMLFormElement>("#studio-form").addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.generate();
    });
    this.query("#retry").addEventListener("click", () => void this.generate());
  }

  private async loadStyles(): Promise<void> {
    const styles = await this.client.listStyles();
    this.styleIds = styles.map((s) => s.style_id);
    const select = this.query<HTMLSelectElement>("#style");
    for (const s of styles) {
      const option = document.createElement("option");
      option.value = s.style_id;
      option.textContent = s.display_name;
      select.append(option);
    }
  }

  private async generate(): Promise<void> {
    if (validateForm(this.form, this.styleIds).length > 0) {
      this.renderErrors();
      return;
    }
    const started = beginGeneration(this.session);
    if (started === null) return; // one in-flight request per session
    this.session = started;
    this.renderErrors();
    this.query("#retry-banner").hidden = true;
    try {
      const body = buildRequest(this.form, this.session.lastSeed);
      const record = await this.client.createArtwork(body, this.form.dishImageFile);
      this.session = completeGeneration(this.session, record);
      await this.refreshGallery();
    } catch (err) {
      this.session = failGeneration(this.session);
      if (err instanceof ApiError && err.status < 500 && err.fieldError) {
        this.query("#form-errors").textContent =
          `${err.fieldError.field}: ${err.fieldError.message}`;
      } else {
        this.query("#retry-banner").hidden = false;
      }
    }
    this.renderErrors();
  }

  private async refreshGallery(): Promise<void> {
    const records = await this.client.listArtworks(0, 50);
    const host = this.query("#gallery");
    host.innerHTML = "";
    for (const record of records.slice().reverse()) {
      const view = cardViewModel(record, this.client.imageUrl(record.id));
      const card = document.createElement("article");
      card.className = "artwork-card";
      card.innerHTML = `
        <img src="${view.imageUrl}" alt="artwork ${view.id}" />
        <p>${view.characters} · seed ${view.seed}${
          view.bestScore !== null ? ` · score ${view.bestScore.toFixed(3)}` : ""
        }</p>
        <div class="swatches">${view.paletteCss
          .map((c) => `<span style="background:${c}"></span>`)
          .join("")}</div>
        <p class="rating">${view.rating !== null ? `rated ${view.rating}/5` : ""}</p>
      `;
      card.append(this.ratingWidget(record.id));
      host.append(card);
    }
  }

  private ratingWidget(artworkId: string): HTMLElement {
    const div = document.createElement("div");
    for (let rating = 1; rating <= 5; rating += 1) {
      const button = document.createElement("button");
      button.type = "button";
      button.textContent = String(rating);
      button.addEventListener("click", () => void this.rate(artworkId, rating));
      div.append(button);
    }
    return div;
  }

  private async rate(artworkId: string, rating: number): Promise<void> {
    if (validateRating(rating).length > 0) return;
    try {
      await this.client.submitFeedback(artworkId, rating);
      await this.refreshGallery();
    } catch (err) {
      if (err instanceof ApiError) throw err;
      // network failure: queue for retry, surface the indicator
      this.session = queueFeedback(this.session, artworkId, rating, "");
      this.query("#retry-banner").hidden = false;
    }
  }

  /** Re-send any feedback that failed on a network error. */
  async flushFeedbackQueue(): Promise<void> {
    while (this.session.feedbackQueue.length > 0) {
      const item = this.session.feedbackQueue[0]!;
      await this.client.submitFeedback(item.artworkId, item.rating, item.comment);
      this.session = dequeueFeedback(this.session);
    }
  }

  private renderErrors(): void {
    const errors = validateForm(this.form, this.styleIds);
    this.query("#form-errors").textContent = errors
      .map((e) => `${e.field}: ${e.message}`)
      .join("; ");
    this.query<HTMLButtonElement>("#generate").disabled =
      errors.length > 0 || this.session.pending;
  }

  private query<T extends HTMLElement = HTMLElement>(selector: string): T {
    const el = this.root.querySelector<T>(selector);
    if (!el) throw new Error(`missing element ${selector}`);
    return el;
  }
}

export function mount(root: HTMLElement, baseUrl = ""): StudioApp {
  const app = new StudioApp(root, new StudioClient(baseUrl));
  void app.start();
  return app;
}
