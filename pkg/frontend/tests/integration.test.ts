/**
 * Round-trip test against the real HTTP service: form state -> generation ->
 * gallery -> rating, through the same client modules the browser app uses.
 * A throwaway service (tiny corpus, briefly trained model) is spawned for the
 * duration of the suite.
 */
import { type ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const HERE = dirname(fileURLToPath(import.meta.url));
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiError, StudioClient } from "../src/api.js";
import {
  beginGeneration,
  buildRequest,
  completeGeneration,
  defaultFormState,
  initialSession,
  type SessionState,
} from "../src/state.js";
import type { StudioFormState } from "../src/types.js";
import { validateForm, validateRating } from "../src/validation.js";

const PORT = 8721;
const BASE = `http://127.0.0.1:${PORT}`;
const STARTUP_MS = 180_000;

let service: ChildProcess;
let workdir: string;
const client = new StudioClient(BASE);

async function waitForService(): Promise<void> {
  const deadline = Date.now() + STARTUP_MS;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`${BASE}/api/styles`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 500));
  }
  throw new Error("service did not come up in time");
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "studio-ui-"));
  service = spawn(
    "python3",
    [join(HERE, "..", "scripts", "dev_service.py"),
     "--workdir", workdir, "--port", String(PORT)],
    { stdio: ["ignore", "inherit", "inherit"] },
  );
  await waitForService();
}, STARTUP_MS);

afterAll(() => {
  service?.kill();
  if (workdir) rmSync(workdir, { recursive: true, force: true });
});

function validForm(overrides: Partial<StudioFormState> = {}): StudioFormState {
  return { ...defaultFormState(), text: "麻婆豆腐", ...overrides };
}

describe("studio round trip", () => {
  let session: SessionState = initialSession();
  let firstArtworkId = "";

  it("generates an artwork from a valid form and lands it in the gallery", async () => {
    const form = validForm();
    expect(validateForm(form)).toEqual([]);

    session = beginGeneration(session)!;
    const record = await client.createArtwork(buildRequest(form, session.lastSeed));
    session = completeGeneration(session, record);
    firstArtworkId = record.id;

    expect(record.request.text).toBe("麻婆豆腐");
    expect(typeof record.request.seed).toBe("number");
    expect(record.scores.length).toBeGreaterThan(0);

    const gallery = await client.listArtworks();
    expect(gallery.map((r) => r.id)).toContain(record.id);

    const image = await client.fetchImage(record.id);
    expect(image.size).toBeGreaterThan(0);
  });

  it("reproduces the identical image when regenerating with seedLock on", async () => {
    const locked = validForm({ seedLock: true });
    const body = buildRequest(locked, session.lastSeed);
    expect(body.seed).toBe(session.lastSeed);

    const record = await client.createArtwork(body);
    const [a, b] = await Promise.all([
      client.fetchImage(firstArtworkId),
      client.fetchImage(record.id),
    ]);
    expect(Buffer.from(await a.arrayBuffer()).equals(
      Buffer.from(await b.arrayBuffer()),
    )).toBe(true);
  });

  it("round-trips a rating and shows it on the gallery card", async () => {
    expect(validateRating(5)).toEqual([]);
    await client.submitFeedback(firstArtworkId, 5, "favorite");

    const record = await client.getArtwork(firstArtworkId);
    expect(record.feedback.at(-1)).toMatchObject({ rating: 5, comment: "favorite" });
  });

  it("applies a server-advertised style end to end", async () => {
    const styles = await client.listStyles();
    expect(styles.length).toBeGreaterThan(0);
    const styleId = styles[0]!.style_id;

    const form = validForm({ styleId, styleStrength: 0.5 });
    expect(validateForm(form, styles.map((s) => s.style_id))).toEqual([]);
    const record = await client.createArtwork(buildRequest(form, null));
    expect(record.request.style_id).toBe(styleId);
  });
});

describe("client validation mirrors the server", () => {
  // every server 422 rule the client can check locally, with a request that
  // trips it; the client must flag the same field the server names
  const cases: { name: string; form: StudioFormState; field: string }[] = [
    { name: "empty text", form: validForm({ text: "" }), field: "text" },
    { name: "palette_k too small", form: validForm({ paletteK: 0 }), field: "palette_k" },
    { name: "palette_k too large", form: validForm({ paletteK: 17 }), field: "palette_k" },
    {
      name: "whitespace_ratio out of range",
      form: validForm({ whitespaceRatio: 0.95 }),
      field: "whitespace_ratio",
    },
    {
      name: "style_strength out of range",
      form: validForm({ styleId: "color-field", styleStrength: 1.5 }),
      field: "style_strength",
    },
    {
      name: "negative weight",
      form: validForm({ weights: [0.5, -0.2, 0.2, 0.2, 0.2] }),
      field: "weights",
    },
    {
      name: "all-zero weights",
      form: validForm({ weights: [0, 0, 0, 0, 0] }),
      field: "weights",
    },
  ];

  it.each(cases)("server and client both reject: $name", async ({ form, field }) => {
    const clientErrors = validateForm(form);
    expect(clientErrors.map((e) => e.field)).toContain(field);

    // bypass buildRequest's normalization (it drops default-equal weights),
    // so the server sees exactly the offending values
    const body = { ...buildRequest(form, null), weights: [...form.weights] };
    const err = await client.createArtwork(body).catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(422);
    expect((err as ApiError).fieldError?.field).toBe(field);
  });

  it("never lets a client-approved form 422 on the server", async () => {
    const forms = [
      validForm(),
      validForm({ paletteK: 1, whitespaceRatio: 0 }),
      validForm({ paletteK: 16, whitespaceRatio: 0.9, caption: "midnight menu" }),
      validForm({ weights: [1, 0, 0, 0, 0] }),
    ];
    for (const form of forms) {
      expect(validateForm(form)).toEqual([]);
      const record = await client.createArtwork(buildRequest(form, null));
      expect(record.id).toBeTruthy();
    }
  });

  it("client rating bounds match the server's", async () => {
    expect(validateRating(0)).toHaveLength(1);
    const err = await client
      .submitFeedback((await client.listArtworks())[0]!.id, 0)
      .catch((e: unknown) => e);
    expect((err as ApiError).status).toBe(422);
    expect((err as ApiError).fieldError?.field).toBe("rating");
  });
});
