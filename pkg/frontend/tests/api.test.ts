import { describe, expect, it, vi } from "vitest";

import { ApiError, StudioClient } from "../src/api.js";

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

describe("StudioClient", () => {
  it("POSTs JSON when no dish image is attached", async () => {
    const fetchFn = vi.fn(async () => jsonResponse(201, { id: "x" }));
    const client = new StudioClient("http://svc", fetchFn as typeof fetch);
    await client.createArtwork({ text: "tea", palette_k: 5, whitespace_ratio: 0.3 });

    const [url, init] = fetchFn.mock.calls[0]! as unknown as [string, RequestInit];
    expect(url).toBe("http://svc/api/artworks");
    expect(init.method).toBe("POST");
    expect((init.headers as Record<string, string>)["content-type"]).toBe(
      "application/json",
    );
    expect(JSON.parse(init.body as string).text).toBe("tea");
  });

  it("switches to multipart when a dish image is attached", async () => {
    const fetchFn = vi.fn(async () => jsonResponse(201, { id: "x" }));
    const client = new StudioClient("", fetchFn as typeof fetch);
    await client.createArtwork(
      { text: "tea", palette_k: 3, whitespace_ratio: 0.2 },
      new Blob([new Uint8Array([1, 2, 3])], { type: "image/png" }),
    );

    const [, init] = fetchFn.mock.calls[0]! as unknown as [string, RequestInit];
    const form = init.body as FormData;
    expect(form).toBeInstanceOf(FormData);
    expect(JSON.parse(form.get("request") as string).palette_k).toBe(3);
    expect(form.get("dish_image")).toBeInstanceOf(Blob);
  });

  it("surfaces the server's field error on 422", async () => {
    const fetchFn = vi.fn(async () =>
      jsonResponse(422, { error: { field: "text", message: "must be a nonempty string" } }),
    );
    const client = new StudioClient("", fetchFn as typeof fetch);
    const err = await client
      .createArtwork({ text: "", palette_k: 5, whitespace_ratio: 0.3 })
      .catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(422);
    expect((err as ApiError).fieldError?.field).toBe("text");
  });

  it("tolerates non-JSON error bodies", async () => {
    const fetchFn = vi.fn(async () => new Response("boom", { status: 500 }));
    const client = new StudioClient("", fetchFn as typeof fetch);
    const err = await client.listStyles().catch((e: unknown) => e);
    expect((err as ApiError).status).toBe(500);
    expect((err as ApiError).fieldError).toBeNull();
  });

  it("unwraps list envelopes", async () => {
    const fetchFn = vi.fn(async (url: RequestInfo | URL) => {
      if (String(url).includes("/api/styles")) {
        return jsonResponse(200, {
          styles: [{ style_id: "slate", display_name: "Slate", preview_url: "/p" }],
        });
      }
      return jsonResponse(200, { artworks: [{ id: "a" }, { id: "b" }] });
    });
    const client = new StudioClient("", fetchFn as typeof fetch);
    expect((await client.listStyles()).map((s) => s.style_id)).toEqual(["slate"]);
    expect((await client.listArtworks(0, 2)).map((r) => r.id)).toEqual(["a", "b"]);
    expect(fetchFn.mock.calls[1]![0]).toContain("offset=0&limit=2");
  });

  it("treats any non-204 feedback response as an error", async () => {
    const fetchFn = vi.fn(async () =>
      jsonResponse(404, { error: { field: "id", message: "unknown artwork" } }),
    );
    const client = new StudioClient("", fetchFn as typeof fetch);
    const err = await client.submitFeedback("nope", 4).catch((e: unknown) => e);
    expect((err as ApiError).status).toBe(404);
  });

  it("builds stable image URLs", () => {
    expect(new StudioClient("http://svc").imageUrl("abc")).toBe(
      "http://svc/api/artworks/abc/image",
    );
  });
});
