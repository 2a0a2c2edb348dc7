/** Typed client for the artwork service REST API. */
import type {
  ApiFieldError,
  ArtworkRecord,
  GenerationRequestBody,
  StyleInfo,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly fieldError: ApiFieldError | null,
  ) {
    super(fieldError ? `${fieldError.field}: ${fieldError.message}` : `HTTP ${status}`);
    this.name = "ApiError";
  }
}

async function raise(response: Response): Promise<never> {
  let fieldError: ApiFieldError | null = null;
  try {
    const body = await response.json();
    if (body && typeof body === "object" && "error" in body) {
      fieldError = (body as { error: ApiFieldError }).error;
    }
  } catch {
    // non-JSON error body; status code is all we have
  }
  throw new ApiError(response.status, fieldError);
}

export class StudioClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  async createArtwork(
    body: GenerationRequestBody,
    dishImage?: Blob | null,
  ): Promise<ArtworkRecord> {
    let response: Response;
    if (dishImage) {
      const form = new FormData();
      form.append("request", JSON.stringify(body));
      form.append("dish_image", dishImage, "dish.png");
      response = await this.fetchFn(`${this.baseUrl}/api/artworks`, {
        method: "POST",
        body: form,
      });
    } else {
      response = await this.fetchFn(`${this.baseUrl}/api/artworks`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      });
    }
    if (response.status !== 201) await raise(response);
    return (await response.json()) as ArtworkRecord;
  }

  async listArtworks(offset = 0, limit = 20): Promise<ArtworkRecord[]> {
    const response = await this.fetchFn(
      `${this.baseUrl}/api/artworks?offset=${offset}&limit=${limit}`,
    );
    if (!response.ok) await raise(response);
    const body = (await response.json()) as { artworks: ArtworkRecord[] };
    return body.artworks;
  }

  async getArtwork(id: string): Promise<ArtworkRecord> {
    const response = await this.fetchFn(`${this.baseUrl}/api/artworks/${id}`);
    if (!response.ok) await raise(response);
    return (await response.json()) as ArtworkRecord;
  }

  imageUrl(id: string): string {
    return `${this.baseUrl}/api/artworks/${id}/image`;
  }

  async fetchImage(id: string): Promise<Blob> {
    const response = await this.fetchFn(this.imageUrl(id));
    if (!response.ok) await raise(response);
    return response.blob();
  }

  async submitFeedback(id: string, rating: number, comment = ""): Promise<void> {
    const response = await this.fetchFn(
      `${this.baseUrl}/api/artworks/${id}/feedback`,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ rating, comment }),
      },
    );
    if (response.status !== 204) await raise(response);
  }

  async listStyles(): Promise<StyleInfo[]> {
    const response = await this.fetchFn(`${this.baseUrl}/api/styles`);
    if (!response.ok) await raise(response);
    const body = (await response.json()) as { styles: StyleInfo[] };
    return body.styles;
  }
}
