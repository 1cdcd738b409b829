import type {
  CreateSessionRequest,
  NextResponse,
  RatingAck,
  SessionCreated,
} from "./types.js";

/** Error envelope returned by the service: {code, message}. */
export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface RatingApi {
  createSession(req: CreateSessionRequest): Promise<SessionCreated>;
  nextItem(sessionId: string): Promise<NextResponse>;
  submitRating(
    sessionId: string,
    frameId: string,
    audioId: string,
    mos: number,
  ): Promise<RatingAck>;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class HttpRatingApi implements RatingApi {
  constructor(
    private readonly baseUrl = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      let code = `HTTP_${response.status}`;
      let message = response.statusText;
      try {
        const body = await response.json();
        if (body && typeof body.code === "string") {
          code = body.code;
          message = body.message ?? message;
        } else if (body && body.detail) {
          message = JSON.stringify(body.detail);
        }
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(code, message, response.status);
    }
    return (await response.json()) as T;
  }

  createSession(req: CreateSessionRequest): Promise<SessionCreated> {
    return this.request<SessionCreated>("/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
  }

  nextItem(sessionId: string): Promise<NextResponse> {
    return this.request<NextResponse>(`/sessions/${encodeURIComponent(sessionId)}/next`);
  }

  submitRating(
    sessionId: string,
    frameId: string,
    audioId: string,
    mos: number,
  ): Promise<RatingAck> {
    return this.request<RatingAck>(`/sessions/${encodeURIComponent(sessionId)}/ratings`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ frame_id: frameId, audio_id: audioId, mos }),
    });
  }
}
