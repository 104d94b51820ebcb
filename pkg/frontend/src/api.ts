// Typed client for the /v1 service API. The console has no other data access.

export interface ClipInfo {
  clip_id: string;
  n_frames: number;
  fps: number;
  frame_url_template: string;
}

export interface SessionInfo {
  session_id: string;
  clip_id: string;
  predicted_foul: string;
  predicted_severity: string;
}

export interface StudyItemView {
  item_index: number;
  clip_url: string;
  explanation: string;
}

export interface HistoryEntry {
  role: string;
  text: string;
}

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function readDetail(resp: Response): Promise<string> {
  try {
    const body = await resp.json();
    return typeof body?.detail === "string" ? body.detail : JSON.stringify(body);
  } catch {
    return resp.statusText;
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    if (!resp.ok) {
      throw new ApiError(resp.status, await readDetail(resp));
    }
    return (await resp.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  listClips(): Promise<{ clips: string[] }> {
    return this.request("/v1/clips");
  }

  clipInfo(clipId: string): Promise<ClipInfo> {
    return this.request(`/v1/clips/${encodeURIComponent(clipId)}`);
  }

  frameUrl(clipId: string, index: number): string {
    return `${this.baseUrl}/v1/clips/${encodeURIComponent(clipId)}/frames/${index}`;
  }

  createSession(clipId: string): Promise<SessionInfo> {
    return this.post("/v1/sessions", { clip_id: clipId });
  }

  chat(sessionId: string, message: string): Promise<{ answer: string }> {
    return this.post("/v1/chat", { session_id: sessionId, message });
  }

  sessionHistory(sessionId: string): Promise<{ history: HistoryEntry[] }> {
    return this.request(`/v1/sessions/${encodeURIComponent(sessionId)}`);
  }

  /** Next unrated study item, or null when the session is complete (204). */
  async studyNext(raterId: string): Promise<StudyItemView | null> {
    const resp = await this.fetchFn(`${this.baseUrl}/v1/study/${encodeURIComponent(raterId)}/next`);
    if (resp.status === 204) {
      return null;
    }
    if (!resp.ok) {
      throw new ApiError(resp.status, await readDetail(resp));
    }
    return (await resp.json()) as StudyItemView;
  }

  submitRating(raterId: string, itemIndex: number, score: number): Promise<{ recorded: boolean }> {
    return this.post(`/v1/study/${encodeURIComponent(raterId)}/rating`, {
      item_index: itemIndex,
      score,
    });
  }
}
