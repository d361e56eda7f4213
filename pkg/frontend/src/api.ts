/**
 * Typed client for the panoscan serve HTTP API.
 *
 * Uses the global fetch, so it runs unchanged in the browser and under
 * node-based tests against a live server.
 */

export type PromptLabel = 'positive' | 'negative';

export interface PromptPointDto {
  u: number;
  v: number;
  label: PromptLabel;
}

export interface FramePromptDto {
  frame_index: number;
  u_hat: number;
  v_hat: number;
  label: PromptLabel;
}

export interface TrajectoryFrameDto {
  frame_index: number;
  yaw_deg: number;
  pitch_deg: number;
  column: number;
  row: number;
}

export interface TrajectoryDto {
  n_yaw: number;
  n_pitch: number;
  n_frames: number;
  closed_loop: boolean;
  frames: TrajectoryFrameDto[];
}

export interface SessionCreatedDto {
  session_id: string;
  width: number;
  height: number;
  preview_scale: number;
  trajectory: TrajectoryDto;
}

export interface SessionStateDto {
  session_id: string;
  width: number;
  height: number;
  rounds: number;
  prompts: PromptPointDto[];
  start_index: number | null;
}

export interface PromptResponseDto {
  session_id: string;
  round: number;
  start_index: number;
  prompts: PromptPointDto[];
  frame_prompts: FramePromptDto[];
  overlay_scale: number;
  overlay_png_b64: string;
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = (await resp.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(detail, resp.status);
  }
  return (await resp.json()) as T;
}

/**
 * GET with one retry on network-level failures. Safe only for idempotent
 * requests; a pooled keep-alive connection the server already closed
 * surfaces as a socket error on first reuse.
 */
async function getWithRetry(url: string): Promise<Response> {
  try {
    return await fetch(url);
  } catch {
    return fetch(url);
  }
}

export class PanoscanClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, '')}${path}`;
  }

  async createSession(panoramaPng: Blob, labelsPng?: Blob): Promise<SessionCreatedDto> {
    const form = new FormData();
    form.append('panorama', panoramaPng, 'panorama.png');
    if (labelsPng) form.append('labels', labelsPng, 'labels.png');
    const resp = await fetch(this.url('/api/session'), { method: 'POST', body: form });
    return asJson<SessionCreatedDto>(resp);
  }

  async sessionState(sessionId: string): Promise<SessionStateDto> {
    return asJson<SessionStateDto>(await getWithRetry(this.url(`/api/session/${sessionId}`)));
  }

  async trajectory(sessionId: string): Promise<TrajectoryDto> {
    return asJson<TrajectoryDto>(
      await getWithRetry(this.url(`/api/session/${sessionId}/trajectory`)),
    );
  }

  async postPrompt(sessionId: string, point: PromptPointDto): Promise<PromptResponseDto> {
    const resp = await fetch(this.url(`/api/session/${sessionId}/prompts`), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(point),
    });
    return asJson<PromptResponseDto>(resp);
  }

  async fetchMaskPng(sessionId: string): Promise<ArrayBuffer> {
    const resp = await getWithRetry(this.url(`/api/session/${sessionId}/mask.png`));
    if (!resp.ok) throw new ApiError(`mask fetch failed`, resp.status);
    return resp.arrayBuffer();
  }

  thumbnailUrl(sessionId: string, frameIndex: number): string {
    return this.url(`/api/session/${sessionId}/frames/${frameIndex}/thumbnail.png`);
  }

  async deleteSession(sessionId: string): Promise<void> {
    await fetch(this.url(`/api/session/${sessionId}`), { method: 'DELETE' });
  }
}
