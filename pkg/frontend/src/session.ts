/**
 * UI session store: the single source of truth the panels render from.
 *
 * Prompts mirror server state (the server echoes the accumulated list each
 * round). Clicks fired while a segmentation request is in flight are queued
 * and submitted in order — never dropped. Rehydration rebuilds the store
 * from the server, so a page refresh reproduces the same overlay.
 */

import {
  PanoscanClient,
  type FramePromptDto,
  type PromptLabel,
  type PromptPointDto,
  type PromptResponseDto,
  type SessionCreatedDto,
  type TrajectoryDto,
} from './api.js';
import { canvasToErp, type PreviewGeometry } from './coords.js';

export interface UiSessionState {
  sessionId: string;
  width: number;
  height: number;
  previewScale: number;
  trajectory: TrajectoryDto;
  prompts: PromptPointDto[];
  framePrompts: FramePromptDto[];
  round: number;
  startIndex: number | null;
  overlayPngB64: string | null;
  overlayScale: number;
  busy: boolean;
  lastError: string | null;
}

type Listener = (state: UiSessionState) => void;

export class UiSession {
  private state: UiSessionState;
  private queue: PromptPointDto[] = [];
  private inFlight = false;
  private listeners: Listener[] = [];

  constructor(
    private readonly client: PanoscanClient,
    created: SessionCreatedDto,
  ) {
    this.state = {
      sessionId: created.session_id,
      width: created.width,
      height: created.height,
      previewScale: created.preview_scale,
      trajectory: created.trajectory,
      prompts: [],
      framePrompts: [],
      round: 0,
      startIndex: null,
      overlayPngB64: null,
      overlayScale: 1,
      busy: false,
      lastError: null,
    };
  }

  static async open(client: PanoscanClient, panorama: Blob, labels?: Blob): Promise<UiSession> {
    const created = await client.createSession(panorama, labels);
    return new UiSession(client, created);
  }

  get snapshot(): UiSessionState {
    return { ...this.state, prompts: [...this.state.prompts] };
  }

  get previewGeometry(): PreviewGeometry {
    return { width: this.state.width, height: this.state.height, scale: this.state.previewScale };
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    const snap = this.snapshot;
    for (const listener of this.listeners) listener(snap);
  }

  private patch(partial: Partial<UiSessionState>): void {
    this.state = { ...this.state, ...partial };
    this.emit();
  }

  /** Queue a canvas click; ERP conversion happens here, requests run in order. */
  placePrompt(canvasX: number, canvasY: number, label: PromptLabel): Promise<void> {
    const { u, v } = canvasToErp(this.previewGeometry, canvasX, canvasY);
    return this.placeErpPrompt({ u, v, label });
  }

  /** Queue a prompt already in full-resolution ERP coordinates. */
  placeErpPrompt(point: PromptPointDto): Promise<void> {
    this.queue.push(point);
    return this.drain();
  }

  get pendingClicks(): number {
    return this.queue.length + (this.inFlight ? 1 : 0);
  }

  private async drain(): Promise<void> {
    if (this.inFlight) return;
    this.inFlight = true;
    this.patch({ busy: true });
    try {
      while (this.queue.length > 0) {
        const point = this.queue.shift()!;
        try {
          const resp = await this.client.postPrompt(this.state.sessionId, point);
          this.applyRound(resp);
        } catch (err) {
          // Surface the failure but keep prompt history and queued clicks.
          this.patch({ lastError: err instanceof Error ? err.message : String(err) });
        }
      }
    } finally {
      this.inFlight = false;
      this.patch({ busy: false });
    }
  }

  private applyRound(resp: PromptResponseDto): void {
    this.patch({
      prompts: resp.prompts,
      framePrompts: resp.frame_prompts,
      round: resp.round,
      startIndex: resp.start_index,
      overlayPngB64: resp.overlay_png_b64,
      overlayScale: resp.overlay_scale,
      lastError: null,
    });
  }

  /** Rebuild prompt history from the server (page refresh path). */
  async rehydrate(): Promise<void> {
    const remote = await this.client.sessionState(this.state.sessionId);
    this.patch({
      prompts: remote.prompts,
      round: remote.rounds,
      startIndex: remote.start_index,
    });
  }

  async fullMask(): Promise<ArrayBuffer> {
    return this.client.fetchMaskPng(this.state.sessionId);
  }

  async close(): Promise<void> {
    await this.client.deleteSession(this.state.sessionId);
  }
}
