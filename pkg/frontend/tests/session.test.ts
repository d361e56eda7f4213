import { describe, expect, it, vi } from 'vitest';

import type { PanoscanClient, PromptPointDto, PromptResponseDto } from '../src/api.js';
import { UiSession } from '../src/session.js';

function makeCreated() {
  return {
    session_id: 's1',
    width: 2048,
    height: 1024,
    preview_scale: 1,
    trajectory: { n_yaw: 8, n_pitch: 3, n_frames: 24, closed_loop: true, frames: [] },
  };
}

interface MockClient {
  client: PanoscanClient;
  posted: PromptPointDto[];
  resolveNext: () => void;
}

/** Client whose postPrompt resolves only when the test releases it. */
function makeGatedClient(): MockClient {
  const posted: PromptPointDto[] = [];
  const gates: Array<() => void> = [];
  let round = 0;
  const client = {
    async postPrompt(_sid: string, point: PromptPointDto): Promise<PromptResponseDto> {
      posted.push(point);
      await new Promise<void>((resolve) => gates.push(resolve));
      round += 1;
      return {
        session_id: 's1',
        round,
        start_index: 0,
        prompts: [...posted],
        frame_prompts: [],
        overlay_scale: 1,
        overlay_png_b64: `round-${round}`,
      };
    },
    async sessionState(sid: string) {
      return {
        session_id: sid,
        width: 2048,
        height: 1024,
        rounds: round,
        prompts: [...posted],
        start_index: round > 0 ? 0 : null,
      };
    },
  } as unknown as PanoscanClient;
  return { client, posted, resolveNext: () => gates.shift()?.() };
}

async function settle(): Promise<void> {
  await new Promise((resolve) => setTimeout(resolve, 0));
}

describe('UiSession click queue', () => {
  it('queues clicks during an in-flight request and drops none', async () => {
    const { client, posted, resolveNext } = makeGatedClient();
    const session = new UiSession(client, makeCreated());

    void session.placePrompt(100, 100, 'positive');
    await settle();
    void session.placePrompt(200, 200, 'negative');
    void session.placePrompt(300, 300, 'positive');
    await settle();

    expect(posted).toHaveLength(1); // one in flight, two queued
    expect(session.pendingClicks).toBe(3);

    resolveNext();
    await settle();
    resolveNext();
    await settle();
    resolveNext();
    await settle();

    expect(posted).toHaveLength(3);
    expect(posted.map((p) => p.label)).toEqual(['positive', 'negative', 'positive']);
    expect(session.snapshot.round).toBe(3);
    expect(session.snapshot.busy).toBe(false);
  });

  it('converts canvas clicks to full-resolution ERP pixels', async () => {
    const { client, posted, resolveNext } = makeGatedClient();
    const session = new UiSession(client, makeCreated());
    void session.placePrompt(123.5, 77.25, 'positive');
    await settle();
    resolveNext();
    await settle();
    // Scale 1: edge-based canvas to center-based ERP is a -0.5 shift.
    expect(posted[0]!.u).toBeCloseTo(123.0, 10);
    expect(posted[0]!.v).toBeCloseTo(76.75, 10);
  });

  it('mirrors server prompt state after each round', async () => {
    const { client, resolveNext } = makeGatedClient();
    const session = new UiSession(client, makeCreated());
    void session.placeErpPrompt({ u: 10, v: 10, label: 'positive' });
    await settle();
    resolveNext();
    await settle();
    expect(session.snapshot.prompts).toHaveLength(1);
    expect(session.snapshot.overlayPngB64).toBe('round-1');
  });

  it('keeps history when a request fails and surfaces the error', async () => {
    const posted: PromptPointDto[] = [];
    let calls = 0;
    const client = {
      async postPrompt(_sid: string, point: PromptPointDto): Promise<PromptResponseDto> {
        calls += 1;
        posted.push(point);
        if (calls === 2) throw new Error('backend exploded');
        return {
          session_id: 's1',
          round: calls,
          start_index: 0,
          prompts: [...posted],
          frame_prompts: [],
          overlay_scale: 1,
          overlay_png_b64: 'x',
        };
      },
    } as unknown as PanoscanClient;
    const session = new UiSession(client, makeCreated());
    await session.placeErpPrompt({ u: 1, v: 1, label: 'positive' });
    await session.placeErpPrompt({ u: 2, v: 2, label: 'negative' });
    expect(session.snapshot.lastError).toContain('backend exploded');
    expect(session.snapshot.prompts).toHaveLength(1); // failed round not applied
    await session.placeErpPrompt({ u: 3, v: 3, label: 'positive' });
    expect(session.snapshot.lastError).toBeNull();
    expect(calls).toBe(3);
  });

  it('rehydrates prompt history from the server', async () => {
    const { client, resolveNext } = makeGatedClient();
    const session = new UiSession(client, makeCreated());
    void session.placeErpPrompt({ u: 5, v: 6, label: 'positive' });
    await settle();
    resolveNext();
    await settle();

    const fresh = new UiSession(client, makeCreated());
    await fresh.rehydrate();
    expect(fresh.snapshot.prompts).toHaveLength(1);
    expect(fresh.snapshot.round).toBe(1);
  });

  it('notifies subscribers on every state change', async () => {
    const { client, resolveNext } = makeGatedClient();
    const session = new UiSession(client, makeCreated());
    const seen = vi.fn();
    session.subscribe(seen);
    void session.placeErpPrompt({ u: 1, v: 2, label: 'positive' });
    await settle();
    resolveNext();
    await settle();
    expect(seen).toHaveBeenCalled();
    const last = seen.mock.calls.at(-1)![0];
    expect(last.round).toBe(1);
  });
});
