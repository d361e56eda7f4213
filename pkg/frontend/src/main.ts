/**
 * Browser wiring for the prompt studio: panorama canvas with click prompts,
 * overlay tinting, trajectory inspector, and frame thumbnails.
 */

import { PanoscanClient } from './api.js';
import { erpToCanvas } from './coords.js';
import { maskToTintRgba } from './overlay.js';
import { UiSession, type UiSessionState } from './session.js';
import { buildTrajectoryView } from './trajectory.js';

const client = new PanoscanClient('');
let session: UiSession | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function blobToImage(blob: Blob): Promise<HTMLImageElement> {
  const url = URL.createObjectURL(blob);
  try {
    const img = new Image();
    await new Promise<void>((resolve, reject) => {
      img.onload = () => resolve();
      img.onerror = () => reject(new Error('image decode failed'));
      img.src = url;
    });
    return img;
  } finally {
    URL.revokeObjectURL(url);
  }
}

function base64ToBlob(b64: string): Blob {
  const bytes = Uint8Array.from(atob(b64), (c) => c.charCodeAt(0));
  return new Blob([bytes], { type: 'image/png' });
}

async function render(state: UiSessionState, panoImage: HTMLImageElement): Promise<void> {
  const canvas = el<HTMLCanvasElement>('pano-canvas');
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  canvas.width = panoImage.width;
  canvas.height = panoImage.height;
  ctx.drawImage(panoImage, 0, 0);

  if (state.overlayPngB64) {
    const overlayImg = await blobToImage(base64ToBlob(state.overlayPngB64));
    const scratch = document.createElement('canvas');
    scratch.width = overlayImg.width;
    scratch.height = overlayImg.height;
    const sctx = scratch.getContext('2d')!;
    sctx.drawImage(overlayImg, 0, 0);
    const gray = sctx.getImageData(0, 0, scratch.width, scratch.height);
    const single = new Uint8Array(scratch.width * scratch.height);
    for (let i = 0; i < single.length; i++) single[i] = gray.data[i * 4]!;
    const tinted = new ImageData(maskToTintRgba(single), scratch.width, scratch.height);
    sctx.putImageData(tinted, 0, 0);
    ctx.drawImage(scratch, 0, 0, canvas.width, canvas.height);
  }

  const geom = session!.previewGeometry;
  for (const p of state.prompts) {
    const pos = erpToCanvas(geom, p.u, p.v);
    ctx.beginPath();
    ctx.arc(pos.x, pos.y, 6, 0, 2 * Math.PI);
    ctx.fillStyle = p.label === 'positive' ? '#2ecc71' : '#e74c3c';
    ctx.fill();
    ctx.strokeStyle = '#ffffff';
    ctx.stroke();
  }

  drawTrajectory(state);
  renderSidebar(state);
}

function drawTrajectory(state: UiSessionState): void {
  const canvas = el<HTMLCanvasElement>('trajectory-canvas');
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  const geom = session!.previewGeometry;
  canvas.width = Math.round(state.width / geom.scale);
  canvas.height = Math.round(state.height / geom.scale);
  const view = buildTrajectoryView(state.trajectory, geom);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = '#888';
  for (const [a, b] of view.pathSegments) {
    const na = view.nodes[a]!;
    const nb = view.nodes[b]!;
    if (Math.abs(na.x - nb.x) > canvas.width / 2) continue; // seam wrap segment
    ctx.beginPath();
    ctx.moveTo(na.x, na.y);
    ctx.lineTo(nb.x, nb.y);
    ctx.stroke();
  }
  const visible = new Set(state.framePrompts.map((fp) => fp.frame_index));
  for (const node of view.nodes) {
    ctx.beginPath();
    ctx.arc(node.x, node.y, 5, 0, 2 * Math.PI);
    ctx.fillStyle = visible.has(node.frameIndex) ? '#f39c12' : '#3498db';
    ctx.fill();
  }
  el<HTMLSpanElement>('loop-indicator').textContent = view.closedLoop
    ? `closed loop, ${view.columns} columns`
    : `open path, ${view.columns} columns`;
}

function renderSidebar(state: UiSessionState): void {
  el<HTMLSpanElement>('round-indicator').textContent = `round ${state.round}`;
  const list = el<HTMLUListElement>('prompt-list');
  list.innerHTML = '';
  for (const [i, p] of state.prompts.entries()) {
    const item = document.createElement('li');
    item.textContent = `#${i + 1} ${p.label} @ (${p.u.toFixed(1)}, ${p.v.toFixed(1)})`;
    list.appendChild(item);
  }
  const frames = el<HTMLDivElement>('frame-panel');
  frames.innerHTML = '';
  for (const fp of state.framePrompts) {
    const img = document.createElement('img');
    img.src = client.thumbnailUrl(state.sessionId, fp.frame_index);
    img.title = `frame ${fp.frame_index} @ (${fp.u_hat.toFixed(1)}, ${fp.v_hat.toFixed(1)})`;
    img.width = 96;
    frames.appendChild(img);
  }
  const err = el<HTMLDivElement>('error-box');
  err.textContent = state.lastError ?? '';
  el<HTMLSpanElement>('busy-indicator').textContent = state.busy
    ? `segmenting (${session!.pendingClicks} queued)`
    : 'idle';
}

async function start(): Promise<void> {
  const panoInput = el<HTMLInputElement>('pano-file');
  const labelInput = el<HTMLInputElement>('label-file');
  el<HTMLButtonElement>('open-session').addEventListener('click', async () => {
    const pano = panoInput.files?.[0];
    if (!pano) return;
    const labels = labelInput.files?.[0] ?? undefined;
    session = await UiSession.open(client, pano, labels);
    const image = await blobToImage(pano);
    session.subscribe((state) => void render(state, image));
    await session.rehydrate();

    const canvas = el<HTMLCanvasElement>('pano-canvas');
    canvas.addEventListener('click', (ev) => {
      if (!session) return;
      const rect = canvas.getBoundingClientRect();
      const x = ((ev.clientX - rect.left) / rect.width) * canvas.width;
      const y = ((ev.clientY - rect.top) / rect.height) * canvas.height;
      const negative = el<HTMLInputElement>('negative-toggle').checked;
      void session.placePrompt(x, y, negative ? 'negative' : 'positive');
    });
  });
}

if (typeof document !== 'undefined') {
  void start();
}
