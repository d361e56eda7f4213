/**
 * Layout model for the trajectory inspector: viewpoint nodes positioned on
 * the panorama preview, connected in zigzag visitation order.
 */

import type { TrajectoryDto } from './api.js';
import { anglesToErp, erpToCanvas, type PreviewGeometry } from './coords.js';

export interface TrajectoryNode {
  frameIndex: number;
  column: number;
  row: number;
  x: number; // preview-canvas position
  y: number;
  yawDeg: number;
  pitchDeg: number;
}

export interface TrajectoryView {
  nodes: TrajectoryNode[];
  /** Polyline segments in visitation order; a segment is [from, to] node indices. */
  pathSegments: Array<[number, number]>;
  columns: number;
  rows: number;
  closedLoop: boolean;
}

export function buildTrajectoryView(doc: TrajectoryDto, geom: PreviewGeometry): TrajectoryView {
  const nodes: TrajectoryNode[] = doc.frames.map((f) => {
    const erp = anglesToErp(geom.width, geom.height, f.yaw_deg, f.pitch_deg);
    const pos = erpToCanvas(geom, erp.u, erp.v);
    return {
      frameIndex: f.frame_index,
      column: f.column,
      row: f.row,
      x: pos.x,
      y: pos.y,
      yawDeg: f.yaw_deg,
      pitchDeg: f.pitch_deg,
    };
  });
  const pathSegments: Array<[number, number]> = [];
  for (let i = 1; i < nodes.length; i++) {
    pathSegments.push([i - 1, i]);
  }
  if (doc.closed_loop && nodes.length > 1) {
    pathSegments.push([nodes.length - 1, 0]);
  }
  return {
    nodes,
    pathSegments,
    columns: doc.n_yaw,
    rows: doc.n_pitch,
    closedLoop: doc.closed_loop,
  };
}

/** Rows visited inside each column, in visitation order (for direction arrows). */
export function columnSweepDirections(view: TrajectoryView): Array<'down' | 'up'> {
  const byColumn = new Map<number, TrajectoryNode[]>();
  for (const node of view.nodes) {
    const list = byColumn.get(node.column) ?? [];
    list.push(node);
    byColumn.set(node.column, list);
  }
  const directions: Array<'down' | 'up'> = [];
  for (let c = 1; c <= view.columns; c++) {
    const list = byColumn.get(c) ?? [];
    if (list.length < 2) {
      directions.push('down');
      continue;
    }
    const first = list[0]!;
    const last = list[list.length - 1]!;
    directions.push(last.row > first.row ? 'down' : 'up');
  }
  return directions;
}
