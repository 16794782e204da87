// Layered auto-arrange: hero characters in the left column, structure nodes
// in the middle, villains and plot devices on the right. Rows flow top-down
// within each column in node order.

import { GraphDoc, tropeClass } from "./model.js";

export interface Point {
  x: number;
  y: number;
}

const COLUMN_X: Record<string, number> = {
  hero: 80,
  structure: 280,
  villain: 480,
  device: 480,
};

const ROW_HEIGHT = 90;
const TOP_MARGIN = 60;

export function autoArrange(graph: GraphDoc): Map<string, Point> {
  const positions = new Map<string, Point>();
  const rows: Record<number, number> = {};
  for (const node of graph.nodes) {
    const cls = tropeClass(node.trope);
    // villains stack above devices in the shared right column
    const x = COLUMN_X[cls]! + (cls === "device" ? 120 : 0);
    const row = rows[x] ?? 0;
    rows[x] = row + 1;
    positions.set(node.id, { x, y: TOP_MARGIN + row * ROW_HEIGHT });
  }
  return positions;
}
