// Grid-view state: the latest elite snapshot, the hovered and selected
// cells, and elite previews. Hovering an occupied cell shows its elite above
// the selected one so two graphs are visible at once; adoption reloads the
// editor from the new target.

import { ElitePayload, GridSnapshot, SessionApi, TargetAck, ApiError } from "./api.js";
import { fitnessColor } from "./colors.js";

export interface CellView {
  i: number;
  j: number;
  fitness: number | null;
  digest: string | null;
  color: string;
}

export class GridViewState {
  snapshot: GridSnapshot | null = null;
  hovered: [number, number] | null = null;
  selected: [number, number] | null = null;
  preview: ElitePayload | null = null;
  inspected: ElitePayload | null = null;

  constructor(
    private readonly api: SessionApi,
    private readonly sessionId: string,
    public dims: [string, string],
    public granularity: number = 5,
  ) {}

  applySnapshot(snapshot: GridSnapshot): void {
    this.snapshot = snapshot;
    this.dims = snapshot.dims;
  }

  cells(): CellView[] {
    const byKey = new Map<string, { fitness: number; digest: string }>();
    if (this.snapshot) {
      for (const cell of this.snapshot.grid) {
        byKey.set(`${cell.cell[0]},${cell.cell[1]}`, cell);
      }
    }
    const views: CellView[] = [];
    for (let j = this.granularity - 1; j >= 0; j -= 1) {
      for (let i = 0; i < this.granularity; i += 1) {
        const hit = byKey.get(`${i},${j}`);
        views.push({
          i,
          j,
          fitness: hit ? hit.fitness : null,
          digest: hit ? hit.digest : null,
          color: fitnessColor(hit ? hit.fitness : null),
        });
      }
    }
    return views;
  }

  occupied(i: number, j: number): boolean {
    return !!this.snapshot?.grid.some((c) => c.cell[0] === i && c.cell[1] === j);
  }

  // Hover preview; empty cells are a no-op and clear the preview.
  async hover(i: number, j: number): Promise<ElitePayload | null> {
    this.hovered = [i, j];
    if (!this.occupied(i, j)) {
      this.preview = null;
      return null;
    }
    try {
      this.preview = await this.api.getElite(this.sessionId, i, j);
      return this.preview;
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        this.preview = null;
        return null;
      }
      throw error;
    }
  }

  clearHover(): void {
    this.hovered = null;
    this.preview = null;
  }

  async select(i: number, j: number): Promise<ElitePayload | null> {
    if (!this.occupied(i, j)) return null; // empty cell click is a no-op
    this.selected = [i, j];
    this.inspected = await this.api.getElite(this.sessionId, i, j);
    return this.inspected;
  }

  // POST adopt for the selected cell; the caller reloads the editor from the
  // returned target ack.
  async adoptSelected(): Promise<TargetAck> {
    if (!this.selected) throw new Error("no cell selected");
    const [i, j] = this.selected;
    return this.api.adoptElite(this.sessionId, i, j);
  }
}
