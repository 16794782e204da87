// Editing model for the working graph. Every committed edit round-trips
// through PUT target: the local mirror applies the edit optimistically, the
// server ack re-renders graph and footer metrics, and a rejection reverts
// the mirror and surfaces the violation. Commits are serialized: one PUT in
// flight, later edits queue behind it.

import { SessionApi, EvaluationPayload, TargetAck, ApiError } from "./api.js";
import {
  EdgeKind,
  GraphDoc,
  addEdge,
  addNode,
  cloneGraph,
  freshNodeId,
  removeEdge,
  removeNode,
  retypeNode,
} from "./model.js";
import { Point, autoArrange } from "./layout.js";

export const UNDO_LIMIT = 50;

export type Edit =
  | { kind: "add_node"; trope: string; id?: string }
  | { kind: "remove_node"; id: string }
  | { kind: "retype_node"; id: string; trope: string }
  | { kind: "add_edge"; src: string; dst: string; edge: EdgeKind }
  | { kind: "remove_edge"; src: string; dst: string; edge: EdgeKind };

function applyEdit(graph: GraphDoc, edit: Edit): GraphDoc {
  switch (edit.kind) {
    case "add_node":
      return addNode(graph, edit.id ?? freshNodeId(graph, edit.trope), edit.trope);
    case "remove_node":
      return removeNode(graph, edit.id);
    case "retype_node":
      return retypeNode(graph, edit.id, edit.trope);
    case "add_edge":
      return addEdge(graph, edit.src, edit.dst, edit.edge);
    case "remove_edge":
      return removeEdge(graph, edit.src, edit.dst, edit.edge);
  }
}

export interface EditorListener {
  onGraph?(graph: GraphDoc): void;
  onMetrics?(evaluation: EvaluationPayload): void;
  onRejected?(detail: string, violations: string[]): void;
}

export class EditorState {
  private graphDoc: GraphDoc;
  private metricsDoc: EvaluationPayload | null = null;
  private undoStack: GraphDoc[] = [];
  private positionMap: Map<string, Point>;
  // last document the server acknowledged; rejections rewind to this, not to
  // the pre-edit mirror, so queued edits that all fail still converge
  private lastAcked: GraphDoc;
  selection: string | null = null;

  private queue: Promise<void> = Promise.resolve();

  constructor(
    private readonly api: SessionApi,
    private readonly sessionId: string,
    initial: TargetAck,
    private readonly listener: EditorListener = {},
  ) {
    this.graphDoc = cloneGraph(initial.target);
    this.metricsDoc = initial.evaluation;
    this.lastAcked = cloneGraph(initial.target);
    this.positionMap = autoArrange(this.graphDoc);
  }

  get graph(): GraphDoc {
    return this.graphDoc;
  }

  get metrics(): EvaluationPayload | null {
    return this.metricsDoc;
  }

  get positions(): Map<string, Point> {
    return this.positionMap;
  }

  get undoDepth(): number {
    return this.undoStack.length;
  }

  rearrange(): void {
    this.positionMap = autoArrange(this.graphDoc);
  }

  moveNode(id: string, point: Point): void {
    this.positionMap.set(id, point);
  }

  // Apply locally, then queue the committed document for the server. The
  // returned promise settles when THIS edit's round-trip finishes.
  edit(edit: Edit): Promise<void> {
    const before = this.graphDoc;
    const after = applyEdit(before, edit); // throws EditError on bad edits
    this.pushUndo(before);
    this.setGraph(after);
    return this.commit(after);
  }

  // Undo is client-local; the reverted document still round-trips so the
  // server stays the source of truth.
  undo(): Promise<void> | null {
    const previous = this.undoStack.pop();
    if (!previous) return null;
    this.setGraph(previous);
    return this.commit(previous);
  }

  // Replace the working graph wholesale (adoption, target reload).
  reload(ack: TargetAck): void {
    this.undoStack = [];
    this.lastAcked = cloneGraph(ack.target);
    this.setGraph(cloneGraph(ack.target));
    this.metricsDoc = ack.evaluation;
    this.listener.onMetrics?.(ack.evaluation);
    this.rearrange();
  }

  private pushUndo(graph: GraphDoc): void {
    this.undoStack.push(graph);
    if (this.undoStack.length > UNDO_LIMIT) this.undoStack.shift();
  }

  private setGraph(graph: GraphDoc): void {
    this.graphDoc = graph;
    for (const node of graph.nodes) {
      if (!this.positionMap.has(node.id)) {
        this.positionMap = autoArrange(graph);
        break;
      }
    }
    this.listener.onGraph?.(graph);
  }

  private commit(document: GraphDoc): Promise<void> {
    const run = this.queue.then(async () => {
      try {
        const ack = await this.api.putTarget(this.sessionId, document);
        this.lastAcked = cloneGraph(ack.target);
        // later edits may already be applied locally; only re-render from
        // the ack when this commit is still the newest state
        if (this.graphDoc === document) {
          this.graphDoc = cloneGraph(ack.target);
          this.listener.onGraph?.(this.graphDoc);
        }
        this.metricsDoc = ack.evaluation;
        this.listener.onMetrics?.(ack.evaluation);
      } catch (error) {
        if (error instanceof ApiError) {
          if (this.graphDoc === document) this.setGraph(cloneGraph(this.lastAcked));
          this.listener.onRejected?.(error.message, []);
          return;
        }
        throw error;
      }
    });
    // keep the chain alive after failures so later commits still run
    this.queue = run.catch(() => undefined);
    return run;
  }
}
