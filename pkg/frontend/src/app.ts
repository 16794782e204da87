// Browser shell: wires the editor, grid view, and controls to the DOM.
// Right-click on empty canvas opens the node menu (grouped by class, plus
// re-arrange); right-click on a node opens the edge/delete menu; left-click
// on an edge deletes it. All displayed numbers come from service payloads.

import { SessionApi, GridSnapshot, ElitePayload, EvaluationPayload } from "./api.js";
import { EditorState } from "./editor.js";
import { GridViewState } from "./gridview.js";
import { EdgeKind, GraphDoc, TROPES, TROPE_CLASSES, tropeClass } from "./model.js";

const CLASS_COLORS: Record<string, string> = {
  hero: "#2563eb",
  villain: "#b91c1c",
  structure: "#6b7280",
  device: "#a16207",
};

const DIMENSIONS = [
  "step",
  "interestingness",
  "diversity",
  "conflicts",
  "plot_points",
  "plot_twists",
  "plot_devices",
];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text !== undefined) node.textContent = text;
  return node;
}

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
): SVGElementTagNameMap[K] {
  const node = document.createElementNS("http://www.w3.org/2000/svg", tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  return node;
}

class Menu {
  private root: HTMLDivElement | null = null;

  open(x: number, y: number, entries: Array<[string, (() => void) | null]>): void {
    this.close();
    const root = el("div", { class: "menu" });
    root.style.left = `${x}px`;
    root.style.top = `${y}px`;
    for (const [label, action] of entries) {
      if (action === null) {
        root.append(el("div", { class: "menu-head" }, label));
        continue;
      }
      const item = el("div", { class: "menu-item" }, label);
      item.addEventListener("click", () => {
        this.close();
        action();
      });
      root.append(item);
    }
    document.body.append(root);
    this.root = root;
  }

  close(): void {
    this.root?.remove();
    this.root = null;
  }
}

export class App {
  private api: SessionApi;
  private sessionId = "";
  private editor!: EditorState;
  private grid!: GridViewState;
  private menu = new Menu();
  private edgeSource: string | null = null;
  private pendingKind: EdgeKind = "PLAIN";
  private paused = false;
  private streamAbort: AbortController | null = null;

  constructor(private readonly rootEl: HTMLElement, base: string) {
    this.api = new SessionApi(base);
  }

  async start(): Promise<void> {
    this.rootEl.innerHTML = "";
    this.rootEl.append(this.buildChrome());
    const info = await this.api.createSession({});
    this.sessionId = info.id;
    const ack = await this.api.getTarget(this.sessionId);
    this.editor = new EditorState(this.api, this.sessionId, ack, {
      onGraph: () => this.renderGraph(),
      onMetrics: (m) => this.renderFooter(m),
      onRejected: (detail) => this.flashWarning(detail),
    });
    this.grid = new GridViewState(this.api, this.sessionId, ["step", "interestingness"], info.granularity);
    this.renderGraph();
    this.renderFooter(ack.evaluation);
    this.setHeader(info.generation, info.status === "paused");
    this.watchStream();
    const snapshot = await this.api.getGrid(this.sessionId);
    this.onSnapshot(snapshot);
  }

  private buildChrome(): HTMLElement {
    const wrap = el("div", { class: "app" });
    wrap.append(
      el("header", { id: "header" }, "generation 0"),
      el("div", { id: "warning" }),
      el("div", { class: "panes" }),
      el("footer", { id: "footer" }),
    );
    const panes = wrap.querySelector(".panes")!;
    const editorPane = el("div", { class: "editor-pane" });
    const svg = svgEl("svg", { id: "canvas", width: "720", height: "560" });
    editorPane.append(svg);
    const sidePane = el("div", { class: "side-pane" });
    sidePane.append(
      el("div", { id: "preview" }),
      el("div", { id: "inspect" }),
      el("div", { id: "grid" }),
      this.buildControls(),
    );
    panes.append(editorPane, sidePane);
    return wrap;
  }

  private buildControls(): HTMLElement {
    const controls = el("div", { id: "controls" });

    const xPick = el("select", { id: "dim-x" });
    const yPick = el("select", { id: "dim-y" });
    for (const dim of DIMENSIONS) {
      xPick.append(el("option", { value: dim }, dim));
      yPick.append(el("option", { value: dim }, dim));
    }
    xPick.value = "step";
    yPick.value = "interestingness";
    const gran = el("input", { type: "number", min: "2", max: "10", value: "5", id: "granularity" });
    const applyDims = el("button", {}, "set dimensions");
    applyDims.addEventListener("click", () => {
      void this.switchDims(xPick.value, yPick.value, Number(gran.value));
    });

    const heroes = el("input", { type: "number", min: "0", value: "2", id: "budget-heroes" });
    const enemies = el("input", { type: "number", min: "0", value: "2", id: "budget-enemies" });
    const items = el("input", { type: "number", min: "0", value: "2", id: "budget-items" });
    const applyBudgets = el("button", {}, "set constraints");
    applyBudgets.addEventListener("click", () => {
      const values = [heroes, enemies, items].map((i) => Number(i.value));
      if (values.some((v) => !Number.isInteger(v) || v < 0)) {
        this.flashWarning("budgets must be non-negative integers");
        return;
      }
      void this.api
        .putConstraints(this.sessionId, {
          heroes: values[0]!,
          enemies: values[1]!,
          quest_items: values[2]!,
        })
        .catch((e: Error) => this.flashWarning(e.message));
    });

    const pauseBtn = el("button", { id: "pause" }, "pause");
    pauseBtn.addEventListener("click", () => {
      void (async () => {
        const info = this.paused
          ? await this.api.resume(this.sessionId)
          : await this.api.pause(this.sessionId);
        this.paused = info.status === "paused";
        pauseBtn.textContent = this.paused ? "resume" : "pause";
        this.setHeader(info.generation, this.paused);
      })();
    });

    controls.append(
      el("span", {}, "x:"), xPick,
      el("span", {}, "y:"), yPick,
      el("span", {}, "cells:"), gran,
      applyDims,
      el("span", {}, "heroes/enemies/items:"),
      heroes, enemies, items, applyBudgets,
      pauseBtn,
    );
    return controls;
  }

  private watchStream(): void {
    this.streamAbort?.abort();
    const abort = new AbortController();
    this.streamAbort = abort;
    void this.api
      .streamGrid(this.sessionId, (snapshot) => this.onSnapshot(snapshot), abort.signal)
      .catch(() => undefined);
  }

  private onSnapshot(snapshot: GridSnapshot): void {
    this.grid.applySnapshot(snapshot);
    this.setHeader(snapshot.generation, this.paused);
    this.renderGrid();
  }

  private setHeader(generation: number, paused: boolean): void {
    const header = document.getElementById("header")!;
    header.textContent = `generation ${generation}${paused ? " (paused)" : ""}`;
  }

  private flashWarning(detail: string): void {
    const warning = document.getElementById("warning")!;
    warning.textContent = detail;
    setTimeout(() => {
      if (warning.textContent === detail) warning.textContent = "";
    }, 4000);
  }

  private async switchDims(x: string, y: string, granularity: number): Promise<void> {
    if (x === y) {
      this.flashWarning("pick two different dimensions");
      return;
    }
    if (!Number.isInteger(granularity) || granularity < 2) {
      this.flashWarning("granularity must be an integer of at least 2");
      return;
    }
    try {
      await this.api.putDimensions(this.sessionId, [x, y], granularity);
      this.grid.dims = [x, y];
      this.grid.granularity = granularity;
      const snapshot = await this.api.getGrid(this.sessionId, [x, y]);
      this.onSnapshot(snapshot);
    } catch (e) {
      this.flashWarning((e as Error).message);
    }
  }

  // -- editor rendering -------------------------------------------------------

  private renderGraph(): void {
    const svg = document.getElementById("canvas") as unknown as SVGSVGElement;
    if (!svg) return;
    svg.innerHTML = "";
    const graph = this.editor.graph;
    const positions = this.editor.positions;

    svg.oncontextmenu = (event) => {
      event.preventDefault();
      const target = event.target as Element;
      if (target === svg) this.openCanvasMenu(event.clientX, event.clientY);
    };

    for (const edge of graph.edges) {
      const a = positions.get(edge.src);
      const b = positions.get(edge.dst);
      if (!a || !b) continue;
      const line = svgEl("line", {
        x1: `${a.x}`, y1: `${a.y}`, x2: `${b.x}`, y2: `${b.y}`,
        stroke: edge.kind === "ENTAIL" ? "#a16207" : "#374151",
        "stroke-width": "2",
        "stroke-dasharray": edge.kind === "ENTAIL" ? "6 3" : "",
        class: "edge",
      });
      line.addEventListener("click", () => {
        void this.editor.edit({ kind: "remove_edge", src: edge.src, dst: edge.dst, edge: edge.kind });
      });
      svg.append(line);
    }

    for (const node of graph.nodes) {
      const p = positions.get(node.id);
      if (!p) continue;
      const group = svgEl("g", { class: "node" });
      const circle = svgEl("circle", {
        cx: `${p.x}`, cy: `${p.y}`, r: "26",
        fill: CLASS_COLORS[tropeClass(node.trope)]!,
        stroke: this.editor.selection === node.id ? "#111" : "#fff",
        "stroke-width": "3",
      });
      const label = svgEl("text", {
        x: `${p.x}`, y: `${p.y + 4}`, "text-anchor": "middle",
        fill: "#fff", "font-size": "11",
      });
      label.textContent = node.trope;
      group.append(circle, label);
      group.addEventListener("contextmenu", (event) => {
        event.preventDefault();
        event.stopPropagation();
        this.openNodeMenu(node.id, event.clientX, event.clientY);
      });
      group.addEventListener("click", () => {
        if (this.edgeSource && this.edgeSource !== node.id) {
          void this.editor.edit({
            kind: "add_edge", src: this.edgeSource, dst: node.id, edge: this.pendingKind,
          });
          this.edgeSource = null;
        } else {
          this.editor.selection = node.id;
          this.renderGraph();
        }
      });
      svg.append(group);
    }
  }

  private openCanvasMenu(x: number, y: number): void {
    const entries: Array<[string, (() => void) | null]> = [];
    const byClass = new Map<string, string[]>();
    for (const trope of TROPES) {
      const cls = TROPE_CLASSES[trope]!;
      byClass.set(cls, [...(byClass.get(cls) ?? []), trope]);
    }
    for (const [cls, tropes] of byClass) {
      entries.push([cls, null]);
      for (const trope of tropes) {
        entries.push([`add ${trope}`, () => void this.editor.edit({ kind: "add_node", trope })]);
      }
    }
    entries.push(["re-arrange", () => { this.editor.rearrange(); this.renderGraph(); }]);
    this.menu.open(x, y, entries);
  }

  private openNodeMenu(id: string, x: number, y: number): void {
    const entries: Array<[string, (() => void) | null]> = [
      ["new connection (PLAIN)", () => { this.edgeSource = id; this.pendingKind = "PLAIN"; }],
      ["new connection (ENTAIL)", () => { this.edgeSource = id; this.pendingKind = "ENTAIL"; }],
      ["delete node", () => void this.editor.edit({ kind: "remove_node", id })],
      ["change trope", null],
    ];
    for (const trope of TROPES) {
      entries.push([`to ${trope}`, () => void this.editor.edit({ kind: "retype_node", id, trope })]);
    }
    this.menu.open(x, y, entries);
  }

  // -- grid rendering -----------------------------------------------------------

  private renderGrid(): void {
    const host = document.getElementById("grid")!;
    host.innerHTML = "";
    const table = el("div", { class: "grid-table" });
    table.style.gridTemplateColumns = `repeat(${this.grid.granularity}, 28px)`;
    for (const cell of this.grid.cells()) {
      const box = el("div", { class: "grid-cell", title: `(${cell.i}, ${cell.j})` });
      box.style.background = cell.color;
      if (cell.digest) {
        box.addEventListener("mouseenter", () => {
          void this.grid.hover(cell.i, cell.j).then((elite) => this.renderPreview(elite));
        });
        box.addEventListener("mouseleave", () => {
          this.grid.clearHover();
          this.renderPreview(null);
        });
        box.addEventListener("click", () => {
          void this.grid.select(cell.i, cell.j).then((elite) => this.renderInspect(elite));
        });
      }
      table.append(box);
    }
    const labels = el("div", { class: "grid-lab" }, `${this.grid.dims[0]} / ${this.grid.dims[1]}`);
    host.append(labels, table);
  }

  private renderPreview(elite: ElitePayload | null): void {
    const host = document.getElementById("preview")!;
    host.textContent = elite
      ? `hover (${elite.cell[0]},${elite.cell[1]}): fitness ${elite.fitness.toFixed(3)}, ` +
        `${elite.graph.nodes.length} nodes / ${elite.graph.edges.length} edges`
      : "";
  }

  private renderInspect(elite: ElitePayload | null): void {
    const host = document.getElementById("inspect")!;
    host.innerHTML = "";
    if (!elite) return;
    host.append(
      el("div", {}, `cell (${elite.cell[0]},${elite.cell[1]}): fitness ${elite.fitness.toFixed(3)}`),
      el("button", { id: "adopt" }, "adopt"),
    );
    host.querySelector("#adopt")!.addEventListener("click", () => {
      void this.grid.adoptSelected().then((ack) => this.editor.reload(ack));
    });
  }

  private renderFooter(metrics: EvaluationPayload): void {
    const footer = document.getElementById("footer")!;
    footer.textContent =
      `fitness ${metrics.fitness.toFixed(3)} | ` +
      `interestingness ${metrics.dimensions["interestingness"]?.toFixed(3)} | ` +
      `coherence ${metrics.coherence.toFixed(3)}` +
      (metrics.feasible ? "" : ` | INFEASIBLE: ${metrics.violations.join("; ")}`);
  }
}

export function mount(root: HTMLElement, base = ""): App {
  const app = new App(root, base);
  void app.start();
  return app;
}
