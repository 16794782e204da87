// Shared test scaffolding: a deterministic PRNG for fuzz scripts and an
// in-memory fake of the session service speaking the same wire shapes, so
// client state logic can be exercised without a live backend.

import { GraphDoc, cloneGraph, graphProblems } from "../src/model.js";
import { EvaluationPayload, GridSnapshot, TargetAck } from "../src/api.js";

export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function pick<T>(rand: () => number, items: readonly T[]): T {
  if (items.length === 0) throw new Error("pick from empty list");
  return items[Math.floor(rand() * items.length)]!;
}

export const DEFAULT_GRAPH: GraphDoc = {
  nodes: [
    { id: "hero", trope: "HERO" },
    { id: "conflict", trope: "CONFLICT" },
    { id: "enemy", trope: "ENEMY" },
  ],
  edges: [
    { src: "hero", dst: "conflict", kind: "PLAIN" },
    { src: "conflict", dst: "enemy", kind: "PLAIN" },
  ],
};

// Stable content hash stand-in: canonical JSON of sorted structure.
export function fakeDigest(graph: GraphDoc): string {
  const nodes = [...graph.nodes].sort((a, b) => a.id.localeCompare(b.id));
  const edges = [...graph.edges]
    .map((e) => `${e.src}>${e.dst}:${e.kind}`)
    .sort();
  return JSON.stringify([nodes.map((n) => `${n.id}=${n.trope}`), edges]);
}

export function fakeEvaluation(graph: GraphDoc): EvaluationPayload {
  const n = graph.nodes.length;
  const m = graph.edges.length;
  return {
    digest: fakeDigest(graph),
    feasible: true,
    fitness: Math.min(1, 0.1 * n + 0.01 * m),
    coherence: Math.min(1, 0.2 * n),
    consistency: 0.5,
    cohesion: 0.5,
    dimensions: {
      step: 0,
      interestingness: Math.min(1, 0.05 * (n + m)),
    },
    violations: [],
    patterns: {},
  };
}

export interface FakeServerOptions {
  // Extra server-side rejection the client cannot predict (e.g. a budget).
  rejectWhen?: (graph: GraphDoc) => string | null;
  // Called with every PUT /target body, before validation.
  onPut?: (graph: GraphDoc) => void;
  // Hold each PUT until the returned promise resolves (concurrency probes).
  gate?: () => Promise<void>;
}

export class FakeServer {
  target: GraphDoc = cloneGraph(DEFAULT_GRAPH);
  generation = 0;
  snapshot: GridSnapshot = {
    generation: 0,
    coverage: 0,
    grid: [],
    dims: ["step", "interestingness"],
  };
  elites = new Map<string, GraphDoc>();
  puts = 0;
  inFlight = 0;
  maxInFlight = 0;
  adopted: Array<[number, number]> = [];

  constructor(private readonly options: FakeServerOptions = {}) {}

  setElite(i: number, j: number, graph: GraphDoc, fitness: number): void {
    this.elites.set(`${i},${j}`, graph);
    this.snapshot.grid = this.snapshot.grid.filter(
      (c) => !(c.cell[0] === i && c.cell[1] === j),
    );
    this.snapshot.grid.push({ cell: [i, j], fitness, digest: fakeDigest(graph) });
  }

  targetAck(): TargetAck {
    return {
      session: "fake",
      generation: this.generation,
      target: cloneGraph(this.target),
      evaluation: fakeEvaluation(this.target),
    };
  }

  private elitePayload(i: number, j: number) {
    const graph = this.elites.get(`${i},${j}`);
    if (!graph) return null;
    return { cell: [i, j], graph: cloneGraph(graph), ...fakeEvaluation(graph) };
  }

  fetch = async (input: string | URL | Request, init?: RequestInit): Promise<Response> => {
    const url = typeof input === "string" ? input : input.toString();
    const method = (init?.method ?? "GET").toUpperCase();
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const reply = (status: number, body: unknown) =>
      new Response(JSON.stringify(body), {
        status,
        headers: { "content-type": "application/json" },
      });
    const notFound = (kind: string, detail: string) =>
      reply(404, { error: kind, detail });

    if (method === "PUT" && path.endsWith("/target")) {
      this.puts += 1;
      this.inFlight += 1;
      this.maxInFlight = Math.max(this.maxInFlight, this.inFlight);
      try {
        if (this.options.gate) await this.options.gate();
        const graph = JSON.parse(String(init?.body)) as GraphDoc;
        this.options.onPut?.(graph);
        const problems = graphProblems(graph);
        if (problems.length > 0)
          return reply(400, { error: "ValidationError", detail: problems.join("; ") });
        const rejection = this.options.rejectWhen?.(graph) ?? null;
        if (rejection !== null)
          return reply(400, { error: "ValidationError", detail: rejection });
        this.target = cloneGraph(graph);
        this.generation += 1;
        return reply(200, this.targetAck());
      } finally {
        this.inFlight -= 1;
      }
    }
    if (method === "GET" && path.endsWith("/target")) {
      return reply(200, this.targetAck());
    }
    if (method === "GET" && /\/grid(\?|$)/.test(path)) {
      return reply(200, this.snapshot);
    }
    const cellMatch = path.match(/\/cells\/(\d+)\/(\d+)(\/adopt)?$/);
    if (cellMatch) {
      const i = Number(cellMatch[1]);
      const j = Number(cellMatch[2]);
      const payload = this.elitePayload(i, j);
      if (!payload) return notFound("NoElite", `cell (${i}, ${j}) has no elite`);
      if (method === "POST" && cellMatch[3]) {
        this.adopted.push([i, j]);
        this.target = cloneGraph(this.elites.get(`${i},${j}`)!);
        this.generation += 1;
        return reply(200, this.targetAck());
      }
      return reply(200, payload);
    }
    return notFound("NotFound", `no route ${method} ${path}`);
  };
}
