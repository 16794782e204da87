import { expect, test } from "vitest";

import {
  EditError,
  GraphDoc,
  TROPES,
  addEdge,
  addNode,
  cloneGraph,
  freshNodeId,
  graphProblems,
  hasEdge,
  removeEdge,
  removeNode,
  retypeNode,
  tropeClass,
} from "../src/model.js";
import { DEFAULT_GRAPH, mulberry32, pick } from "./helpers.js";

test("default story document is valid", () => {
  expect(graphProblems(DEFAULT_GRAPH)).toEqual([]);
});

test("trope classes cover every trope", () => {
  for (const trope of TROPES) {
    expect(["hero", "villain", "structure", "device"]).toContain(tropeClass(trope));
  }
  expect(() => tropeClass("WIZARD")).toThrow(EditError);
});

test("edits are pure: the input document never changes", () => {
  const before = JSON.stringify(DEFAULT_GRAPH);
  addNode(DEFAULT_GRAPH, "dragon", "DRA");
  removeNode(DEFAULT_GRAPH, "enemy");
  retypeNode(DEFAULT_GRAPH, "hero", "NEO");
  addEdge(DEFAULT_GRAPH, "enemy", "hero", "ENTAIL");
  removeEdge(DEFAULT_GRAPH, "hero", "conflict", "PLAIN");
  expect(JSON.stringify(DEFAULT_GRAPH)).toBe(before);
});

test("removing a node drops its incident edges", () => {
  const next = removeNode(DEFAULT_GRAPH, "conflict");
  expect(next.nodes.map((n) => n.id)).toEqual(["hero", "enemy"]);
  expect(next.edges).toEqual([]);
});

test("the last node cannot be removed", () => {
  const single: GraphDoc = { nodes: [{ id: "hero", trope: "HERO" }], edges: [] };
  expect(() => removeNode(single, "hero")).toThrow(EditError);
});

test("duplicate ids, self-loops, and duplicate edges are refused", () => {
  expect(() => addNode(DEFAULT_GRAPH, "hero", "NEO")).toThrow(EditError);
  expect(() => addEdge(DEFAULT_GRAPH, "hero", "hero", "PLAIN")).toThrow(EditError);
  expect(() => addEdge(DEFAULT_GRAPH, "hero", "conflict", "PLAIN")).toThrow(EditError);
  // same endpoints with the other kind is a different edge
  const next = addEdge(DEFAULT_GRAPH, "hero", "conflict", "ENTAIL");
  expect(hasEdge(next, "hero", "conflict", "ENTAIL")).toBe(true);
});

test("graphProblems flags each malformed document shape", () => {
  expect(graphProblems({ nodes: [], edges: [] })).toContain("graph needs at least one node");
  const dupIds: GraphDoc = {
    nodes: [{ id: "a", trope: "HERO" }, { id: "a", trope: "ENEMY" }],
    edges: [],
  };
  expect(graphProblems(dupIds).join(" ")).toMatch(/duplicate node id/);
  const badTrope: GraphDoc = { nodes: [{ id: "a", trope: "GHOST" }], edges: [] };
  expect(graphProblems(badTrope).join(" ")).toMatch(/unknown trope/);
  const dangling: GraphDoc = {
    nodes: [{ id: "a", trope: "HERO" }],
    edges: [{ src: "a", dst: "b", kind: "PLAIN" }],
  };
  expect(graphProblems(dangling).join(" ")).toMatch(/edge target b missing/);
  const loop: GraphDoc = {
    nodes: [{ id: "a", trope: "HERO" }],
    edges: [{ src: "a", dst: "a", kind: "PLAIN" }],
  };
  expect(graphProblems(loop).join(" ")).toMatch(/self-loop/);
});

test("freshNodeId never collides", () => {
  let graph = cloneGraph(DEFAULT_GRAPH);
  const seen = new Set(graph.nodes.map((n) => n.id));
  for (let k = 0; k < 30; k += 1) {
    const id = freshNodeId(graph, "DRA");
    expect(seen.has(id)).toBe(false);
    seen.add(id);
    graph = addNode(graph, id, "DRA");
  }
});

// Random edit scripts keep the document valid; rejected edits change nothing.
test("fuzz: edit scripts preserve schema validity", () => {
  const rand = mulberry32(0x5eed);
  for (let script = 0; script < 200; script += 1) {
    let graph = cloneGraph(DEFAULT_GRAPH);
    for (let step = 0; step < 25; step += 1) {
      const before = JSON.stringify(graph);
      const move = Math.floor(rand() * 5);
      try {
        if (move === 0) {
          const trope = pick(rand, TROPES);
          graph = addNode(graph, freshNodeId(graph, trope), trope);
        } else if (move === 1) {
          graph = removeNode(graph, pick(rand, graph.nodes).id);
        } else if (move === 2) {
          graph = retypeNode(graph, pick(rand, graph.nodes).id, pick(rand, TROPES));
        } else if (move === 3) {
          const src = pick(rand, graph.nodes).id;
          const dst = pick(rand, graph.nodes).id;
          graph = addEdge(graph, src, dst, rand() < 0.5 ? "PLAIN" : "ENTAIL");
        } else if (graph.edges.length > 0) {
          const edge = pick(rand, graph.edges);
          graph = removeEdge(graph, edge.src, edge.dst, edge.kind);
        }
      } catch (error) {
        expect(error).toBeInstanceOf(EditError);
        expect(JSON.stringify(graph)).toBe(before);
      }
      expect(graphProblems(graph)).toEqual([]);
    }
  }
});
