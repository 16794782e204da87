"""Session service over HTTP: lifecycle, live edits, snapshots, streaming."""

import json
import time

import pytest
from fastapi.testclient import TestClient
from jsonschema import validate

from storymorph.graphs import Trope, canonical_hash, default_graph, serialize
from storymorph.service import create_app
from storymorph.targets import builtin_target

EVALUATION_SCHEMA = {
    "type": "object",
    "required": [
        "digest",
        "feasible",
        "fitness",
        "coherence",
        "consistency",
        "cohesion",
        "dimensions",
        "violations",
        "patterns",
    ],
    "properties": {
        "digest": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        "feasible": {"type": "boolean"},
        "fitness": {"type": "number", "minimum": 0, "maximum": 1},
        "coherence": {"type": "number", "minimum": 0, "maximum": 1},
        "dimensions": {
            "type": "object",
            "additionalProperties": {"type": "number", "minimum": 0, "maximum": 1},
        },
        "violations": {"type": "array", "items": {"type": "string"}},
        "patterns": {
            "type": "object",
            "additionalProperties": {"type": "integer", "minimum": 0},
        },
    },
}

GRAPH_SCHEMA = {
    "type": "object",
    "required": ["nodes", "edges"],
    "properties": {
        "nodes": {"type": "array"},
        "edges": {"type": "array"},
    },
}

SESSION_SCHEMA = {
    "type": "object",
    "required": [
        "id",
        "status",
        "created",
        "generation",
        "dims",
        "granularity",
        "constraints",
        "coverage",
    ],
    "properties": {
        "id": {"type": "string"},
        "status": {"enum": ["running", "paused"]},
        "generation": {"type": "integer", "minimum": 0},
        "dims": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "granularity": {"type": "integer", "minimum": 2},
        "coverage": {"type": "number", "minimum": 0, "maximum": 1},
    },
}

SNAPSHOT_SCHEMA = {
    "type": "object",
    "required": ["generation", "coverage", "grid", "dims"],
    "properties": {
        "generation": {"type": "integer", "minimum": 0},
        "coverage": {"type": "number", "minimum": 0, "maximum": 1},
        "dims": {"type": "array", "items": {"type": "string"}, "minItems": 2},
        "grid": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["cell", "fitness", "digest"],
                "properties": {
                    "cell": {
                        "type": "array",
                        "items": {"type": "integer", "minimum": 0},
                        "minItems": 2,
                        "maxItems": 2,
                    },
                    "fitness": {"type": "number", "minimum": 0, "maximum": 1},
                    "digest": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
                },
            },
        },
    },
}

TARGET_ACK_SCHEMA = {
    "type": "object",
    "required": ["session", "generation", "target", "evaluation"],
    "properties": {
        "target": GRAPH_SCHEMA,
        "evaluation": EVALUATION_SCHEMA,
    },
}

ELITE_SCHEMA = {
    "type": "object",
    "required": ["cell", "graph"] + EVALUATION_SCHEMA["required"],
    "properties": {"graph": GRAPH_SCHEMA, **EVALUATION_SCHEMA["properties"]},
}

HERO_TROPES = {Trope.HERO.value, Trope.NEO.value, Trope.SH.value}


def small_app(state_dir=None):
    # small sessions keep the evolution loops cheap while tests run
    return create_app(state_dir, initial_population=60, offspring_pairs=6)


@pytest.fixture()
def client():
    with TestClient(small_app()) as test_client:
        yield test_client


def make_session(client, **body) -> str:
    response = client.post("/sessions", json=body or None)
    assert response.status_code == 201
    payload = response.json()
    validate(payload, SESSION_SCHEMA)
    return payload["id"]


def paused_session(client, **body) -> str:
    session = make_session(client, **body)
    client.post(f"/sessions/{session}/pause")
    return session


def test_create_defaults_to_minimal_story(client):
    session = make_session(client, seed=7)
    response = client.get(f"/sessions/{session}/target")
    payload = response.json()
    validate(payload, TARGET_ACK_SCHEMA)
    assert payload["evaluation"]["digest"] == canonical_hash(default_graph())
    assert payload["evaluation"]["dimensions"]["interestingness"] == 0.0
    assert payload["evaluation"]["dimensions"]["step"] == 0.0


def test_create_sessions_are_isolated(client):
    first = make_session(client, seed=1)
    second = make_session(client, seed=2)
    assert first != second
    graph, _ = builtin_target("2")
    client.put(f"/sessions/{first}/target", json=serialize(graph))
    digest = client.get(f"/sessions/{second}/target").json()["evaluation"]["digest"]
    assert digest == canonical_hash(default_graph())


def test_create_with_constraints_classifies_immediately(client):
    session = paused_session(
        client, seed=3, constraints={"heroes": 0, "enemies": 0, "quest_items": 0}
    )
    grid = client.get(f"/sessions/{session}/grid").json()
    for entry in grid["grid"]:
        i, j = entry["cell"]
        elite = client.get(f"/sessions/{session}/cells/{i}/{j}").json()
        assert elite["feasible"]
        tropes = {node["trope"] for node in elite["graph"]["nodes"]}
        assert not tropes & HERO_TROPES


def test_create_rejects_bad_documents(client):
    response = client.post("/sessions", json={"target": {"nodes": "x", "edges": []}})
    assert response.status_code == 400
    assert "error" in response.json()
    response = client.post(
        "/sessions", json={"dims": {"selected": ["step", "nope"]}}
    )
    assert response.status_code == 400
    response = client.post("/sessions", json={"constraints": {"heroes": 1}})
    assert response.status_code == 400


def test_unknown_session_is_404(client):
    assert client.get("/sessions/nope").status_code == 404
    assert client.get("/sessions/nope/grid").status_code == 404
    assert client.put("/sessions/nope/target", json={}).status_code == 404
    assert client.post("/sessions/nope/pause").status_code == 404


def test_put_target_acknowledges_with_evaluation(client):
    session = make_session(client, seed=11)
    step5, _ = builtin_target("4.5")
    response = client.put(f"/sessions/{session}/target", json=serialize(step5))
    assert response.status_code == 200
    payload = response.json()
    validate(payload, TARGET_ACK_SCHEMA)
    assert payload["evaluation"]["digest"] == canonical_hash(step5)
    assert payload["evaluation"]["dimensions"]["interestingness"] == pytest.approx(
        1 / 3, abs=1e-9
    )
    # read-your-writes: an immediate read sees the new target
    current = client.get(f"/sessions/{session}/target").json()
    assert current["evaluation"]["digest"] == canonical_hash(step5)


def test_put_target_flags_budget_violations(client):
    session = make_session(
        client, seed=12, constraints={"heroes": 0, "enemies": 2, "quest_items": 2}
    )
    response = client.put(
        f"/sessions/{session}/target", json=serialize(default_graph())
    )
    payload = response.json()
    assert payload["evaluation"]["feasible"] is False
    assert payload["evaluation"]["violations"]


def test_put_target_rejects_invalid_documents(client):
    session = make_session(client, seed=13)
    before = client.get(f"/sessions/{session}/target").json()["evaluation"]["digest"]
    response = client.put(
        f"/sessions/{session}/target",
        json={"nodes": [{"id": "a", "trope": "NOPE"}], "edges": []},
    )
    assert response.status_code == 400
    after = client.get(f"/sessions/{session}/target").json()["evaluation"]["digest"]
    assert after == before


def test_grid_snapshot_shape(client):
    session = paused_session(client, seed=21)
    response = client.get(f"/sessions/{session}/grid")
    snapshot = response.json()
    validate(snapshot, SNAPSHOT_SCHEMA)
    assert snapshot["dims"] == ["step", "interestingness"]
    # the initial population alone already claims cells
    assert snapshot["coverage"] > 0.0
    assert snapshot["grid"]


def test_grid_accepts_projections(client):
    session = paused_session(client, seed=22)
    response = client.get(f"/sessions/{session}/grid?x=conflicts&y=step")
    snapshot = response.json()
    assert snapshot["dims"] == ["conflicts", "step"]
    assert client.get(f"/sessions/{session}/grid?x=conflicts").status_code == 400
    assert client.get(f"/sessions/{session}/grid?x=bogus&y=step").status_code == 400


def test_elite_view_and_adoption(client):
    session = paused_session(client, seed=23)
    grid = client.get(f"/sessions/{session}/grid").json()
    i, j = grid["grid"][0]["cell"]
    elite = client.get(f"/sessions/{session}/cells/{i}/{j}").json()
    validate(elite, ELITE_SCHEMA)
    assert elite["cell"] == [i, j]
    assert elite["digest"] == grid["grid"][0]["digest"]
    adopted = client.post(f"/sessions/{session}/cells/{i}/{j}/adopt").json()
    validate(adopted, TARGET_ACK_SCHEMA)
    assert adopted["evaluation"]["digest"] == elite["digest"]
    current = client.get(f"/sessions/{session}/target").json()
    assert current["evaluation"]["digest"] == elite["digest"]
    # adopting makes the target its own identity: step 0 appears in the grid
    after = client.get(f"/sessions/{session}/grid").json()
    assert any(entry["cell"][0] == 0 for entry in after["grid"])


def test_empty_cell_is_404(client):
    session = paused_session(client, seed=24)
    grid = client.get(f"/sessions/{session}/grid").json()
    occupied = {tuple(entry["cell"]) for entry in grid["grid"]}
    empty = next(
        (i, j) for i in range(5) for j in range(5) if (i, j) not in occupied
    )
    response = client.get(f"/sessions/{session}/cells/{empty[0]}/{empty[1]}")
    assert response.status_code == 404
    response = client.post(f"/sessions/{session}/cells/{empty[0]}/{empty[1]}/adopt")
    assert response.status_code == 404


def test_dimension_switch(client):
    session = paused_session(client, seed=31)
    response = client.put(
        f"/sessions/{session}/dimensions",
        json={"selected": ["conflicts", "diversity"], "granularity": 5},
    )
    payload = response.json()
    assert payload["dims"] == ["conflicts", "diversity"]
    snapshot = client.get(f"/sessions/{session}/grid").json()
    assert snapshot["dims"] == ["conflicts", "diversity"]
    bad = client.put(
        f"/sessions/{session}/dimensions", json={"selected": ["bogus"]}
    )
    assert bad.status_code == 400


def test_constraint_tighten_and_relax(client):
    session = paused_session(client, seed=32)
    before = client.get(f"/sessions/{session}/grid").json()
    response = client.put(
        f"/sessions/{session}/constraints",
        json={"heroes": 0, "enemies": 0, "quest_items": 0},
    )
    assert response.status_code == 200
    tightened = client.get(f"/sessions/{session}/grid").json()
    for entry in tightened["grid"]:
        i, j = entry["cell"]
        elite = client.get(f"/sessions/{session}/cells/{i}/{j}").json()
        tropes = {node["trope"] for node in elite["graph"]["nodes"]}
        assert not tropes & HERO_TROPES
    # relaxing back never demotes a feasible individual
    response = client.put(
        f"/sessions/{session}/constraints", content="null",
        headers={"content-type": "application/json"},
    )
    assert response.status_code == 200
    relaxed = client.get(f"/sessions/{session}/grid").json()
    tight_cells = {tuple(e["cell"]) for e in tightened["grid"]}
    relaxed_cells = {tuple(e["cell"]) for e in relaxed["grid"]}
    assert tight_cells <= relaxed_cells
    assert {tuple(e["cell"]) for e in before["grid"]} <= relaxed_cells


def test_pause_freezes_generation(client):
    session = make_session(client, seed=33)
    client.post(f"/sessions/{session}/pause")
    first = client.get(f"/sessions/{session}").json()
    assert first["status"] == "paused"
    time.sleep(0.3)
    second = client.get(f"/sessions/{session}").json()
    assert second["generation"] == first["generation"]
    resumed = client.post(f"/sessions/{session}/resume").json()
    assert resumed["status"] == "running"


def read_stream_events(client, session, count, max_lines=40):
    events = []
    with client.stream("GET", f"/sessions/{session}/stream") as response:
        assert response.headers["content-type"].startswith("text/event-stream")
        for line_number, line in enumerate(response.iter_lines()):
            if line.startswith("data: "):
                events.append(json.loads(line[len("data: "):]))
                if len(events) >= count:
                    break
            assert line_number < max_lines
    return events


def test_stream_pushes_increasing_generations(client):
    session = make_session(client, seed=41)
    events = read_stream_events(client, session, count=2)
    validate(events[0], SNAPSHOT_SCHEMA)
    assert events[1]["generation"] > events[0]["generation"]


def test_paused_stream_stays_silent(client):
    session = paused_session(client, seed=42)
    with client.stream("GET", f"/sessions/{session}/stream") as response:
        lines = response.iter_lines()
        for _ in range(3):
            line = next(lines)
            assert not line.startswith("data: ")


def test_restart_restores_sessions(tmp_path):
    state_dir = str(tmp_path / "state")
    with TestClient(small_app(state_dir=state_dir)) as client:
        session = make_session(client, seed=51)
        graph, _ = builtin_target("3")
        client.put(f"/sessions/{session}/target", json=serialize(graph))
        client.put(
            f"/sessions/{session}/dimensions",
            json={"selected": ["step", "conflicts"], "granularity": 5},
        )
        client.post(f"/sessions/{session}/pause")
        described = client.get(f"/sessions/{session}").json()
        target = client.get(f"/sessions/{session}/target").json()["target"]
        grid = client.get(f"/sessions/{session}/grid").json()

    state_path = tmp_path / "state" / f"{session}.session.json"
    assert state_path.exists()
    saved = state_path.read_bytes()

    with TestClient(small_app(state_dir=state_dir)) as client:
        restored = client.get(f"/sessions/{session}").json()
        assert restored["status"] == "paused"
        assert restored["generation"] == described["generation"]
        assert restored["dims"] == ["step", "conflicts"]
        assert client.get(f"/sessions/{session}/target").json()["target"] == target
        assert client.get(f"/sessions/{session}/grid").json() == grid

    # an untouched paused session persists byte-identically across restarts
    assert state_path.read_bytes() == saved
