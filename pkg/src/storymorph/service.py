"""HTTP session service for mixed-initiative design.

Each session owns one evolution worker thread; request handlers never touch
archive state directly, they enqueue commands and wait for the worker's reply.
The stream endpoint pushes grid snapshots as server-sent events, at most one
per second, and stays silent while the session is paused. With a state
directory configured, sessions checkpoint to disk and are restored on startup.
"""

from __future__ import annotations

import asyncio
import json
import queue
import threading
import time
import uuid
from concurrent.futures import Future
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse

from .archive import Archive, ArchiveConfig, init_archive
from .errors import (
    NoEliteError,
    NotFoundError,
    StoryGraphError,
    ValidationError,
)
from .evaluation import DimensionSpec, evaluate
from .graphs import (
    LevelConstraints,
    NarrativeGraph,
    canonical_hash,
    default_graph,
    deserialize,
    serialize,
)
from .patterns import detect_patterns

INTERACTIVE_POPULATION = 300
INTERACTIVE_OFFSPRING = 25
DEFAULT_DIMS = ("step", "interestingness")
STREAM_MIN_INTERVAL = 1.0
CHECKPOINT_EVERY = 25
COMMAND_TIMEOUT = 30.0


def evaluation_payload(
    graph: NarrativeGraph,
    *,
    target: NarrativeGraph,
    constraints: LevelConstraints | None,
) -> dict:
    """Footer metrics for a graph: scores, dimensions, and pattern counts."""
    patterns = detect_patterns(graph)
    ev = evaluate(graph, target=target, constraints=constraints, patterns=patterns)
    return {
        "digest": canonical_hash(graph),
        "feasible": ev.feasible,
        "fitness": ev.fitness,
        "coherence": ev.coherence,
        "consistency": ev.consistency,
        "cohesion": ev.cohesion,
        "dimensions": dict(ev.dimensions),
        "violations": list(ev.violations),
        "patterns": patterns.counts(),
    }


def _constraints_from_payload(payload: dict | None) -> LevelConstraints | None:
    if payload is None:
        return None
    if not isinstance(payload, dict):
        raise ValidationError("constraints must be an object or null")
    unknown = set(payload) - {"heroes", "enemies", "quest_items"}
    if unknown:
        raise ValidationError(f"unknown constraint fields {sorted(unknown)}")
    try:
        return LevelConstraints(
            heroes=int(payload["heroes"]),
            enemies=int(payload["enemies"]),
            quest_items=int(payload["quest_items"]),
        )
    except KeyError as exc:
        raise ValidationError(f"constraints missing field {exc.args[0]!r}") from None


def _constraints_payload(constraints: LevelConstraints | None) -> dict | None:
    if constraints is None:
        return None
    return {
        "heroes": constraints.heroes,
        "enemies": constraints.enemies,
        "quest_items": constraints.quest_items,
    }


def _dims_from_payload(payload: dict) -> DimensionSpec:
    if not isinstance(payload, dict) or "selected" not in payload:
        raise ValidationError("dimensions payload needs a 'selected' list")
    selected = payload["selected"]
    if not isinstance(selected, list):
        raise ValidationError("'selected' must be a list of dimension ids")
    granularity = payload.get("granularity", 5)
    if not isinstance(granularity, int):
        raise ValidationError("'granularity' must be an integer")
    return DimensionSpec(selected=tuple(selected), granularity=granularity)


class SessionWorker:
    """One evolution loop plus a command queue; the sole owner of its archive."""

    def __init__(
        self,
        session_id: str,
        archive: Archive,
        created: float,
        paused: bool = False,
        state_path: Path | None = None,
    ):
        self.id = session_id
        self.created = created
        self._archive = archive
        self._paused = paused
        self._state_path = state_path
        self._commands: queue.Queue[tuple[str, object, Future]] = queue.Queue()
        self._subscribers: list[queue.Queue] = []
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._last_push = 0.0
        self._thread = threading.Thread(
            target=self._loop, name=f"session-{session_id}", daemon=True
        )
        self._thread.start()

    # -- handler side ----------------------------------------------------------------

    def call(self, command: str, payload: object = None) -> object:
        """Enqueue a command and wait for the worker to apply it."""
        if self._stop.is_set():
            raise NotFoundError(f"session {self.id} is shut down")
        future: Future = Future()
        self._commands.put((command, payload, future))
        return future.result(timeout=COMMAND_TIMEOUT)

    def subscribe(self) -> queue.Queue:
        listener: queue.Queue = queue.Queue(maxsize=4)
        with self._lock:
            self._subscribers.append(listener)
        return listener

    def unsubscribe(self, listener: queue.Queue) -> None:
        with self._lock:
            if listener in self._subscribers:
                self._subscribers.remove(listener)

    @property
    def stopped(self) -> bool:
        return self._stop.is_set()

    def shutdown(self) -> None:
        self._stop.set()
        self._thread.join(timeout=10.0)

    # -- worker side -----------------------------------------------------------------

    def _loop(self) -> None:
        while not self._stop.is_set():
            handled = self._drain_commands()
            if self._paused:
                if not handled:
                    time.sleep(0.02)
                continue
            report = self._archive.step_generation()
            if report.generation % CHECKPOINT_EVERY == 0:
                self._save()
            now = time.monotonic()
            if now - self._last_push >= STREAM_MIN_INTERVAL:
                self._last_push = now
                self._publish()
        self._save()

    def _drain_commands(self) -> bool:
        handled = False
        while True:
            try:
                command, payload, future = self._commands.get_nowait()
            except queue.Empty:
                return handled
            handled = True
            try:
                future.set_result(self._apply(command, payload))
            except BaseException as exc:
                future.set_exception(exc)

    def _apply(self, command: str, payload: object) -> object:
        archive = self._archive
        if command == "target":
            graph = payload if isinstance(payload, NarrativeGraph) else deserialize(payload)
            archive.inject_target(graph)
            self._save()
            return self._target_payload()
        if command == "get_target":
            return self._target_payload()
        if command == "snapshot":
            return archive.snapshot(payload)
        if command == "elite":
            return self._elite_payload(*payload)
        if command == "adopt":
            elite = self._find_elite(*payload)
            archive.inject_target(elite.phenotype)
            self._save()
            return self._target_payload()
        if command == "dimensions":
            archive.set_dimensions(payload)
            return self.describe()
        if command == "constraints":
            archive.set_constraints(payload)
            return self.describe()
        if command == "pause":
            self._paused = True
            self._save()
            return self.describe()
        if command == "resume":
            self._paused = False
            return self.describe()
        if command == "describe":
            return self.describe()
        raise ValidationError(f"unknown command {command!r}")

    def _target_payload(self) -> dict:
        archive = self._archive
        target = archive.target
        return {
            "session": self.id,
            "generation": archive.generation,
            "target": serialize(target),
            "evaluation": evaluation_payload(
                target, target=target, constraints=archive.config.constraints
            ),
        }

    def _find_elite(self, i: int, j: int, projection: tuple[str, str] | None):
        elite = self._archive.elite_at(i, j, projection)
        if elite is None:
            raise NoEliteError(f"no feasible elite in cell ({i}, {j})")
        return elite

    def _elite_payload(
        self, i: int, j: int, projection: tuple[str, str] | None
    ) -> dict:
        elite = self._find_elite(i, j, projection)
        archive = self._archive
        # derived fields are recomputed from the phenotype, never read stale
        payload = evaluation_payload(
            elite.phenotype,
            target=archive.target,
            constraints=archive.config.constraints,
        )
        return {
            "cell": [i, j],
            "graph": serialize(elite.phenotype),
            **payload,
        }

    def describe(self) -> dict:
        archive = self._archive
        config = archive.config
        return {
            "id": self.id,
            "status": "paused" if self._paused else "running",
            "created": self.created,
            "generation": archive.generation,
            "dims": list(config.dims.selected),
            "granularity": config.dims.granularity,
            "constraints": _constraints_payload(config.constraints),
            "coverage": archive.coverage(),
        }

    def _publish(self) -> None:
        snapshot = self._archive.snapshot()
        with self._lock:
            listeners = list(self._subscribers)
        for listener in listeners:
            while True:
                try:
                    listener.put_nowait(snapshot)
                    break
                except queue.Full:
                    try:
                        listener.get_nowait()
                    except queue.Empty:
                        pass

    def _save(self) -> None:
        if self._state_path is None:
            return
        document = {
            "id": self.id,
            "created": self.created,
            "status": "paused" if self._paused else "running",
            "archive": self._archive.to_document(),
        }
        tmp = self._state_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(document, sort_keys=True), encoding="utf-8")
        tmp.replace(self._state_path)


class SessionRegistry:
    def __init__(
        self,
        state_dir: Path | None,
        initial_population: int = INTERACTIVE_POPULATION,
        offspring_pairs: int = INTERACTIVE_OFFSPRING,
    ):
        self._state_dir = state_dir
        self._initial_population = initial_population
        self._offspring_pairs = offspring_pairs
        self._sessions: dict[str, SessionWorker] = {}
        self._lock = threading.Lock()

    def restore(self) -> None:
        if self._state_dir is None:
            return
        self._state_dir.mkdir(parents=True, exist_ok=True)
        for path in sorted(self._state_dir.glob("*.session.json")):
            document = json.loads(path.read_text(encoding="utf-8"))
            worker = SessionWorker(
                session_id=document["id"],
                archive=Archive.from_document(document["archive"]),
                created=document["created"],
                paused=document["status"] == "paused",
                state_path=path,
            )
            with self._lock:
                self._sessions[worker.id] = worker

    def create(self, body: dict) -> SessionWorker:
        target = (
            deserialize(body["target"]) if body.get("target") is not None else default_graph()
        )
        constraints = _constraints_from_payload(body.get("constraints"))
        dims = (
            _dims_from_payload(body["dims"])
            if body.get("dims") is not None
            else DimensionSpec(selected=DEFAULT_DIMS, granularity=5)
        )
        seed = body.get("seed")
        if seed is None:
            seed = uuid.uuid4().int % 2**31
        elif not isinstance(seed, int):
            raise ValidationError("seed must be an integer")
        config = ArchiveConfig(
            dims=dims,
            cell_capacity=25,
            offspring_per_generation=self._offspring_pairs,
            mutation_probability=0.5,
            constraints=constraints,
            seed=seed,
            initial_population=self._initial_population,
            recipes_per_individual=5,
        )
        archive = init_archive(config, target)
        session_id = uuid.uuid4().hex[:12]
        state_path = (
            self._state_dir / f"{session_id}.session.json"
            if self._state_dir is not None
            else None
        )
        worker = SessionWorker(
            session_id=session_id,
            archive=archive,
            created=time.time(),
            state_path=state_path,
        )
        with self._lock:
            self._sessions[session_id] = worker
        return worker

    def get(self, session_id: str) -> SessionWorker:
        with self._lock:
            worker = self._sessions.get(session_id)
        if worker is None or worker.stopped:
            raise NotFoundError(f"unknown session {session_id!r}")
        return worker

    def shutdown(self) -> None:
        with self._lock:
            workers = list(self._sessions.values())
        for worker in workers:
            worker.shutdown()


def _http_status(exc: StoryGraphError) -> int:
    if isinstance(exc, (NotFoundError, NoEliteError)):
        return 404
    return 400


def _projection_from_query(request: Request) -> tuple[str, str] | None:
    x = request.query_params.get("x")
    y = request.query_params.get("y")
    if x is None and y is None:
        return None
    if x is None or y is None:
        raise ValidationError("projection needs both x and y dimensions")
    return (x, y)


async def _json_body(request: Request) -> dict:
    raw = await request.body()
    if not raw:
        return {}
    try:
        body = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON body: {exc.msg}") from None
    if not isinstance(body, dict):
        raise ValidationError("request body must be a JSON object")
    return body


def create_app(
    state_dir: str | None = None,
    *,
    initial_population: int = INTERACTIVE_POPULATION,
    offspring_pairs: int = INTERACTIVE_OFFSPRING,
) -> FastAPI:
    """Build the service app. The sizing knobs shrink sessions for embedding
    in resource-constrained hosts and tests; the defaults are the interactive
    profile."""
    app = FastAPI(title="storymorph session service")
    registry = SessionRegistry(
        Path(state_dir) if state_dir else None,
        initial_population=initial_population,
        offspring_pairs=offspring_pairs,
    )
    app.state.registry = registry

    @app.exception_handler(StoryGraphError)
    async def _domain_error(request: Request, exc: StoryGraphError):
        return JSONResponse(
            status_code=_http_status(exc),
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.on_event("startup")
    def _startup() -> None:
        registry.restore()

    @app.on_event("shutdown")
    def _shutdown() -> None:
        registry.shutdown()

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        body = await _json_body(request)
        worker = await asyncio.to_thread(registry.create, body)
        return await asyncio.to_thread(worker.call, "describe")

    @app.get("/sessions/{session_id}")
    async def describe_session(session_id: str):
        return await asyncio.to_thread(registry.get(session_id).call, "describe")

    @app.get("/sessions/{session_id}/target")
    async def get_target(session_id: str):
        return await asyncio.to_thread(registry.get(session_id).call, "get_target")

    @app.put("/sessions/{session_id}/target")
    async def put_target(session_id: str, request: Request):
        worker = registry.get(session_id)
        body = await _json_body(request)
        graph = deserialize(body)  # reject bad documents before queueing
        return await asyncio.to_thread(worker.call, "target", graph)

    @app.get("/sessions/{session_id}/grid")
    async def get_grid(session_id: str, request: Request):
        worker = registry.get(session_id)
        return await asyncio.to_thread(
            worker.call, "snapshot", _projection_from_query(request)
        )

    @app.get("/sessions/{session_id}/cells/{i}/{j}")
    async def get_elite(session_id: str, i: int, j: int, request: Request):
        worker = registry.get(session_id)
        return await asyncio.to_thread(
            worker.call, "elite", (i, j, _projection_from_query(request))
        )

    @app.post("/sessions/{session_id}/cells/{i}/{j}/adopt")
    async def adopt_elite(session_id: str, i: int, j: int, request: Request):
        worker = registry.get(session_id)
        return await asyncio.to_thread(
            worker.call, "adopt", (i, j, _projection_from_query(request))
        )

    @app.put("/sessions/{session_id}/dimensions")
    async def put_dimensions(session_id: str, request: Request):
        worker = registry.get(session_id)
        body = await _json_body(request)
        return await asyncio.to_thread(worker.call, "dimensions", _dims_from_payload(body))

    @app.put("/sessions/{session_id}/constraints")
    async def put_constraints(session_id: str, request: Request):
        worker = registry.get(session_id)
        raw = await request.body()
        try:
            payload = json.loads(raw) if raw else None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON body: {exc.msg}") from None
        if payload is not None and not isinstance(payload, dict):
            raise ValidationError("constraints must be an object or null")
        return await asyncio.to_thread(
            worker.call, "constraints", _constraints_from_payload(payload)
        )

    @app.post("/sessions/{session_id}/pause")
    async def pause_session(session_id: str):
        return await asyncio.to_thread(registry.get(session_id).call, "pause")

    @app.post("/sessions/{session_id}/resume")
    async def resume_session(session_id: str):
        return await asyncio.to_thread(registry.get(session_id).call, "resume")

    @app.get("/sessions/{session_id}/stream")
    async def stream_grid(session_id: str):
        worker = registry.get(session_id)
        listener = worker.subscribe()

        def event_stream():
            try:
                while not worker.stopped:
                    try:
                        snapshot = listener.get(timeout=1.0)
                    except queue.Empty:
                        yield ": keep-alive\n\n"
                        continue
                    yield f"data: {json.dumps(snapshot, sort_keys=True)}\n\n"
            finally:
                worker.unsubscribe(listener)

        return StreamingResponse(event_stream(), media_type="text/event-stream")

    return app
