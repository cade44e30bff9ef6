"""HTTP session service wrapping the scenario engine.

One session is one live mission.  The operator (human or frontend) can
inspect state, inject failures, explore what-if previews for the L and
gamma knobs on a cloned world, and commit a choice, which reconfigures
the live world exactly as the preview predicted.  All session events
stream out over server-sent events in append order.
"""

from __future__ import annotations

import asyncio
import json
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import StreamingResponse

from .coordination import World, reconfigure
from .coverage import CoverageCache, coverage
from .placement import PlacementStats
from .reliability import roulette_pick
from .scenario import (
    RunLog,
    ScenarioConfig,
    SelectionInfeasible,
    apply_failure,
    initialize,
)
from .world import CellSet


@dataclass
class Session:
    session_id: str
    config: ScenarioConfig
    world: World
    runlog: RunLog
    rng: np.random.Generator
    lifecycle: str = "running"
    clock: float = 0.0
    pending: dict | None = None
    lock: asyncio.Lock = field(default_factory=asyncio.Lock)


def _snapshot(session: Session) -> dict:
    world = session.world
    grid = world.grid
    cache = CoverageCache.from_placement(grid, world.placement, world.pool)
    heatmap = cache.detection_field()
    value = cache.value(CellSet.all(grid))
    deployed = set(world.placement.ids())
    robots = []
    for rid in sorted(world.pool):
        spec = world.pool[rid]
        doc = {
            "spec": spec.to_json(),
            "failed": rid in world.failed,
            "active": rid in deployed,
        }
        if rid in deployed:
            x, y = world.placement.position(rid)
            doc["x"], doc["y"] = x, y
            doc["cell"] = world.placement.get(rid).cell
        robots.append(doc)
    return {
        "session_id": session.session_id,
        "lifecycle": session.lifecycle,
        "clock": session.clock,
        "horizon": session.config.horizon,
        "grid": {
            "origin": list(grid.origin),
            "cell_size": grid.cell_size,
            "nx": grid.nx,
            "ny": grid.ny,
            "weights": [float(w) for w in grid.weights],
        },
        "robots": robots,
        "failed_ids": sorted(world.failed),
        "spare_ids": list(world.spare_ids()),
        "pending_failure": session.pending,
        "coverage": value,
        "heatmap": [float(h) for h in heatmap],
    }


def _preview_doc(session: Session, L: float, gamma: float) -> dict:
    """Run the recovery pipeline on a cloned world; the session is
    untouched, so previews with different knobs are independent."""
    pending = session.pending
    before = CoverageCache.from_placement(
        session.world.grid, session.world.placement, session.world.pool
    ).detection_field()
    clone = session.world.clone()
    stats = PlacementStats()
    result = reconfigure(
        clone,
        pending["robot_id"],
        L=L,
        gamma=gamma,
        pool_mask=None,
        t_f=pending["detected_t"],
        horizon=session.config.horizon,
        iterate_until_satisfied=session.config.iterate_until_satisfied,
        stats=stats,
    )
    after = CoverageCache.from_placement(
        clone.grid, clone.placement, clone.pool
    ).detection_field()
    return {
        "ratio_after_local": result.ratio_achieved,
        "robots_requested_count": len(result.requested_robots.ids),
        "requested_ids": list(result.requested_robots.ids),
        "coverage_map_delta": [float(d) for d in (after - before)],
        "estimated_eval_count": stats.gain_evals,
        "satisfied": result.satisfied,
        "ratio_after_augment": result.ratio_after_augment,
        "L": L,
        "gamma": gamma,
    }


def _check_knobs(L: float, gamma: float) -> None:
    if L < 0:
        raise HTTPException(422, detail={"error": "BadRequest", "reason": "L < 0"})
    if not 0.0 <= gamma <= 1.0:
        raise HTTPException(
            422, detail={"error": "BadRequest", "reason": "gamma outside [0, 1]"}
        )


def create_app(default_config: ScenarioConfig | None = None) -> FastAPI:
    app = FastAPI(title="resilient-coverage operator service")
    # the browser console is served as static files from a different origin
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    sessions: dict = {}

    def _get(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(404, detail={"error": "NotFound"})
        return session

    @app.post("/sessions")
    async def create_session(request: Request):
        body = await request.body()
        if body:
            doc = json.loads(body)
            config = ScenarioConfig.from_json(doc)
        elif default_config is not None:
            config = default_config
        else:
            raise HTTPException(
                422, detail={"error": "BadRequest", "reason": "config required"}
            )
        try:
            world, runlog, rng = initialize(config)
        except SelectionInfeasible as exc:
            raise HTTPException(
                422,
                detail={"error": "SelectionInfeasible", "reason": str(exc)},
            )
        session = Session(
            session_id=uuid.uuid4().hex,
            config=config,
            world=world,
            runlog=runlog,
            rng=rng,
        )
        sessions[session.session_id] = session
        return {"session_id": session.session_id, "lifecycle": session.lifecycle}

    @app.get("/sessions/{session_id}/state")
    async def get_state(session_id: str):
        return _snapshot(_get(session_id))

    @app.post("/sessions/{session_id}/failure")
    async def inject_failure(session_id: str, request: Request):
        session = _get(session_id)
        body = await request.body()
        doc = json.loads(body) if body else {}
        async with session.lock:
            if session.lifecycle == "awaiting_operator":
                raise HTTPException(
                    409,
                    detail={
                        "error": "Conflict",
                        "reason": "a failure is already awaiting a decision",
                    },
                )
            if session.lifecycle != "running":
                raise HTTPException(
                    409, detail={"error": "Conflict", "reason": session.lifecycle}
                )
            world = session.world
            active_ids = list(world.placement.ids())
            if not active_ids:
                raise HTTPException(
                    409, detail={"error": "Conflict", "reason": "no active robots"}
                )
            t = doc.get("t")
            if t is None:
                t = float(session.rng.uniform(session.clock, session.config.horizon))
            t = float(t)
            if not session.clock <= t < session.config.horizon:
                raise HTTPException(
                    422,
                    detail={
                        "error": "BadRequest",
                        "reason": "t outside [clock, horizon)",
                    },
                )
            robot_id = doc.get("robot_id")
            if robot_id is None:
                active = [
                    (world.pool[rid], world.activations[rid]) for rid in active_ids
                ]
                robot_id = roulette_pick(active, t, session.rng)
                if robot_id is None:  # nobody can have failed yet
                    robot_id = active_ids[0]
            robot_id = int(robot_id)
            if robot_id not in world.placement:
                raise HTTPException(
                    404, detail={"error": "NotFound", "reason": "robot not deployed"}
                )
            failed_pos = world.placement.position(robot_id)
            session.runlog.append(
                "FailureInjected",
                t,
                {"robot_id": robot_id, "position": list(failed_pos)},
            )
            grid = world.grid
            value = coverage(
                world.placement.without(robot_id),
                world.pool,
                grid,
                CellSet.all(grid),
            )
            session.runlog.append(
                "CoverageSample", t, {"label": "post_failure", "value": value}
            )
            detected = min(
                t + session.config.detection_delay,
                session.config.horizon * (1.0 - 1e-9),
            )
            session.runlog.append("FailureDetected", detected, {"robot_id": robot_id})
            session.pending = {
                "robot_id": robot_id,
                "t": t,
                "detected_t": detected,
                "position": list(failed_pos),
            }
            session.lifecycle = "awaiting_operator"
            return {
                "robot_id": robot_id,
                "t": t,
                "detected_t": detected,
                "lifecycle": session.lifecycle,
            }

    @app.get("/sessions/{session_id}/preview")
    async def preview(session_id: str, L: float, gamma: float):
        session = _get(session_id)
        _check_knobs(L, gamma)
        async with session.lock:
            if session.lifecycle != "awaiting_operator" or session.pending is None:
                raise HTTPException(409, detail={"error": "NoPendingFailure"})
            return _preview_doc(session, L, gamma)

    @app.post("/sessions/{session_id}/commit")
    async def commit(session_id: str, request: Request):
        session = _get(session_id)
        doc = json.loads(await request.body())
        L, gamma = float(doc["L"]), float(doc["gamma"])
        _check_knobs(L, gamma)
        async with session.lock:
            if session.lifecycle != "awaiting_operator" or session.pending is None:
                raise HTTPException(409, detail={"error": "NoPendingFailure"})
            pending = session.pending
            result = apply_failure(
                session.world,
                session.runlog,
                session.config,
                pending["robot_id"],
                pending["detected_t"],
                L,
                gamma,
                source="operator",
            )
            session.clock = pending["detected_t"]
            session.pending = None
            session.lifecycle = (
                "running" if session.world.placement.ids() else "finished"
            )
            doc = result.to_json()
            doc["lifecycle"] = session.lifecycle
            return doc

    @app.get("/sessions/{session_id}/events")
    async def stream_events(session_id: str, replay: bool = False):
        """Ordered event stream; with replay=true it closes once caught
        up instead of tailing the live session."""
        session = _get(session_id)

        async def gen():
            sent = 0
            while True:
                events = session.runlog.events
                while sent < len(events):
                    payload = json.dumps(
                        events[sent].to_json(), sort_keys=True, separators=(",", ":")
                    )
                    yield f"data: {payload}\n\n"
                    sent += 1
                if replay or session.lifecycle == "finished":
                    return
                await asyncio.sleep(0.02)

        return StreamingResponse(gen(), media_type="text/event-stream")

    return app
