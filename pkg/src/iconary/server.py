"""Live game service: many concurrent sessions, each serialized through
its own lock, exposed over two transports that speak the same protocol:

* newline-delimited JSON over TCP (one message per line), and
* a WebSocket endpoint carrying one JSON message per frame, plus a small
  read-only HTTP surface for the icon manifest, icon art, and finished
  games (see docs/protocol.md).

Agent players run off the session's critical path: their moves are
computed outside the lock and injected as ordinary messages.
"""

from __future__ import annotations

import asyncio
import datetime as _dt
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import FileResponse, PlainTextResponse, Response

from . import schema
from .agents import AlignmentModel, BaselineDrawer, BaselineGuesser, diversify_drawing
from .core import IconLibrary, Phrase, make_phrase
from .decoding import GuessConstraints, update_constraints
from .session import (
    Outbound,
    Phase,
    Session,
    new_session,
    session_record,
    session_step,
)

AGENT_GUESSES_PER_DRAWING = 5


@dataclass
class SessionBox:
    """One session plus its transport bookkeeping."""

    session: Session
    lock: asyncio.Lock = field(default_factory=asyncio.Lock)
    connections: dict[str, Any] = field(default_factory=dict)  # role -> transport sink
    watchdog: asyncio.Task | None = None
    agent_task: asyncio.Task | None = None
    guess_constraints: GuessConstraints | None = None
    agent_guesses_left: int = 0
    persisted: bool = False


class GameServer:
    """Session registry and agent/persistence orchestration."""

    def __init__(
        self,
        library: IconLibrary,
        phrases: list[Phrase] | None = None,
        alignment: AlignmentModel | None = None,
        drawer_agent: str = "human",
        guesser_agent: str = "human",
        data_dir: str | None = None,
        time_budget: float = 240.0,
        clock: Callable[[], float] = time.monotonic,
        seed: int = 0,
    ):
        self.library = library
        self.phrases = phrases or [make_phrase("a dog under a tree")]
        self.alignment = alignment
        self.drawer_agent_kind = drawer_agent
        self.guesser_agent_kind = guesser_agent
        self.data_dir = Path(data_dir) if data_dir else None
        self.time_budget = time_budget
        self.clock = clock
        self.seed = seed
        self.boxes: dict[str, SessionBox] = {}
        self._phrase_cursor = 0
        self._drawer = self._build_drawer() if drawer_agent == "baseline" else None
        self._guesser = self._build_guesser() if guesser_agent == "baseline" else None

    def _build_drawer(self) -> BaselineDrawer:
        if self.alignment is None:
            raise ValueError("baseline drawer requires an alignment model")
        return BaselineDrawer(self.alignment, self.library)

    def _build_guesser(self) -> BaselineGuesser:
        if self.alignment is None:
            raise ValueError("baseline guesser requires an alignment model")
        return BaselineGuesser(self.alignment)

    def get_or_create(self, session_id: str) -> SessionBox:
        box = self.boxes.get(session_id)
        if box is None:
            phrase = self.phrases[self._phrase_cursor % len(self.phrases)]
            self._phrase_cursor += 1
            box = SessionBox(
                session=new_session(session_id, phrase, self.library, self.time_budget)
            )
            self.boxes[session_id] = box
        return box

    async def apply(self, box: SessionBox, message: dict) -> list[Outbound]:
        """Run one step under the session's lock and fan out side effects."""
        async with box.lock:
            session, outbound = session_step(
                box.session, message, self.clock(), self.alignment
            )
            box.session = session
        await self._after_step(box, outbound)
        return outbound

    async def _after_step(self, box: SessionBox, outbound: list[Outbound]) -> None:
        session = box.session
        if session.phase in (Phase.DRAWER_TURN, Phase.GUESSER_TURN):
            if box.watchdog is None and session.deadline is not None:
                box.watchdog = asyncio.create_task(self._watchdog(box))
        if session.phase is Phase.FINISHED:
            self._persist(box)
            if box.watchdog is not None:
                box.watchdog.cancel()
        self._maybe_schedule_agent(box)

    async def _watchdog(self, box: SessionBox) -> None:
        while True:
            session = box.session
            if session.phase is Phase.FINISHED or session.deadline is None:
                return
            delay = max(0.01, session.deadline - self.clock())
            await asyncio.sleep(delay)
            if box.session.phase is Phase.FINISHED:
                return
            if self.clock() >= box.session.deadline:
                outbound = await self.apply(box, {"type": "timeout", "role": "server"})
                await self.deliver(box, outbound)
                return

    def _persist(self, box: SessionBox) -> None:
        if box.persisted or self.data_dir is None:
            return
        record = session_record(box.session)
        day = _dt.date.today().isoformat()
        out_dir = self.data_dir / day
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / f"{record.game_id}.json"
        path.write_text(schema.dumps_game(record) + "\n", encoding="utf-8")
        box.persisted = True

    # -- agent orchestration -------------------------------------------------

    def _maybe_schedule_agent(self, box: SessionBox) -> None:
        session = box.session
        needs_drawer = (
            session.phase is Phase.DRAWER_TURN
            and self._drawer is not None
            and "drawer" not in box.connections
        )
        needs_guesser = (
            session.phase is Phase.GUESSER_TURN
            and self._guesser is not None
            and "guesser" not in box.connections
        )
        if (needs_drawer or needs_guesser) and (box.agent_task is None or box.agent_task.done()):
            box.agent_task = asyncio.create_task(self._agent_turn(box))

    async def _agent_turn(self, box: SessionBox) -> None:
        session = box.session
        if session.phase is Phase.DRAWER_TURN and self._drawer is not None:
            await self._agent_draw(box)
        elif session.phase is Phase.GUESSER_TURN and self._guesser is not None:
            await self._agent_guess(box)

    async def _agent_draw(self, box: SessionBox) -> None:
        session = box.session
        state = session.game_state(self.clock())
        priors = [r.drawing for r in session.rounds]
        loop = asyncio.get_running_loop()
        drawing = await loop.run_in_executor(
            None,
            lambda: diversify_drawing(
                self._drawer, state, priors, seed=self.seed + len(priors)
            ),
        )
        message = {
            "type": "submit_drawing",
            "role": "drawer",
            "drawing": schema.drawing_to_dict(drawing),
        }
        outbound = await self.apply(box, message)
        await self.deliver(box, outbound)
        box.guess_constraints = None  # new drawing: guesser agent re-plans
        box.agent_guesses_left = AGENT_GUESSES_PER_DRAWING
        self._maybe_schedule_agent(box)

    async def _agent_guess(self, box: SessionBox) -> None:
        guesser = self._guesser
        assert guesser is not None
        if box.guess_constraints is None:
            view = box.session.game_state(self.clock()).guesser_view()
            box.guess_constraints = GuessConstraints(
                length=len(view),
                known=tuple(w.text for w in view),
                incorrect=tuple(frozenset() for _ in view),
            )
            box.agent_guesses_left = AGENT_GUESSES_PER_DRAWING
        loop = asyncio.get_running_loop()
        while (
            box.session.phase is Phase.GUESSER_TURN and box.agent_guesses_left > 0
        ):
            drawing = box.session.rounds[-1].drawing
            constraints = box.guess_constraints
            results = await loop.run_in_executor(
                None, lambda: guesser.guess_constrained(drawing, constraints)
            )
            if not results:
                break
            words = results[0].words
            outbound = await self.apply(
                box, {"type": "submit_guess", "role": "guesser", "words": list(words)}
            )
            await self.deliver(box, outbound)
            box.agent_guesses_left -= 1
            feedback = next(
                (o.payload for o in outbound if o.payload.get("type") == "feedback"), None
            )
            if feedback is None:
                break
            box.guess_constraints = update_constraints(
                box.guess_constraints, words, feedback["correct"]
            )
        if box.session.phase is Phase.GUESSER_TURN:
            outbound = await self.apply(box, {"type": "pass_turn", "role": "guesser"})
            await self.deliver(box, outbound)
            self._maybe_schedule_agent(box)

    # -- delivery ------------------------------------------------------------

    async def deliver(
        self, box: SessionBox, outbound: list[Outbound], sender_sink: Any = None
    ) -> None:
        for out in outbound:
            if out.audience == "sender":
                sinks = [sender_sink] if sender_sink is not None else []
            elif out.audience == "both":
                sinks = list(box.connections.values())
            else:
                sink = box.connections.get(out.audience)
                sinks = [sink] if sink is not None else []
            for sink in sinks:
                try:
                    await sink(out.payload)
                except Exception:
                    pass  # a dropped client must not poison the session


# -- TCP transport (newline-delimited JSON) -----------------------------------


async def handle_tcp_client(
    server: GameServer, reader: asyncio.StreamReader, writer: asyncio.StreamWriter
) -> None:
    role: str | None = None
    box: SessionBox | None = None

    async def sink(payload: dict) -> None:
        writer.write((json.dumps(payload, sort_keys=True) + "\n").encode("utf-8"))
        await writer.drain()

    try:
        while True:
            line = await reader.readline()
            if not line:
                break
            try:
                message = json.loads(line)
                if not isinstance(message, dict):
                    raise ValueError("message must be an object")
            except ValueError as e:
                await sink({"type": "error", "message": f"malformed JSON: {e}"})
                continue
            if box is None:
                if message.get("type") != "join" or "session" not in message:
                    await sink({"type": "error", "message": "first message must be a join with a session id"})
                    continue
                box = server.get_or_create(str(message["session"]))
            if role is None and message.get("type") == "join":
                requested = message.get("role")
                message = dict(message)
                outbound = await server.apply(box, message)
                ok = any(o.payload.get("type") == "join" and o.payload.get("ok") for o in outbound)
                if ok:
                    role = str(requested)
                    box.connections[role] = sink
                await server.deliver(box, outbound, sender_sink=sink)
                continue
            message = dict(message)
            message["role"] = role
            outbound = await server.apply(box, message)
            await server.deliver(box, outbound, sender_sink=sink)
    finally:
        if box is not None and role is not None and box.connections.get(role) is sink:
            del box.connections[role]
        writer.close()


async def serve_tcp(server: GameServer, host: str = "127.0.0.1", port: int = 8643):
    return await asyncio.start_server(
        lambda r, w: handle_tcp_client(server, r, w), host, port
    )


# -- HTTP + WebSocket transport ------------------------------------------------


PLACEHOLDER_SVG = """<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 100 100">
<rect x="4" y="4" width="92" height="92" rx="12" fill="#f2f2f2" stroke="#444" stroke-width="3"/>
<text x="50" y="56" font-size="13" text-anchor="middle" font-family="sans-serif" fill="#222">{label}</text>
</svg>"""

ARROW_SVG = """<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 100 100">
<line x1="10" y1="50" x2="74" y2="50" stroke="#222" stroke-width="10" stroke-linecap="round"/>
<polygon points="68,30 98,50 68,70" fill="#222"/>
</svg>"""


def build_http_app(server: GameServer, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="iconary", docs_url=None, redoc_url=None)

    @app.get("/healthz")
    async def healthz() -> dict:
        return {"ok": True, "sessions": len(server.boxes)}

    @app.get("/icons")
    async def icons() -> dict:
        return {
            "icons": [
                {"id": i.id, "name": i.name, "tags": list(i.tags), "art": i.art}
                for i in server.library.icons
            ],
            "arrow_icon_ids": sorted(server.library.arrow_icon_ids),
        }

    @app.get("/icons/{icon_id}.svg")
    async def icon_art(icon_id: str):
        if icon_id not in server.library:
            return PlainTextResponse("unknown icon", status_code=404)
        icon = server.library.get(icon_id)
        if icon.art and Path(icon.art).exists():
            return FileResponse(icon.art, media_type="image/svg+xml")
        svg = ARROW_SVG if server.library.is_arrow(icon_id) else PLACEHOLDER_SVG.format(label=icon.name)
        return Response(svg, media_type="image/svg+xml")

    @app.get("/games/{game_id}")
    async def finished_game(game_id: str):
        box = server.boxes.get(game_id)
        if box is not None and box.session.phase is Phase.FINISHED:
            return json.loads(schema.dumps_game(session_record(box.session)))
        if server.data_dir is not None:
            hits = sorted(server.data_dir.glob(f"*/{game_id}.json"))
            if hits:
                return json.loads(hits[-1].read_text("utf-8"))
        return PlainTextResponse("unknown or unfinished game", status_code=404)

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        role: str | None = None
        box: SessionBox | None = None

        async def sink(payload: dict) -> None:
            await ws.send_text(json.dumps(payload, sort_keys=True))

        try:
            while True:
                try:
                    message = json.loads(await ws.receive_text())
                    if not isinstance(message, dict):
                        raise ValueError("message must be an object")
                except ValueError as e:
                    await sink({"type": "error", "message": f"malformed JSON: {e}"})
                    continue
                if box is None:
                    if message.get("type") != "join" or "session" not in message:
                        await sink({"type": "error", "message": "first message must be a join with a session id"})
                        continue
                    box = server.get_or_create(str(message["session"]))
                if role is None and message.get("type") == "join":
                    outbound = await server.apply(box, dict(message))
                    ok = any(
                        o.payload.get("type") == "join" and o.payload.get("ok")
                        for o in outbound
                    )
                    if ok:
                        role = str(message.get("role"))
                        box.connections[role] = sink
                    await server.deliver(box, outbound, sender_sink=sink)
                    continue
                message = dict(message)
                message["role"] = role
                outbound = await server.apply(box, message)
                await server.deliver(box, outbound, sender_sink=sink)
        except WebSocketDisconnect:
            pass
        finally:
            if box is not None and role is not None and box.connections.get(role) is sink:
                del box.connections[role]

    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


async def run_server(
    server: GameServer,
    host: str = "127.0.0.1",
    http_port: int = 8642,
    tcp_port: int = 8643,
    ui_dir: str | None = None,
) -> None:
    import uvicorn

    tcp = await serve_tcp(server, host, tcp_port)
    config = uvicorn.Config(
        build_http_app(server, ui_dir), host=host, port=http_port, log_level="warning"
    )
    http = uvicorn.Server(config)
    async with tcp:
        await http.serve()
