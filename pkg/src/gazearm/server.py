"""WebSocket service exposing a live manual-mode session (protocol v1).

One session at a time; a second concurrent client gets a busy notice and is
closed.  Outbound: state snapshots at a fixed rate plus event mirrors.
Inbound: gaze samples and mode toggles only — a client can never command a
pose directly.  See docs/protocol.md.
"""

from __future__ import annotations

import asyncio
import errno
import json

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .gazefilter import GazeSample
from .harness import ManualSession, Timeout
from .scene import NoiseModel

PROTOCOL_VERSION = 1
SNAPSHOT_HZ = 30.0


class AddressInUse(Exception):
    pass


def _msg(kind: str, **payload) -> str:
    d = {"v": PROTOCOL_VERSION, "kind": kind}
    d.update(payload)
    return json.dumps(d, sort_keys=True, separators=(",", ":"))


def handle_message(session: ManualSession, raw: str) -> str | None:
    """Apply one inbound client message; returns an error/ack message or None.

    Malformed messages are rejected but never kill the connection.
    """
    try:
        d = json.loads(raw)
        if d.get("v") != PROTOCOL_VERSION:
            return _msg("error", error="MalformedMessage",
                        detail=f"unsupported protocol version {d.get('v')!r}")
        kind = d.get("kind")
        if kind == "gaze":
            s = d["sample"]
            sample = GazeSample(float(s["t"]), float(s["u"]), float(s["v"]),
                                bool(s.get("left_open", True)),
                                bool(s.get("right_open", True)),
                                bool(s.get("valid", True)))
            try:
                session.feed(sample)
            except Timeout as e:
                return _msg("timeout", detail=str(e))
            return None
        if kind == "toggle":
            t = float(d.get("t", session.last_t))
            session.mode.toggle_manual(t)
            session.log.emit(max(t, session.last_t), "mode",
                             mode=session.mode.state.mode)
            return _msg("mode", mode=session.mode.state.mode)
        return _msg("error", error="MalformedMessage",
                    detail=f"unknown kind {kind!r}")
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as e:
        return _msg("error", error="MalformedMessage", detail=str(e))


def create_app(seed: int = 0, noise: NoiseModel | None = None,
               timeout_s: float = 300.0, snapshot_hz: float = SNAPSHOT_HZ) -> FastAPI:
    app = FastAPI()
    app.state.busy = False
    app.state.last_log = None

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        if app.state.busy:
            await ws.send_text(_msg("busy", detail="another session is active"))
            await ws.close()
            return
        app.state.busy = True
        session = ManualSession(seed=seed, noise=noise, timeout_s=timeout_s)
        app.state.session = session
        interval = 1.0 / snapshot_hz

        async def snapshot_loop():
            while True:
                await ws.send_text(json.dumps(session.snapshot(), sort_keys=True,
                                              separators=(",", ":")))
                await asyncio.sleep(interval)

        sender = asyncio.ensure_future(snapshot_loop())
        try:
            await ws.send_text(_msg("hello", seed=seed, snapshot_hz=snapshot_hz,
                                    timeout_s=timeout_s))
            while True:
                raw = await ws.receive_text()
                reply = handle_message(session, raw)
                if reply is not None:
                    await ws.send_text(reply)
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            app.state.busy = False
            app.state.last_log = session.log

    return app


def serve(address: str, seed: int = 0, noise: NoiseModel | None = None,
          timeout_s: float = 300.0):
    """Run the service on "host:port" until interrupted."""
    import uvicorn
    host, _, port = address.rpartition(":")
    host = host or "127.0.0.1"
    app = create_app(seed=seed, noise=noise, timeout_s=timeout_s)
    try:
        uvicorn.run(app, host=host, port=int(port), log_level="warning")
    except OSError as e:
        if e.errno == errno.EADDRINUSE:
            raise AddressInUse(address) from e
        raise
