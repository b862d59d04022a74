"""Bidirectional message channel between the simulator and an operator UI.

Wire format: each message is one UTF-8 JSON object carrying a ``type`` field,
framed as ``<decimal byte length>\\n<json>\\n``.  The schema is documented
field-by-field in docs/protocol.md.  Outbound, the server streams a state
snapshot per tick; inbound, it accepts steering for the user object and
mark-hostile requests that feed the online-retraining loop.  Malformed input
earns an error message, never a dropped session; slow readers lose their
oldest queued snapshots first, so what they do see is always in tick order.
"""

from __future__ import annotations

import json
import socket
import threading
from collections import deque
from dataclasses import dataclass

from .dataset import Observation
from .netbank import NetbankError, NetworkBank
from .simulator import Scenario, Simulation, SteerCommand

MAX_FRAME_BYTES = 1 << 20
SEND_QUEUE_LIMIT = 64


class ProtocolError(Exception):
    pass


@dataclass(frozen=True)
class ObjectState:
    index: int
    x: float
    y: float
    hostility: float


@dataclass(frozen=True)
class StateSnapshot:
    tick: int
    objects: tuple[ObjectState, ...]
    alarms: tuple[int, ...]
    model_version: int


@dataclass(frozen=True)
class MarkHostile:
    index: int
    tick_window: tuple[int, int]


@dataclass(frozen=True)
class RetrainStatus:
    n_objects: int
    version: int
    phase: str  # idle | training | swapped

    def __post_init__(self):
        if self.phase not in ("idle", "training", "swapped"):
            raise ProtocolError(f"unknown retrain phase {self.phase!r}")


@dataclass(frozen=True)
class ErrorMessage:
    code: str
    text: str


Message = StateSnapshot | SteerCommand | MarkHostile | RetrainStatus | ErrorMessage


def message_to_payload(msg: Message) -> dict:
    if isinstance(msg, StateSnapshot):
        return {
            "type": "state",
            "tick": msg.tick,
            "objects": [
                {"index": o.index, "x": o.x, "y": o.y, "hostility": o.hostility}
                for o in msg.objects
            ],
            "alarms": list(msg.alarms),
            "model_version": msg.model_version,
        }
    if isinstance(msg, SteerCommand):
        return {"type": "steer", "heading_degrees": msg.heading_degrees, "speed": msg.speed}
    if isinstance(msg, MarkHostile):
        return {"type": "mark_hostile", "index": msg.index, "tick_window": list(msg.tick_window)}
    if isinstance(msg, RetrainStatus):
        return {"type": "retrain_status", "n_objects": msg.n_objects,
                "version": msg.version, "phase": msg.phase}
    if isinstance(msg, ErrorMessage):
        return {"type": "error", "code": msg.code, "text": msg.text}
    raise ProtocolError(f"cannot serialize {type(msg).__name__}")


def message_from_payload(payload) -> Message:
    if not isinstance(payload, dict):
        raise ProtocolError("message must be a JSON object")
    kind = payload.get("type")
    try:
        if kind == "state":
            return StateSnapshot(
                tick=int(payload["tick"]),
                objects=tuple(
                    ObjectState(index=int(o["index"]), x=float(o["x"]),
                                y=float(o["y"]), hostility=float(o["hostility"]))
                    for o in payload["objects"]
                ),
                alarms=tuple(int(a) for a in payload["alarms"]),
                model_version=int(payload["model_version"]),
            )
        if kind == "steer":
            return SteerCommand(heading_degrees=float(payload["heading_degrees"]),
                                speed=float(payload["speed"]))
        if kind == "mark_hostile":
            window = payload["tick_window"]
            if len(window) != 2:
                raise ProtocolError("tick_window must be [start, end]")
            return MarkHostile(index=int(payload["index"]),
                               tick_window=(int(window[0]), int(window[1])))
        if kind == "retrain_status":
            return RetrainStatus(n_objects=int(payload["n_objects"]),
                                 version=int(payload["version"]),
                                 phase=payload["phase"])
        if kind == "error":
            return ErrorMessage(code=str(payload["code"]), text=str(payload["text"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"malformed {kind!r} message: {exc}") from exc
    raise ProtocolError(f"unknown message type {kind!r}")


def encode_message(msg: Message) -> bytes:
    body = json.dumps(message_to_payload(msg), sort_keys=True).encode("utf-8")
    return str(len(body)).encode("ascii") + b"\n" + body + b"\n"


def decode_message(data: bytes) -> Message:
    try:
        payload = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"frame is not valid JSON: {exc}") from exc
    return message_from_payload(payload)


class FrameReader:
    """Incremental reader of length-delimited frames from a socket."""

    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._buffer = b""

    def _fill(self) -> bool:
        chunk = self._sock.recv(4096)
        if not chunk:
            return False
        self._buffer += chunk
        return True

    def read_frame(self) -> bytes | None:
        """Next frame body, or None on clean end of stream.

        Raises ProtocolError when the length prefix itself is unreadable;
        after that the stream cannot be resynchronised.
        """
        while b"\n" not in self._buffer:
            if not self._fill():
                if self._buffer:
                    raise ProtocolError("stream ended inside a length prefix")
                return None
        prefix, rest = self._buffer.split(b"\n", 1)
        if not prefix.isdigit():
            raise ProtocolError(f"bad length prefix {prefix[:32]!r}")
        length = int(prefix)
        if length > MAX_FRAME_BYTES:
            raise ProtocolError(f"frame of {length} bytes exceeds the {MAX_FRAME_BYTES} limit")
        self._buffer = rest
        while len(self._buffer) < length + 1:
            if not self._fill():
                raise ProtocolError("stream ended inside a frame")
        body = self._buffer[:length]
        if self._buffer[length:length + 1] != b"\n":
            raise ProtocolError("frame missing trailing newline")
        self._buffer = self._buffer[length + 1:]
        return body


class _ClientSession:
    """One connected operator: a send queue drained by a writer thread."""

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.queue: deque[Message] = deque(maxlen=SEND_QUEUE_LIMIT)  # drop-oldest
        self.lock = threading.Lock()
        self.ready = threading.Condition(self.lock)
        self.closed = False

    def enqueue(self, msg: Message):
        with self.ready:
            self.queue.append(msg)
            self.ready.notify()

    def next_message(self) -> Message | None:
        with self.ready:
            while not self.queue and not self.closed:
                self.ready.wait(timeout=0.5)
            if self.closed and not self.queue:
                return None
            return self.queue.popleft()

    def close(self):
        with self.ready:
            self.closed = True
            self.ready.notify_all()
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


class SimulationService:
    """Serves one scenario over TCP: snapshots out, commands in.

    The tick loop is the only writer of simulation state.  The latest steer
    command is re-applied every tick until replaced, so the user object holds
    course.  Mark-hostile requests retrain in a worker thread while serving
    continues on the old model; the swap happens between ticks.
    """

    def __init__(self, scenario: Scenario, bank: NetworkBank,
                 threshold: float = 0.5, tick_seconds: float | None = None):
        self.scenario = scenario
        self.bank = bank
        self.threshold = threshold
        self.tick_seconds = scenario.tick_interval if tick_seconds is None else tick_seconds
        self.sim = Simulation(scenario, bank, threshold)
        self._command: SteerCommand | None = None
        self._command_lock = threading.Lock()
        self._clients: list[_ClientSession] = []
        self._clients_lock = threading.Lock()
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self._server_sock: socket.socket | None = None
        self._retrain_busy = threading.Lock()
        self.address: tuple[str, int] | None = None

    # -- lifecycle -----------------------------------------------------------

    def start(self, bind_address: tuple[str, int]):
        if self._server_sock is not None:
            raise ProtocolError("service already started")
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind(bind_address)
        sock.listen()
        self._server_sock = sock
        self.address = sock.getsockname()
        for target in (self._tick_loop, self._accept_loop):
            thread = threading.Thread(target=target, daemon=True)
            thread.start()
            self._threads.append(thread)

    def stop(self):
        self._stop.set()
        if self._server_sock is not None:
            try:
                self._server_sock.close()
            except OSError:
                pass
        with self._clients_lock:
            clients = list(self._clients)
        for client in clients:
            client.close()
        for thread in self._threads:
            thread.join(timeout=5.0)

    def serve_forever(self, bind_address: tuple[str, int]):
        self.start(bind_address)
        try:
            while not self._stop.is_set():
                self._stop.wait(timeout=1.0)
        finally:
            self.stop()

    # -- broadcast ------------------------------------------------------------

    def _snapshot(self) -> StateSnapshot:
        state = self.sim.state
        version = self.bank.select(self.scenario.n_objects).version
        return StateSnapshot(
            tick=state.tick,
            objects=tuple(
                ObjectState(index=v + 1, x=p.x, y=p.y, hostility=state.last_prediction[v])
                for v, p in enumerate(state.positions)
            ),
            alarms=tuple(sorted(state.alarms)),
            model_version=version,
        )

    def _broadcast(self, msg: Message):
        with self._clients_lock:
            clients = list(self._clients)
        for client in clients:
            client.enqueue(msg)

    def _tick_loop(self):
        while not self._stop.is_set():
            with self._command_lock:
                command = self._command
            self.sim.step(command)
            self._broadcast(self._snapshot())
            self._stop.wait(timeout=self.tick_seconds)

    # -- client handling --------------------------------------------------------

    def _accept_loop(self):
        assert self._server_sock is not None
        while not self._stop.is_set():
            try:
                sock, _ = self._server_sock.accept()
            except OSError:
                return
            client = _ClientSession(sock)
            with self._clients_lock:
                self._clients.append(client)
            if self.sim.log.entries:
                client.enqueue(self._snapshot())
            for target in (self._writer_loop, self._reader_loop):
                thread = threading.Thread(target=target, args=(client,), daemon=True)
                thread.start()
                self._threads.append(thread)

    def _drop(self, client: _ClientSession):
        with self._clients_lock:
            if client in self._clients:
                self._clients.remove(client)
        client.close()

    def _writer_loop(self, client: _ClientSession):
        while not self._stop.is_set():
            msg = client.next_message()
            if msg is None:
                return
            try:
                client.sock.sendall(encode_message(msg))
            except OSError:
                self._drop(client)
                return

    def _reader_loop(self, client: _ClientSession):
        reader = FrameReader(client.sock)
        while not self._stop.is_set():
            try:
                frame = reader.read_frame()
            except (ProtocolError, OSError) as exc:
                if isinstance(exc, ProtocolError):
                    client.enqueue(ErrorMessage(code="frame", text=str(exc)))
                self._drop(client)
                return
            if frame is None:
                self._drop(client)
                return
            try:
                msg = decode_message(frame)
            except ProtocolError as exc:
                client.enqueue(ErrorMessage(code="parse", text=str(exc)))
                continue  # session preserved
            self._dispatch(msg, client)

    def _dispatch(self, msg: Message, client: _ClientSession):
        if isinstance(msg, SteerCommand):
            if self.scenario.user_object() is None:
                client.enqueue(ErrorMessage(code="no_user_object",
                                            text="this scenario has no user-steered object"))
                return
            with self._command_lock:
                self._command = msg
        elif isinstance(msg, MarkHostile):
            self._start_retrain(msg, client)
        else:
            client.enqueue(ErrorMessage(
                code="unexpected",
                text=f"clients may send steer or mark_hostile, not {type(msg).__name__}",
            ))

    # -- online retraining --------------------------------------------------------

    def _event_observations(self, mark: MarkHostile) -> tuple[Observation, ...]:
        start, end = mark.tick_window
        n = self.scenario.n_objects
        if not 1 <= mark.index <= n:
            raise ProtocolError(f"object index {mark.index} outside 1..{n}")
        entries = [e for e in self.sim.log.entries if start <= e.tick <= end]
        if not entries:
            raise ProtocolError(f"no logged ticks inside window [{start}, {end}]")
        return tuple(
            Observation(
                locations=e.positions,
                hostility=tuple(1.0 if v == mark.index else 0.0 for v in range(1, n + 1)),
            )
            for e in entries
        )

    def _start_retrain(self, mark: MarkHostile, client: _ClientSession):
        try:
            observations = self._event_observations(mark)
        except ProtocolError as exc:
            client.enqueue(ErrorMessage(code="mark_hostile", text=str(exc)))
            return
        if not self._retrain_busy.acquire(blocking=False):
            client.enqueue(ErrorMessage(code="retrain_busy", text="a retrain is already running"))
            return
        n = self.scenario.n_objects
        current = self.bank.select(n).version
        self._broadcast(RetrainStatus(n_objects=n, version=current, phase="training"))

        def worker():
            try:
                record = self.bank.retrain_from_event(n, observations)
                self._broadcast(RetrainStatus(n_objects=n, version=record.version, phase="swapped"))
            except NetbankError as exc:
                self._broadcast(ErrorMessage(code="retrain_failed", text=str(exc)))
                self._broadcast(RetrainStatus(n_objects=n, version=current, phase="idle"))
            finally:
                self._retrain_busy.release()

        thread = threading.Thread(target=worker, daemon=True)
        thread.start()
        self._threads.append(thread)


def serve(scenario: Scenario, bank: NetworkBank, bind_address: tuple[str, int],
          threshold: float = 0.5, tick_seconds: float | None = None):
    """Run the service until interrupted (blocking entry point for the CLI)."""
    service = SimulationService(scenario, bank, threshold, tick_seconds)
    service.serve_forever(bind_address)
