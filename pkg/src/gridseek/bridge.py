"""Client side of the external-detector wire protocol, and the projection
from pixel detections to grid cells.

Wire format: UTF-8 JSON, one object per line, over a TCP stream or the
stdio pipes of a spawned process. Lines above 16 MiB are rejected.

  request:  {"id": str, "lang": str, "rgb": str, "depth": str|null,
             "intrinsics": {"fx", "fy", "cx", "cy"}}
  response: {"id": str, "detected": bool, "u": num?, "v": num?,
             "depth_m": num?, "confidence": num}

``rgb``/``depth`` are opaque image references: a file path, or an inline
payload by mutual configuration (the simulation harness sends synthetic
``sim://scene/step`` ids that scripted services key on). Unknown fields are
ignored on both sides. Responses are matched to requests by id; ids are
never reused on a connection.

Endpoints: ``tcp:HOST:PORT`` or ``exec:COMMAND`` (spawned, stdio-framed).
"""
from __future__ import annotations

import json
import logging
import math
import os
import selectors
import shlex
import socket
import subprocess
from dataclasses import dataclass
from timeit import default_timer as timer
from typing import Optional

from .grid import Cell, OccupancyGrid, RobotPose, fan_region
from .observation import SensorObservation

log = logging.getLogger(__name__)

MAX_LINE_BYTES = 16 * 1024 * 1024


class TransportError(RuntimeError):
    """Wire-protocol failure. ``category`` is one of: timeout, malformed,
    id-mismatch, oversize, closed, connect."""

    def __init__(self, category: str, message: str):
        super().__init__(f"{category}: {message}")
        self.category = category


class ProjectionError(ValueError):
    pass


@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")


@dataclass(frozen=True)
class CameraModel:
    intrinsics: Intrinsics
    # Camera yaw relative to the robot's forward axis, positive toward the
    # robot's right.
    mounting_yaw_deg: float = 0.0


@dataclass(frozen=True)
class DetectionRequest:
    id: str
    lang: str
    rgb: str
    intrinsics: Intrinsics
    depth: Optional[str] = None

    def __post_init__(self):
        if not self.lang:
            raise ValueError("language must be nonempty")

    def to_json_line(self) -> bytes:
        payload = {
            "id": self.id,
            "lang": self.lang,
            "rgb": self.rgb,
            "depth": self.depth,
            "intrinsics": {
                "fx": self.intrinsics.fx,
                "fy": self.intrinsics.fy,
                "cx": self.intrinsics.cx,
                "cy": self.intrinsics.cy,
            },
        }
        return (json.dumps(payload) + "\n").encode("utf-8")

    @classmethod
    def from_json_line(cls, line: bytes) -> "DetectionRequest":
        data = _parse_line(line)
        try:
            intr = data["intrinsics"]
            return cls(
                id=str(data["id"]),
                lang=str(data["lang"]),
                rgb=str(data["rgb"]),
                depth=None if data.get("depth") is None else str(data["depth"]),
                intrinsics=Intrinsics(
                    fx=float(intr["fx"]), fy=float(intr["fy"]),
                    cx=float(intr["cx"]), cy=float(intr["cy"]),
                ),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise TransportError("malformed", f"bad request fields: {e}")


@dataclass(frozen=True)
class DetectionResponse:
    id: str
    detected: bool
    confidence: float
    u: Optional[float] = None
    v: Optional[float] = None
    depth_m: Optional[float] = None

    def __post_init__(self):
        if self.confidence < 0:
            raise ValueError("confidence must be nonnegative")
        if self.detected and (self.u is None or self.v is None or self.depth_m is None):
            raise ValueError("detected responses must carry u, v and depth_m")
        if not self.detected and not (self.u is None and self.v is None and self.depth_m is None):
            raise ValueError("non-detections must not carry centroid or depth")

    def to_json_line(self) -> bytes:
        payload: dict = {"id": self.id, "detected": self.detected, "confidence": self.confidence}
        if self.detected:
            payload.update({"u": self.u, "v": self.v, "depth_m": self.depth_m})
        return (json.dumps(payload) + "\n").encode("utf-8")

    @classmethod
    def from_json_line(cls, line: bytes) -> "DetectionResponse":
        data = _parse_line(line)
        try:
            detected = bool(data["detected"])
            return cls(
                id=str(data["id"]),
                detected=detected,
                confidence=float(data["confidence"]),
                u=float(data["u"]) if detected else None,
                v=float(data["v"]) if detected else None,
                depth_m=float(data["depth_m"]) if detected else None,
            )
        except (KeyError, TypeError, ValueError) as e:
            raise TransportError("malformed", f"bad response fields: {e}")


def _parse_line(line: bytes) -> dict:
    if len(line) > MAX_LINE_BYTES:
        raise TransportError("oversize", f"line of {len(line)} bytes exceeds {MAX_LINE_BYTES}")
    try:
        data = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise TransportError("malformed", f"not a JSON line: {e}")
    if not isinstance(data, dict):
        raise TransportError("malformed", "payload is not an object")
    return data


# -- transports ----------------------------------------------------------


class _TcpTransport:
    def __init__(self, host: str, port: int, timeout: float):
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as e:
            raise TransportError("connect", f"cannot reach {host}:{port}: {e}")
        self._buf = b""

    def send_line(self, line: bytes) -> None:
        try:
            self._sock.sendall(line)
        except OSError as e:
            raise TransportError("closed", f"send failed: {e}")

    def recv_line(self, timeout: float) -> bytes:
        deadline = timer() + timeout
        while b"\n" not in self._buf:
            if len(self._buf) > MAX_LINE_BYTES:
                raise TransportError("oversize", "peer sent an overlong line")
            remaining = deadline - timer()
            if remaining <= 0:
                raise TransportError("timeout", f"no response line within {timeout}s")
            self._sock.settimeout(remaining)
            try:
                chunk = self._sock.recv(65536)
            except socket.timeout:
                raise TransportError("timeout", f"no response line within {timeout}s")
            except OSError as e:
                raise TransportError("closed", f"recv failed: {e}")
            if not chunk:
                raise TransportError("closed", "peer closed the connection")
            self._buf += chunk
        line, self._buf = self._buf.split(b"\n", 1)
        return line

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


class _StdioTransport:
    def __init__(self, command: str):
        try:
            self._proc = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
            )
        except OSError as e:
            raise TransportError("connect", f"cannot spawn {command!r}: {e}")
        self._buf = b""
        self._sel = selectors.DefaultSelector()
        os.set_blocking(self._proc.stdout.fileno(), False)
        self._sel.register(self._proc.stdout, selectors.EVENT_READ)

    def send_line(self, line: bytes) -> None:
        if self._proc.poll() is not None:
            raise TransportError("closed", "detector process exited")
        try:
            self._proc.stdin.write(line)
            self._proc.stdin.flush()
        except (OSError, ValueError) as e:
            raise TransportError("closed", f"send failed: {e}")

    def recv_line(self, timeout: float) -> bytes:
        deadline = timer() + timeout
        while b"\n" not in self._buf:
            if len(self._buf) > MAX_LINE_BYTES:
                raise TransportError("oversize", "peer sent an overlong line")
            remaining = deadline - timer()
            if remaining <= 0:
                raise TransportError("timeout", f"no response line within {timeout}s")
            if not self._sel.select(remaining):
                continue
            chunk = self._proc.stdout.read(65536)
            if chunk == b"":
                raise TransportError("closed", "detector process closed stdout")
            if chunk:
                self._buf += chunk
        line, self._buf = self._buf.split(b"\n", 1)
        return line

    def close(self) -> None:
        self._sel.close()
        if self._proc.poll() is None:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()


class DetectorClient:
    """One connection to a detector service. Single-threaded; one episode
    per client. Requests may be pipelined; responses are matched by id."""

    def __init__(self, endpoint: str, timeout: float = 10.0):
        self.endpoint = endpoint
        self.timeout = timeout
        kind, _, rest = endpoint.partition(":")
        if kind == "tcp":
            host, _, port = rest.rpartition(":")
            if not host or not port.isdigit():
                raise ValueError(f"bad tcp endpoint {endpoint!r}, expected tcp:HOST:PORT")
            self._transport = _TcpTransport(host, int(port), timeout)
        elif kind == "exec":
            self._transport = _StdioTransport(rest)
        else:
            raise ValueError(f"unknown endpoint scheme in {endpoint!r}, expected tcp: or exec:")
        self._sent_ids: set[str] = set()
        self._pending: dict[str, DetectionResponse] = {}

    def send_request(self, req: DetectionRequest) -> None:
        if req.id in self._sent_ids:
            raise TransportError("id-mismatch", f"request id {req.id!r} already used on this connection")
        self._sent_ids.add(req.id)
        line = req.to_json_line()
        if len(line) > MAX_LINE_BYTES:
            raise TransportError("oversize", f"request of {len(line)} bytes exceeds {MAX_LINE_BYTES}")
        self._transport.send_line(line)

    def await_response(self, request_id: str, timeout: Optional[float] = None) -> DetectionResponse:
        if request_id in self._pending:
            return self._pending.pop(request_id)
        if request_id not in self._sent_ids:
            raise TransportError("id-mismatch", f"no request with id {request_id!r} was sent")
        deadline = timer() + (timeout if timeout is not None else self.timeout)
        while True:
            remaining = max(deadline - timer(), 1e-6)
            resp = DetectionResponse.from_json_line(self._transport.recv_line(remaining))
            if resp.id == request_id:
                return resp
            if resp.id in self._sent_ids and resp.id not in self._pending:
                self._pending[resp.id] = resp
                continue
            raise TransportError("id-mismatch", f"unsolicited response id {resp.id!r}")

    def query(self, req: DetectionRequest, timeout: Optional[float] = None) -> DetectionResponse:
        self.send_request(req)
        return self.await_response(req.id, timeout)

    def close(self) -> None:
        self._transport.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


# -- projection ----------------------------------------------------------


def _right_vector(forward: Cell) -> Cell:
    fx, fy = forward
    return (-fy, fx)


def project_detection(
    resp: DetectionResponse,
    cam: CameraModel,
    robot: RobotPose,
    grid: OccupancyGrid,
    view: frozenset[Cell],
) -> SensorObservation:
    """Turn a pixel detection into a grid observation.

    The ray through the centroid pixel at the reported mean depth gives a
    camera-frame point; that point is rotated into the robot frame and
    snapped to the containing cell. Detections landing outside the modeled
    sensing region become NULL: the observation space is {NULL} u V, and
    clamping to the nearest in-view cell would distort the geometry.
    """
    if not resp.detected:
        return SensorObservation(None, resp.confidence)
    if resp.depth_m is None or resp.depth_m <= 0:
        raise ProjectionError(f"nonpositive depth {resp.depth_m!r}")
    intr = cam.intrinsics
    lateral_c = (resp.u - intr.cx) / intr.fx * resp.depth_m
    forward_c = resp.depth_m
    yaw = math.radians(cam.mounting_yaw_deg)
    forward_r = forward_c * math.cos(yaw) - lateral_c * math.sin(yaw)
    lateral_r = forward_c * math.sin(yaw) + lateral_c * math.cos(yaw)
    f = robot.orientation.vector
    r = _right_vector(f)
    dx_cells = (forward_r * f[0] + lateral_r * r[0]) / grid.cell_size_m
    dy_cells = (forward_r * f[1] + lateral_r * r[1]) / grid.cell_size_m
    cell = (math.floor(robot.x + dx_cells + 0.5), math.floor(robot.y + dy_cells + 0.5))
    if cell in view:
        return SensorObservation(cell, resp.confidence)
    log.debug("detection projected to %s outside the view; treating as NULL", cell)
    return SensorObservation(None, resp.confidence)


def detection_for_cell(
    cell: Cell,
    cam: CameraModel,
    robot: RobotPose,
    grid: OccupancyGrid,
    confidence: float,
    response_id: str = "scripted",
) -> DetectionResponse:
    """Inverse of :func:`project_detection` for a cell center: the pixel and
    depth a detector would report for an object there. Used to script mock
    services against simulated scenes."""
    f = robot.orientation.vector
    r = _right_vector(f)
    dx = (cell[0] - robot.x) * grid.cell_size_m
    dy = (cell[1] - robot.y) * grid.cell_size_m
    forward_r = dx * f[0] + dy * f[1]
    lateral_r = dx * r[0] + dy * r[1]
    yaw = math.radians(cam.mounting_yaw_deg)
    forward_c = forward_r * math.cos(yaw) + lateral_r * math.sin(yaw)
    lateral_c = -forward_r * math.sin(yaw) + lateral_r * math.cos(yaw)
    if forward_c <= 0:
        raise ProjectionError(f"cell {cell} is behind the camera")
    intr = cam.intrinsics
    u = intr.cx + intr.fx * lateral_c / forward_c
    return DetectionResponse(
        id=response_id,
        detected=True,
        confidence=confidence,
        u=u,
        v=intr.cy,
        depth_m=forward_c,
    )


class BridgeDetector:
    """Adapter the episode loop uses for detector kind "bridge"."""

    def __init__(self, client: DetectorClient, camera: CameraModel, episode_tag: str = "ep"):
        self.client = client
        self.camera = camera
        self.episode_tag = episode_tag

    def observe(self, scene, robot: RobotPose, view: frozenset[Cell], step: int) -> SensorObservation:
        req = DetectionRequest(
            id=f"{self.episode_tag}-{step}",
            lang=scene.language,
            rgb=f"sim://{scene.name}/{step}",
            intrinsics=self.camera.intrinsics,
        )
        resp = self.client.query(req)
        return project_detection(resp, self.camera, robot, scene.grid, view)
