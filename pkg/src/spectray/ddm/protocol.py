"""Binary wire format for worker/coordinator links.

Each frame is a little-endian u32 length followed by that many bytes: one
u8 message kind plus the payload.  Floats travel as raw IEEE-754 doubles,
so values survive the wire bit for bit; spectral payload width (the bin
count) is fixed per session by the handshake and validated on every frame
that carries a spectrum.

Layouts (all little-endian, offsets after the kind byte):

    HANDSHAKE        u32 version, i32 worker_id, f64 start_nm, f64 end_nm,
                     u32 bins
    RAY              u32 pixel, u32 path_id, u8 depth, u8 kind,
                     u8 flags (bit0 = continuation), u32 crossings,
                     i32 dest, f64 window_lo, f64 t_min, 3f64 origin,
                     3f64 direction, 3f64 entry, bins*f64 throughput
    SHADOW_PROBE     u64 probe_id, i32 asker, i32 dest, u32 hops,
                     f64 t_min, f64 t_light, f64 window_lo, 3f64 origin,
                     3f64 direction
    SHADOW_ANSWER    u64 probe_id, i32 asker, u8 blocked
    PIXEL_CONTRIB    u32 pixel, u32 path_id, bins*f64 value
    OWNERSHIP_UPDATE u32 version, u16 n_add, u16 n_remove, i32 ids...
    STATUS           u32 created, completed, crossings, probe_hops, loads,
                     unloads, u16 n_cells, then per cell i32 id,
                     u32 pending, u8 loaded
    TERMINATE        (empty)
    TERMINATED       (empty)
"""

from __future__ import annotations

import struct
from typing import Optional

import numpy as np

from .records import (
    Handshake,
    OwnershipUpdate,
    PixelContrib,
    ProtocolError,
    RayRecord,
    ShadowAnswer,
    ShadowProbe,
    Status,
    Terminate,
    Terminated,
)

KIND_HANDSHAKE = 1
KIND_RAY = 2
KIND_SHADOW_PROBE = 3
KIND_SHADOW_ANSWER = 4
KIND_PIXEL_CONTRIB = 5
KIND_OWNERSHIP_UPDATE = 6
KIND_STATUS = 7
KIND_TERMINATE = 8
KIND_TERMINATED = 9

_HANDSHAKE = struct.Struct("<IiddI")
_RAY_HEAD = struct.Struct("<IIBBBIiddddd dddddd".replace(" ", ""))
_PROBE = struct.Struct("<QiiIddd dddddd".replace(" ", ""))
_ANSWER = struct.Struct("<QiB")
_CONTRIB_HEAD = struct.Struct("<II")
_OWNERSHIP_HEAD = struct.Struct("<IHH")
_STATUS_HEAD = struct.Struct("<IIIIIIH")
_STATUS_CELL = struct.Struct("<iIB")


def _vec(values: np.ndarray) -> tuple[float, float, float]:
    return float(values[0]), float(values[1]), float(values[2])


def _spectrum_bytes(values: np.ndarray) -> bytes:
    arr = np.ascontiguousarray(values, dtype="<f8")
    return arr.tobytes()


def encode(msg) -> bytes:
    """Serialize one message to a length-prefixed frame."""
    if isinstance(msg, RayRecord):
        body = _RAY_HEAD.pack(
            msg.pixel, msg.path_id, msg.depth, msg.kind,
            1 if msg.continuation else 0, msg.crossings, msg.dest,
            msg.window_lo, msg.t_min,
            *_vec(msg.origin), *_vec(msg.direction), *_vec(msg.entry),
        ) + _spectrum_bytes(msg.throughput)
        kind = KIND_RAY
    elif isinstance(msg, ShadowProbe):
        body = _PROBE.pack(
            msg.probe_id, msg.asker, msg.dest, msg.hops,
            msg.t_min, msg.t_light, msg.window_lo,
            *_vec(msg.origin), *_vec(msg.direction),
        )
        kind = KIND_SHADOW_PROBE
    elif isinstance(msg, ShadowAnswer):
        body = _ANSWER.pack(msg.probe_id, msg.asker, 1 if msg.blocked else 0)
        kind = KIND_SHADOW_ANSWER
    elif isinstance(msg, PixelContrib):
        body = _CONTRIB_HEAD.pack(msg.pixel, msg.path_id) + _spectrum_bytes(msg.value)
        kind = KIND_PIXEL_CONTRIB
    elif isinstance(msg, Status):
        body = _STATUS_HEAD.pack(
            msg.created, msg.completed, msg.crossings, msg.probe_hops,
            msg.loads, msg.unloads, len(msg.cells),
        ) + b"".join(
            _STATUS_CELL.pack(cid, pending, 1 if loaded else 0)
            for cid, pending, loaded in msg.cells
        )
        kind = KIND_STATUS
    elif isinstance(msg, OwnershipUpdate):
        body = _OWNERSHIP_HEAD.pack(msg.version, len(msg.add), len(msg.remove))
        body += struct.pack(f"<{len(msg.add) + len(msg.remove)}i", *msg.add, *msg.remove)
        kind = KIND_OWNERSHIP_UPDATE
    elif isinstance(msg, Handshake):
        body = _HANDSHAKE.pack(
            msg.version, msg.worker_id, msg.start_nm, msg.end_nm, msg.bins
        )
        kind = KIND_HANDSHAKE
    elif isinstance(msg, Terminate):
        body = b""
        kind = KIND_TERMINATE
    elif isinstance(msg, Terminated):
        body = b""
        kind = KIND_TERMINATED
    else:
        raise ProtocolError(f"cannot encode {type(msg).__name__}")
    return struct.pack("<I", len(body) + 1) + bytes([kind]) + body


def _decode_spectrum(payload: bytes, offset: int, bins: Optional[int]) -> np.ndarray:
    width = len(payload) - offset
    if width % 8:
        raise ProtocolError("spectrum payload is not a whole number of doubles")
    count = width // 8
    if bins is not None and count != bins:
        raise ProtocolError(f"frame carries {count} bins, session uses {bins}")
    return np.frombuffer(payload, dtype="<f8", offset=offset).copy()


def decode(frame: bytes, bins: Optional[int] = None):
    """Inverse of :func:`encode` for one de-framed message (kind + payload)."""
    if not frame:
        raise ProtocolError("empty frame")
    kind = frame[0]
    payload = frame[1:]
    try:
        if kind == KIND_RAY:
            (pixel, path_id, depth, ray_kind, flags, crossings, dest,
             window_lo, t_min, ox, oy, oz, dx, dy, dz, ex, ey, ez) = _RAY_HEAD.unpack_from(payload)
            return RayRecord(
                pixel=pixel, path_id=path_id, depth=depth, kind=ray_kind,
                dest=dest, origin=np.array([ox, oy, oz]),
                direction=np.array([dx, dy, dz]),
                throughput=_decode_spectrum(payload, _RAY_HEAD.size, bins),
                t_min=t_min, window_lo=window_lo,
                entry=np.array([ex, ey, ez]), crossings=crossings,
                continuation=bool(flags & 1),
            )
        if kind == KIND_SHADOW_PROBE:
            (probe_id, asker, dest, hops, t_min, t_light, window_lo,
             ox, oy, oz, dx, dy, dz) = _PROBE.unpack(payload)
            return ShadowProbe(
                probe_id=probe_id, asker=asker, dest=dest,
                origin=np.array([ox, oy, oz]), direction=np.array([dx, dy, dz]),
                t_min=t_min, t_light=t_light, window_lo=window_lo, hops=hops,
            )
        if kind == KIND_SHADOW_ANSWER:
            probe_id, asker, blocked = _ANSWER.unpack(payload)
            return ShadowAnswer(probe_id=probe_id, asker=asker, blocked=bool(blocked))
        if kind == KIND_PIXEL_CONTRIB:
            pixel, path_id = _CONTRIB_HEAD.unpack_from(payload)
            return PixelContrib(
                pixel=pixel, path_id=path_id,
                value=_decode_spectrum(payload, _CONTRIB_HEAD.size, bins),
            )
        if kind == KIND_STATUS:
            head = _STATUS_HEAD.unpack_from(payload)
            created, completed, crossings, probe_hops, loads, unloads, n = head
            cells = []
            offset = _STATUS_HEAD.size
            for _ in range(n):
                cid, pending, loaded = _STATUS_CELL.unpack_from(payload, offset)
                cells.append((cid, pending, bool(loaded)))
                offset += _STATUS_CELL.size
            return Status(
                created=created, completed=completed, crossings=crossings,
                probe_hops=probe_hops, loads=loads, unloads=unloads, cells=cells,
            )
        if kind == KIND_OWNERSHIP_UPDATE:
            version, n_add, n_remove = _OWNERSHIP_HEAD.unpack_from(payload)
            ids = struct.unpack_from(f"<{n_add + n_remove}i", payload, _OWNERSHIP_HEAD.size)
            return OwnershipUpdate(
                version=version, add=tuple(ids[:n_add]), remove=tuple(ids[n_add:])
            )
        if kind == KIND_HANDSHAKE:
            version, worker_id, start_nm, end_nm, hs_bins = _HANDSHAKE.unpack(payload)
            return Handshake(
                version=version, worker_id=worker_id,
                start_nm=start_nm, end_nm=end_nm, bins=hs_bins,
            )
        if kind == KIND_TERMINATE:
            return Terminate()
        if kind == KIND_TERMINATED:
            return Terminated()
    except struct.error as exc:
        raise ProtocolError(f"malformed frame of kind {kind}: {exc}") from None
    raise ProtocolError(f"unknown frame kind {kind}")


class Decoder:
    """Incremental frame splitter for a byte stream."""

    def __init__(self, bins: Optional[int] = None):
        self.bins = bins
        self._buf = bytearray()

    def feed(self, data: bytes) -> list:
        """Add bytes, return every complete message now available."""
        self._buf.extend(data)
        out = []
        while True:
            if len(self._buf) < 4:
                return out
            (length,) = struct.unpack_from("<I", self._buf)
            if len(self._buf) < 4 + length:
                return out
            frame = bytes(self._buf[4 : 4 + length])
            del self._buf[: 4 + length]
            out.append(decode(frame, self.bins))
