"""SPH1 signal container: magic, JSON header, little-endian float64 payload.

Layout::

    b"SPH1" | uint32 LE header length | header (UTF-8 JSON) | payload

The header records ``scheme``, ``L``, ``kind`` (``image``, ``coeffs`` or
``half-coeffs``), ``complex``, ``length`` (number of float64 values) and the
endianness tag ``"<"``. Complex payloads are interleaved real/imag pairs.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from sphtv.grid import SamplingScheme, build_grid

MAGIC = b"SPH1"
KINDS = ("image", "coeffs", "half-coeffs")
_LE_F64 = np.dtype("<f8")


class ContainerError(ValueError):
    """Malformed or inconsistent container."""


def expected_size(kind: str, scheme: SamplingScheme | str, L: int) -> int:
    """Number of (real or complex) entries a container of this kind holds."""
    if kind == "image":
        return build_grid(scheme, L).n_samples
    if kind == "coeffs":
        return L * L
    if kind == "half-coeffs":
        return L * (L + 1) // 2
    raise ContainerError(f"unknown kind {kind!r}")


@dataclass
class Signal:
    scheme: SamplingScheme
    L: int
    kind: str
    data: np.ndarray

    def __post_init__(self):
        self.scheme = SamplingScheme.parse(self.scheme)
        if self.kind not in KINDS:
            raise ContainerError(f"unknown kind {self.kind!r}")
        if self.L < 1:
            raise ContainerError("L must be positive")
        n = expected_size(self.kind, self.scheme, self.L)
        self.data = np.asarray(self.data)
        if self.data.size != n:
            raise ContainerError(f"{self.kind} at L={self.L} needs {n} entries, got {self.data.size}")
        if self.kind == "image":
            self.data = self.data.reshape(build_grid(self.scheme, self.L).shape)
        else:
            self.data = self.data.reshape(-1)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.data)


def encode(sig: Signal) -> bytes:
    flat = sig.data.reshape(-1)
    if sig.is_complex:
        vals = np.empty(2 * flat.size, dtype=_LE_F64)
        vals[0::2] = flat.real
        vals[1::2] = flat.imag
    else:
        vals = flat.astype(_LE_F64)
    header = {
        "scheme": sig.scheme.value,
        "L": int(sig.L),
        "kind": sig.kind,
        "complex": bool(sig.is_complex),
        "length": int(vals.size),
        "endian": "<",
    }
    head = json.dumps(header, sort_keys=True).encode("utf-8")
    return MAGIC + struct.pack("<I", len(head)) + head + vals.tobytes()


def decode(buf: bytes) -> Signal:
    if len(buf) < 8 or buf[:4] != MAGIC:
        raise ContainerError("missing SPH1 magic")
    (n_head,) = struct.unpack("<I", buf[4:8])
    if 8 + n_head > len(buf):
        raise ContainerError("truncated header")
    try:
        header = json.loads(buf[8 : 8 + n_head].decode("utf-8"))
        scheme = SamplingScheme.parse(header["scheme"])
        L = int(header["L"])
        kind = header["kind"]
        is_complex = bool(header["complex"])
        length = int(header["length"])
    except (ValueError, KeyError, TypeError, UnicodeDecodeError) as exc:
        raise ContainerError(f"bad header: {exc}") from None
    if header.get("endian") != "<":
        raise ContainerError("unsupported endianness tag")
    if kind not in KINDS or L < 1:
        raise ContainerError("bad kind or L in header")
    n = expected_size(kind, scheme, L) * (2 if is_complex else 1)
    if length != n:
        raise ContainerError(f"header declares {length} values, {kind} at L={L} needs {n}")
    payload = buf[8 + n_head :]
    if len(payload) != 8 * length:
        raise ContainerError(f"payload has {len(payload)} bytes, expected {8 * length}")
    vals = np.frombuffer(payload, dtype=_LE_F64).astype(float)
    data = vals[0::2] + 1j * vals[1::2] if is_complex else vals
    return Signal(scheme, L, kind, data)


def atomic_write(path: str | os.PathLike, blob: bytes) -> None:
    """Write through a temporary file in the target directory, then rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_signal(path, sig: Signal) -> None:
    atomic_write(path, encode(sig))


def read_signal(path) -> Signal:
    try:
        with open(path, "rb") as fh:
            buf = fh.read()
    except OSError as exc:
        raise ContainerError(str(exc)) from None
    return decode(buf)
