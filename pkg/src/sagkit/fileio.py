"""File formats: EMB1 embedding matrices, headerless CSV matrices, ENC1 encoders,
loss-history CSV and JSON reports.

Malformed files raise :class:`FormatError` with a short ``code``; missing or
unreadable files surface as :class:`OSError`.
"""

from __future__ import annotations

import csv
import io
import json
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .sagvicreg.model import ToyEncoder

EMB_MAGIC = b"EMB1"
ENC_MAGIC = b"ENC1"
_U32 = struct.Struct("<I")
_F8 = np.dtype("<f8")

HISTORY_HEADER = ("epoch", "invariance", "variance", "covariance", "total")


def _check_finite(x, what):
    if not np.all(np.isfinite(x)):
        raise FormatError(f"{what} contains NaN or infinite values", "non_finite")


# -- embeddings ---------------------------------------------------------------


def emb_bytes(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {x.shape}")
    _check_finite(x, "embedding")
    n, d = x.shape
    return EMB_MAGIC + _U32.pack(n) + _U32.pack(d) + x.astype(_F8).tobytes(order="C")


def save_emb(path, x):
    Path(path).write_bytes(emb_bytes(x))


def parse_emb(buf, what="embedding file"):
    if len(buf) < 12:
        raise FormatError(f"{what}: truncated header ({len(buf)} bytes)", "truncated_header")
    if buf[:4] != EMB_MAGIC:
        raise FormatError(f"{what}: bad magic {bytes(buf[:4])!r}, expected {EMB_MAGIC!r}", "bad_magic")
    n = _U32.unpack_from(buf, 4)[0]
    d = _U32.unpack_from(buf, 8)[0]
    expected = 8 * n * d
    if len(buf) - 12 != expected:
        raise FormatError(
            f"{what}: payload length mismatch: header says {n}x{d} "
            f"({expected} bytes) but found {len(buf) - 12}",
            "payload_length_mismatch",
        )
    x = np.frombuffer(buf, dtype=_F8, count=n * d, offset=12).reshape(n, d).astype(np.float64)
    _check_finite(x, what)
    return x


def load_emb(path):
    return parse_emb(Path(path).read_bytes(), str(path))


# -- CSV matrices ---------------------------------------------------------------


def parse_csv_matrix(text, what="CSV matrix"):
    """Headerless rows of comma-separated decimals; blank lines are skipped."""
    rows = []
    for lineno, rec in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not rec or all(not f.strip() for f in rec):
            continue
        try:
            rows.append([float(f) for f in rec])
        except ValueError:
            raise FormatError(f"{what}: line {lineno}: non-numeric field", "bad_csv") from None
        if len(rows[-1]) != len(rows[0]):
            raise FormatError(
                f"{what}: line {lineno}: {len(rows[-1])} fields, expected {len(rows[0])}",
                "ragged_csv",
            )
    if not rows:
        raise FormatError(f"{what}: no data rows", "empty")
    x = np.array(rows, dtype=np.float64)
    _check_finite(x, what)
    return x


def load_matrix(path):
    """Load an EMB1 file, or fall back to a headerless CSV matrix."""
    buf = Path(path).read_bytes()
    if buf[:4] == EMB_MAGIC:
        return parse_emb(buf, str(path))
    try:
        text = buf.decode("utf-8")
    except UnicodeDecodeError:
        raise FormatError(f"{path}: neither EMB1 nor UTF-8 CSV", "bad_magic") from None
    return parse_csv_matrix(text, str(path))


# -- encoders -------------------------------------------------------------------


def encoder_bytes(enc):
    """ENC1: u32 layer count, u32 encoder-layer count, then per layer u32 rows,
    u32 cols, row-major f8 weights and f8 biases, all little-endian."""
    parts = [ENC_MAGIC, _U32.pack(len(enc.weights)), _U32.pack(enc.n_encoder_layers)]
    for w, b in zip(enc.weights, enc.biases):
        parts += [_U32.pack(w.shape[0]), _U32.pack(w.shape[1])]
        parts += [w.astype(_F8).tobytes(order="C"), b.astype(_F8).tobytes()]
    return b"".join(parts)


def save_encoder(path, enc):
    Path(path).write_bytes(encoder_bytes(enc))


def parse_encoder(buf, what="encoder file"):
    if buf[:4] != ENC_MAGIC:
        raise FormatError(f"{what}: bad magic {bytes(buf[:4])!r}, expected {ENC_MAGIC!r}", "bad_magic")
    try:
        n_layers, n_enc = _U32.unpack_from(buf, 4)[0], _U32.unpack_from(buf, 8)[0]
        pos = 12
        weights, biases = [], []
        for _ in range(n_layers):
            r, c = _U32.unpack_from(buf, pos)[0], _U32.unpack_from(buf, pos + 4)[0]
            pos += 8
            w = np.frombuffer(buf, dtype=_F8, count=r * c, offset=pos).reshape(r, c)
            pos += 8 * r * c
            b = np.frombuffer(buf, dtype=_F8, count=c, offset=pos)
            pos += 8 * c
            weights.append(w.astype(np.float64))
            biases.append(b.astype(np.float64))
    except (struct.error, ValueError):
        raise FormatError(f"{what}: truncated", "payload_length_mismatch") from None
    if pos != len(buf):
        raise FormatError(f"{what}: {len(buf) - pos} trailing bytes", "payload_length_mismatch")
    try:
        return ToyEncoder(weights, biases, n_enc)
    except ValueError as exc:
        raise FormatError(f"{what}: {exc}", "bad_encoder") from None


def load_encoder(path):
    return parse_encoder(Path(path).read_bytes(), str(path))


# -- reports ----------------------------------------------------------------------


def history_csv(history):
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(HISTORY_HEADER)
    for epoch, b in enumerate(history):
        w.writerow([epoch, *(repr(float(v)) for v in b.as_row())])
    return out.getvalue()


def matrix_csv(header, columns):
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in zip(*columns):
        w.writerow([v if isinstance(v, (int, np.integer)) else repr(float(v)) for v in row])
    return out.getvalue()


def json_text(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_text(path, text):
    Path(path).write_text(text, encoding="utf-8", newline="")
