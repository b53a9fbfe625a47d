"""Plain-text model files.

Format, one directive per line; ``#`` starts a comment and blank lines are
skipped::

    alpha 0.25
    channel 2 2 main      # <inputs> <outputs> [name]
    0.9 0.1
    0.1 0.9
    channel 2 2 wtp
    0.7 0.3
    0.3 0.7
    dist 2 source         # optional source law for the simulators
    0.5 0.5

Channel names are ``main`` and ``wtp`` (alias ``wiretap``). Unnamed channel
blocks are taken as main then wtp. Each row must sum to 1 within 1e-9 and
is renormalized after the check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .capacity import WiretapModel
from .errors import MalformedRowError, MissingFileError, ModelFileError, RowSumError, ValidationError
from .finite_prob import Channel, Distribution

ROW_TOL = 1e-9
_CHANNEL_NAMES = {"main": "main", "wtp": "wtp", "wiretap": "wtp"}


@dataclass(frozen=True)
class ModelFile:
    model: WiretapModel
    source: Optional[Distribution] = None
    path: Optional[str] = None
    alpha_given: bool = False


def _tokens(line: str) -> list:
    """(column, token) pairs of the uncommented part of ``line``; columns 1-based."""
    body = line.split("#", 1)[0]
    out, col = [], 0
    for tok in body.split():
        col = body.index(tok, col)
        out.append((col + 1, tok))
        col += len(tok)
    return out


def _number(tok: str, col: int, lineno: int, path, what: str) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise MalformedRowError(f"{what}: cannot parse {tok!r} as a number", path, lineno, col) from None
    if not math.isfinite(v):
        raise MalformedRowError(f"{what}: non-finite value {tok!r}", path, lineno, col)
    return v


def _size(tok: str, col: int, lineno: int, path) -> int:
    try:
        v = int(tok)
    except ValueError:
        raise MalformedRowError(f"alphabet size {tok!r} is not an integer", path, lineno, col) from None
    if v < 1:
        raise MalformedRowError(f"alphabet size must be >= 1, got {v}", path, lineno, col)
    return v


def _read_row(toks, width: int, lineno: int, path) -> np.ndarray:
    if len(toks) != width:
        col = toks[width][0] if len(toks) > width else toks[-1][0]
        raise MalformedRowError(f"expected {width} entries, found {len(toks)}", path, lineno, col)
    row = np.array([_number(t, c, lineno, path, "row entry") for c, t in toks])
    for (c, _), v in zip(toks, row):
        if v < 0:
            raise MalformedRowError(f"negative probability {v}", path, lineno, c)
    s = math.fsum(row)
    if abs(s - 1.0) > ROW_TOL:
        raise RowSumError(f"row sums to {s:.12g}, not 1 (tolerance {ROW_TOL:g})", path, lineno, toks[0][0])
    return row / s


def parse_model_text(text: str, path=None) -> ModelFile:
    lines = [(i, _tokens(raw)) for i, raw in enumerate(text.splitlines(), start=1)]
    lines = [(i, t) for i, t in lines if t]
    channels, unnamed = {}, []
    source = None
    alpha, alpha_given = 0.0, False
    pos = 0
    while pos < len(lines):
        lineno, toks = lines[pos]
        pos += 1
        col, key = toks[0]
        key = key.lower()
        if key == "alpha":
            if len(toks) != 2:
                raise MalformedRowError("expected 'alpha <value>'", path, lineno, col)
            alpha = _number(toks[1][1], toks[1][0], lineno, path, "alpha")
            if not 0.0 <= alpha <= 1.0:
                raise MalformedRowError(f"alpha {alpha} outside [0, 1]", path, lineno, toks[1][0])
            alpha_given = True
        elif key in ("channel", "dist"):
            nsizes = 2 if key == "channel" else 1
            if len(toks) not in (1 + nsizes, 2 + nsizes):
                usage = "channel <inputs> <outputs> [name]" if key == "channel" else "dist <size> [name]"
                raise MalformedRowError(f"expected '{usage}'", path, lineno, col)
            sizes = [_size(t, c, lineno, path) for c, t in toks[1 : 1 + nsizes]]
            name = toks[1 + nsizes][1].lower() if len(toks) == 2 + nsizes else None
            nrows, width = (sizes[0], sizes[1]) if key == "channel" else (1, sizes[0])
            rows = []
            for _ in range(nrows):
                if pos >= len(lines):
                    raise MalformedRowError(f"{key} block ends early: {len(rows)} of {nrows} rows", path, lineno, col)
                rlineno, rtoks = lines[pos]
                pos += 1
                rows.append(_read_row(rtoks, width, rlineno, path))
            if key == "dist":
                if name not in (None, "source"):
                    raise MalformedRowError(f"unknown distribution name {name!r}", path, lineno, toks[-1][0])
                if source is not None:
                    raise MalformedRowError("duplicate source distribution", path, lineno, col)
                source = (Distribution(rows[0]), lineno)
            else:
                ch = Channel(np.vstack(rows))
                if name is None:
                    unnamed.append((ch, lineno))
                elif name in _CHANNEL_NAMES:
                    role = _CHANNEL_NAMES[name]
                    if role in channels:
                        raise MalformedRowError(f"duplicate channel {role!r}", path, lineno, toks[-1][0])
                    channels[role] = (ch, lineno)
                else:
                    raise MalformedRowError(f"unknown channel name {name!r}", path, lineno, toks[-1][0])
        else:
            raise MalformedRowError(f"unknown directive {toks[0][1]!r}", path, lineno, col)

    for role in ("main", "wtp"):
        if role not in channels and unnamed:
            channels[role] = unnamed.pop(0)
    if unnamed:
        raise MalformedRowError("more than two channel blocks", path, unnamed[0][1], 1)
    for role in ("main", "wtp"):
        if role not in channels:
            raise ModelFileError(f"missing {role} channel", path)
    (main, _), (wtp, wline) = channels["main"], channels["wtp"]
    if main.input_size != wtp.input_size:
        raise ModelFileError(
            f"wtp has {wtp.input_size} inputs but main has {main.input_size}", path, wline, 1
        )
    src = None
    if source is not None:
        src, sline = source
        if src.alphabet_size != main.input_size:
            raise ModelFileError(
                f"source has {src.alphabet_size} symbols but channels take {main.input_size}", path, sline, 1
            )
    try:
        model = WiretapModel(main, wtp, alpha)
    except ValidationError as exc:
        raise ModelFileError(str(exc), path) from exc
    return ModelFile(model, src, None if path is None else str(path), alpha_given)


def parse_model(path) -> ModelFile:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise MissingFileError("no such model file", str(path)) from None
    except (IsADirectoryError, PermissionError, UnicodeDecodeError) as exc:
        raise MissingFileError(f"cannot read model file ({exc.__class__.__name__})", str(path)) from None
    return parse_model_text(text, str(path))


def format_model(mf: ModelFile) -> str:
    """Inverse of :func:`parse_model_text` (floats written with their shortest round-trip repr)."""

    def row(values) -> str:
        return " ".join(repr(float(v)) for v in values)

    m = mf.model
    out = [f"alpha {m.alpha!r}"]
    for name, ch in (("main", m.main), ("wtp", m.wtp)):
        out.append(f"channel {ch.input_size} {ch.output_size} {name}")
        out += [row(r) for r in ch.rows]
    if mf.source is not None:
        out.append(f"dist {mf.source.alphabet_size} source")
        out.append(row(mf.source.probs))
    return "\n".join(out) + "\n"
