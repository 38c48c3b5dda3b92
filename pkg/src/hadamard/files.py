"""Reading inputs and writing results for the command line.

Formats
-------
points file
    JSON object ``{"space": "spider:3", "points": [...], "weights": [...]}``;
    ``weights`` is optional. Points use the per-space encodings: a list of
    numbers (Euclidean), ``{"ray": i, "radius": r}`` (spider), a row-major
    nested list (SPD).
trees file
    One rooted Newick tree per line; blank lines and ``#`` comments are
    skipped. The leaf order of the first tree fixes the taxon order.
result document
    JSON object with ``point``, ``objective``, ``iterations``,
    ``stop_reason``, ``seed``, ``schedule`` and run metadata.
trace file
    CSV with header ``step,component_index,lambda,t_coefficient,objective,distance_moved``.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .core import InvalidInputError, Space
from .spaces import parse_space
from .treespace import BHV, parse_newick


def atomic_write(path: str, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = os.path.abspath(path)
    folder = os.path.dirname(path)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc.strerror or exc}") from None


def _load_json(path: str):
    text = _read_text(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from None


def read_points(path: str, descriptor: str | None = None, tol: float = 1e-12):
    """Load a points file; returns ``(space, points, weights or None)``."""
    doc = _load_json(path)
    if not isinstance(doc, dict) or "points" not in doc:
        raise InvalidInputError(f"{path}: expected an object with a 'points' array")
    declared = doc.get("space")
    if descriptor is None and declared is None:
        raise InvalidInputError(f"{path}: no space given (use --space or a 'space' field)")
    if descriptor is not None and declared is not None and descriptor != declared:
        raise InvalidInputError(f"--space {descriptor} does not match the file's space {declared}")
    desc = descriptor or declared
    if not isinstance(desc, str):
        raise InvalidInputError(f"{path}: 'space' must be a descriptor string such as euclidean:2")
    if desc.startswith("bhv"):
        raise InvalidInputError("tree space inputs are read with --trees")
    space = parse_space(desc, tol)
    raw = doc["points"]
    if not isinstance(raw, list) or not raw:
        raise InvalidInputError(f"{path}: 'points' must be a nonempty array")
    points = [space.decode(p) for p in raw]
    weights = doc.get("weights")
    return space, points, weights


def read_trees(path: str, descriptor: str | None = None, tol: float = 1e-12):
    """Load a file with one Newick tree per line; returns ``(space, trees)``."""
    lines = [ln.strip() for ln in _read_text(path).splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise InvalidInputError(f"{path}: no trees found")
    _, taxa = parse_newick(lines[0])
    space = BHV(taxa, tol)
    if descriptor not in (None, "bhv", space.descriptor):
        raise InvalidInputError(f"--space {descriptor} does not match trees on {taxa.leaf_count} taxa")
    trees = []
    for n, line in enumerate(lines, 1):
        try:
            trees.append(space.parse(line))
        except InvalidInputError as exc:
            raise InvalidInputError(f"{path}, tree {n}: {exc}") from None
    return space, trees


def parse_weights(value: str, count: int):
    """``--weights`` as a comma list or a JSON file (a list or ``{"weights": [...]}``)."""
    if os.path.exists(value):
        doc = _load_json(value)
        if isinstance(doc, dict):
            doc = doc.get("weights")
        if not isinstance(doc, list):
            raise InvalidInputError(f"{value}: expected a weights array")
        raw = doc
    else:
        raw = [v for v in value.split(",") if v.strip()]
    try:
        w = [float(v) for v in raw]
    except (TypeError, ValueError):
        raise InvalidInputError(f"malformed weights {value!r}") from None
    check_weights(w, count)
    return w


def check_weights(w, count):
    if len(w) != count:
        raise InvalidInputError(f"{len(w)} weights given for {count} points")
    if not all(np.isfinite(v) and v > 0 for v in w):
        raise InvalidInputError("weights must be positive and finite")


def parse_point_arg(space: Space, text: str):
    """A point given on the command line: its JSON encoding, or a comma list for vectors."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError:
        if isinstance(space, BHV):
            obj = text
        else:
            try:
                obj = [float(v) for v in text.split(",")]
            except ValueError:
                raise InvalidInputError(f"cannot parse point {text!r}") from None
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        obj = [obj]
    return space.decode(obj)


def dump_json(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


__all__ = [
    "atomic_write",
    "check_weights",
    "dump_json",
    "parse_point_arg",
    "parse_weights",
    "read_points",
    "read_trees",
]
