"""JSON network files.

Schema (all fields except ``W`` optional)::

    {
      "n": 2,                               # checked against W when given
      "W": [[0.9, -2.0], [5.0, -1.5]],      # row-major
      "m": ["inf", 3.0],                    # caps; "inf" or a number > 0
      "tau": 1.0,
      "labels": ["E", "I"],
      "d": [1.0, 1.0],
      "partition": {"irrelevant": [0], "relevant": [1], "B_minus": [[-1.0]]}
    }

``m`` may also be a single value applied to every node. Errors raise
NetworkFileError naming the offending field.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import NetworkFileError, ShapeError
from .model import NetworkSpec

_KNOWN = {"n", "W", "m", "tau", "labels", "d", "partition"}


@dataclass(frozen=True, eq=False)
class NetworkFile:
    net: NetworkSpec
    d: Optional[np.ndarray] = None
    irrelevant: Optional[tuple[int, ...]] = None
    B_minus: Optional[np.ndarray] = None

    def __eq__(self, other):
        if not isinstance(other, NetworkFile):
            return NotImplemented
        same = lambda a, b: (a is None and b is None) or (
            a is not None and b is not None and np.array_equal(a, b))
        return (self.net == other.net and same(self.d, other.d)
                and self.irrelevant == other.irrelevant and same(self.B_minus, other.B_minus))

    def partition(self):
        from .inhibition import BilayerPartition
        if self.irrelevant is None:
            raise NetworkFileError("partition", "the file has no partition")
        d = np.zeros(self.net.n) if self.d is None else self.d
        rel = [i for i in range(self.net.n) if i not in self.irrelevant]
        if np.any(d[list(self.irrelevant)] != 0):
            raise NetworkFileError("d", "input must vanish on the irrelevant nodes")
        return BilayerPartition(self.net, self.irrelevant, self.B_minus, d[rel])


def _number(value, field, allow_inf=False):
    if isinstance(value, str) and allow_inf and value.strip().lower() in ("inf", "+inf", "infinity"):
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise NetworkFileError(field, f"expected a number, got {value!r}")
    v = float(value)
    if not math.isfinite(v):
        raise NetworkFileError(field, "must be finite" + (' (write "inf" for no cap)' if allow_inf else ""))
    return v


def _matrix(value, field, rows=None, cols=None):
    if not isinstance(value, list) or not all(isinstance(r, list) for r in value):
        raise NetworkFileError(field, "expected a list of rows")
    out = [[_number(v, f"{field}[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(value)]
    if rows is not None and len(out) != rows:
        raise NetworkFileError(field, f"expected {rows} rows, got {len(out)}")
    widths = {len(r) for r in out}
    if len(widths) > 1:
        raise NetworkFileError(field, "rows have different lengths")
    if cols is not None and out and len(out[0]) != cols:
        raise NetworkFileError(field, f"expected {cols} columns, got {len(out[0])}")
    return np.array(out, dtype=float).reshape(len(out), widths.pop() if widths else 0)


def _vector(value, field, n, allow_inf=False):
    if not isinstance(value, list):
        raise NetworkFileError(field, "expected a list")
    if len(value) != n:
        raise NetworkFileError(field, f"expected {n} entries, got {len(value)}")
    return np.array([_number(v, f"{field}[{i}]", allow_inf) for i, v in enumerate(value)])


def _indices(value, field, n):
    if not isinstance(value, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in value):
        raise NetworkFileError(field, "expected a list of integer node indices")
    if any(i < 0 or i >= n for i in value) or len(set(value)) != len(value):
        raise NetworkFileError(field, f"indices must be distinct and in [0, {n})")
    return tuple(sorted(value))


def from_dict(doc) -> NetworkFile:
    if not isinstance(doc, dict):
        raise NetworkFileError("<root>", "expected a JSON object")
    extra = set(doc) - _KNOWN
    if extra:
        raise NetworkFileError(sorted(extra)[0], "unknown field")
    if "W" not in doc:
        raise NetworkFileError("W", "missing required field")
    W = _matrix(doc["W"], "W")
    n = W.shape[0]
    if W.shape != (n, n) or n == 0:
        raise NetworkFileError("W", f"must be a nonempty square matrix, got shape {W.shape}")
    if "n" in doc and (isinstance(doc["n"], bool) or doc["n"] != n):
        raise NetworkFileError("n", f"declares {doc['n']!r} nodes but W is {n}x{n}")
    m_raw = doc.get("m", "inf")
    if isinstance(m_raw, list):
        m = _vector(m_raw, "m", n, allow_inf=True)
    else:
        m = np.full(n, _number(m_raw, "m", allow_inf=True))
    if np.any(m <= 0):
        raise NetworkFileError("m", "caps must be positive")
    tau = _number(doc.get("tau", 1.0), "tau")
    if tau <= 0:
        raise NetworkFileError("tau", "must be positive")
    labels = doc.get("labels")
    if labels is not None:
        if not isinstance(labels, list) or len(labels) != n or not all(isinstance(s, str) for s in labels):
            raise NetworkFileError("labels", f"expected {n} strings")
        labels = tuple(labels)
    d = _vector(doc["d"], "d", n) if "d" in doc else None
    irrelevant = B_minus = None
    if "partition" in doc:
        part = doc["partition"]
        if not isinstance(part, dict):
            raise NetworkFileError("partition", "expected an object")
        if "irrelevant" not in part:
            raise NetworkFileError("partition.irrelevant", "missing required field")
        irrelevant = _indices(part["irrelevant"], "partition.irrelevant", n)
        if not irrelevant:
            raise NetworkFileError("partition.irrelevant", "must be nonempty")
        if "relevant" in part:
            rel = _indices(part["relevant"], "partition.relevant", n)
            if set(rel) | set(irrelevant) != set(range(n)) or set(rel) & set(irrelevant):
                raise NetworkFileError("partition.relevant", "irrelevant and relevant must split the nodes")
        if "B_minus" in part:
            B_minus = _matrix(part["B_minus"], "partition.B_minus", rows=len(irrelevant))
            if B_minus.shape[1] == 0:
                raise NetworkFileError("partition.B_minus", "needs at least one column")
        else:
            B_minus = -np.eye(len(irrelevant))
    try:
        net = NetworkSpec(W, m, tau, labels)
    except ShapeError as exc:  # pragma: no cover - fields are prevalidated
        raise NetworkFileError("W", str(exc)) from exc
    return NetworkFile(net, d, irrelevant, B_minus)


def to_dict(nf: NetworkFile) -> dict:
    net = nf.net
    enc = lambda v: "inf" if math.isinf(v) else float(v)
    doc = {"n": net.n, "W": net.W.tolist(), "m": [enc(v) for v in net.m], "tau": net.tau}
    if net.labels is not None:
        doc["labels"] = list(net.labels)
    if nf.d is not None:
        doc["d"] = [float(v) for v in nf.d]
    if nf.irrelevant is not None:
        doc["partition"] = {
            "irrelevant": list(nf.irrelevant),
            "relevant": [i for i in range(net.n) if i not in nf.irrelevant],
            "B_minus": nf.B_minus.tolist(),
        }
    return doc


def loads(text: str) -> NetworkFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkFileError("<json>", f"not valid JSON: {exc}") from exc
    return from_dict(doc)


def dumps(nf: NetworkFile) -> str:
    return json.dumps(to_dict(nf), indent=2)


def load(path) -> NetworkFile:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise NetworkFileError("<file>", f"cannot read {path}: {exc.strerror}") from exc
    return loads(text)


def save(nf: NetworkFile, path) -> None:
    Path(path).write_text(dumps(nf) + "\n")
