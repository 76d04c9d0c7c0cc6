"""Plain-text graph formats: edge lists, feature/label/split CSVs, config files."""

from __future__ import annotations

import ast
import csv
import hashlib
from pathlib import Path

import numpy as np

from .exceptions import ParseError
from .graph import Graph

SPLITS = ("train", "val", "test")


def _lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if line and not line.startswith("#"):
                yield lineno, line


def read_edge_list(path, n_nodes=None) -> np.ndarray:
    """Dense symmetric adjacency from ``u<TAB>v[<TAB>weight]`` lines (0-based ids).

    The node count is ``n_nodes`` when given, else one past the largest id.
    """
    rows = []
    for lineno, line in _lines(path):
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) not in (2, 3):
            raise ParseError(f"{path}:{lineno}: expected 2 or 3 fields, got {len(parts)}")
        try:
            u, v = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise ParseError(f"{path}:{lineno}: malformed edge {line!r}") from None
        if u < 0 or v < 0:
            raise ParseError(f"{path}:{lineno}: negative node id")
        if u == v:
            raise ParseError(f"{path}:{lineno}: self-loop on node {u}")
        if not np.isfinite(w) or w < 0:
            raise ParseError(f"{path}:{lineno}: weight must be finite and nonnegative")
        rows.append((lineno, u, v, w))
    top = max((max(u, v) for _, u, v, _ in rows), default=-1) + 1
    n = top if n_nodes is None else int(n_nodes)
    if n < top:
        raise ParseError(f"{path}: node id {top - 1} exceeds node count {n}")
    adj = np.zeros((n, n))
    for lineno, u, v, w in rows:
        if adj[u, v] != 0:
            raise ParseError(f"{path}:{lineno}: duplicate edge ({u}, {v})")
        adj[u, v] = adj[v, u] = w
    return adj


def write_edge_list(path, adjacency, threshold=0.0, precision=10):
    """Upper-triangle entries with weight above ``threshold``; returns the count."""
    adj = np.asarray(adjacency, dtype=float)
    iu, ju = np.triu_indices(adj.shape[0], k=1)
    w = adj[iu, ju]
    keep = w > threshold
    with open(path, "w", encoding="utf-8") as fh:
        for u, v, x in zip(iu[keep], ju[keep], w[keep]):
            fh.write(f"{u}\t{v}\t{x:.{precision}g}\n")
    return int(keep.sum())


def read_features(path) -> np.ndarray:
    try:
        x = np.loadtxt(path, delimiter=",", ndmin=2, encoding="utf-8")
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if not np.all(np.isfinite(x)):
        raise ParseError(f"{path}: features must be finite")
    return x


def _read_node_table(path, n, parse):
    out = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if lineno == 1 and row[0].strip() == "node_id":
                continue
            if len(row) != 2:
                raise ParseError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            try:
                node = int(row[0])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad node id {row[0]!r}") from None
            if not 0 <= node < n:
                raise ParseError(f"{path}:{lineno}: node id {node} out of range [0, {n})")
            if node in out:
                raise ParseError(f"{path}:{lineno}: node {node} listed twice")
            out[node] = parse(row[1].strip(), f"{path}:{lineno}")
    return out


def read_labels(path, n) -> np.ndarray:
    """``node_id,label`` rows; every node must be labelled with an integer."""
    def parse(s, where):
        try:
            return int(s)
        except ValueError:
            raise ParseError(f"{where}: label {s!r} is not an integer") from None

    table = _read_node_table(path, n, parse)
    missing = sorted(set(range(n)) - set(table))
    if missing:
        raise ParseError(f"{path}: no label for node {missing[0]}")
    return np.array([table[i] for i in range(n)], dtype=int)


def read_splits(path, n):
    """``node_id,split`` rows; returns ``(train, val, test)`` boolean masks."""
    def parse(s, where):
        if s not in SPLITS:
            raise ParseError(f"{where}: split {s!r} not in {SPLITS}")
        return s

    table = _read_node_table(path, n, parse)
    masks = {s: np.zeros(n, dtype=bool) for s in SPLITS}
    for node, split in table.items():
        masks[split][node] = True
    return masks["train"], masks["val"], masks["test"]


def write_splits(path, train, val, test):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_id", "split"])
        for name, mask in zip(SPLITS, (train, val, test)):
            for node in np.flatnonzero(mask):
                w.writerow([int(node), name])


def load_graph(edges, features=None, labels=None, splits=None) -> Graph:
    """Assemble a :class:`Graph` from the individual files (all but edges optional)."""
    x = read_features(features) if features is not None else None
    adj = read_edge_list(edges, n_nodes=None if x is None else x.shape[0])
    n = adj.shape[0]
    if x is not None and x.shape[0] != n:
        raise ParseError(f"{features}: {x.shape[0]} rows for {n} nodes")
    y = read_labels(labels, n) if labels is not None else None
    masks = read_splits(splits, n) if splits is not None else (None, None, None)
    return Graph(adj, features=x, labels=y, train_mask=masks[0], val_mask=masks[1],
                 test_mask=masks[2])


def read_config(path) -> dict:
    """Flat ``key = value`` file; values are Python literals or bare strings."""
    out = {}
    for lineno, line in _lines(path):
        line = line.split(" #", 1)[0].strip()
        if "=" not in line:
            raise ParseError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ParseError(f"{path}:{lineno}: empty key")
        out[key] = parse_value(raw)
    return out


def parse_value(raw: str):
    lowered = raw.lower()
    if lowered in ("none", "null", ""):
        return None
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return ast.literal_eval(raw)
    except (ValueError, SyntaxError):
        return raw


def write_config(path, values: dict):
    with open(path, "w", encoding="utf-8") as fh:
        for key in sorted(values):
            fh.write(f"{key} = {values[key]!r}\n")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def read_cora(content, cites):
    """Cora-style ``.content`` (id, binary features, class) and ``.cites`` files.

    Paper ids are remapped to ``0..n-1`` in file order; citations that mention
    unknown ids are skipped. Returns ``(graph, id_list, class_names)``.
    """
    ids, feats, classes = [], [], []
    for lineno, line in _lines(content):
        parts = line.split()
        if len(parts) < 3:
            raise ParseError(f"{content}:{lineno}: too few fields")
        ids.append(parts[0])
        try:
            feats.append([float(v) for v in parts[1:-1]])
        except ValueError:
            raise ParseError(f"{content}:{lineno}: non-numeric feature") from None
        classes.append(parts[-1])
    if len({len(f) for f in feats}) > 1:
        raise ParseError(f"{content}: rows have differing feature counts")
    index = {pid: i for i, pid in enumerate(ids)}
    names = sorted(set(classes))
    labels = np.array([names.index(c) for c in classes], dtype=int)
    adj = np.zeros((len(ids), len(ids)))
    for lineno, line in _lines(cites):
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"{cites}:{lineno}: expected 2 fields")
        u, v = index.get(parts[0]), index.get(parts[1])
        if u is None or v is None or u == v:
            continue
        adj[u, v] = adj[v, u] = 1.0
    g = Graph(adj, features=np.array(feats), labels=labels)
    return g, ids, names


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
