"""File formats: edge lists with id remapping, label/split files, the
series CSV format, and fit reports as JSON.  All writers are byte-stable
for fixed inputs."""

from __future__ import annotations

import json

import numpy as np

from .graph import Graph, build_from_edges
from .series import DecayFit, MeasureSeries


class ParseError(ValueError):
    """Input file violates its declared format; message carries the line."""


def _data_lines(path):
    with open(path, "r", encoding="utf-8") as f:
        for ln, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield ln, line


def load_graph(path) -> tuple[Graph, dict | None]:
    """Read an edge-list file: one ``u v`` pair per line, ``#`` comments,
    optional ``nodes: K`` header.

    Integer tokens are used as 0-based ids directly; otherwise all tokens are
    remapped to dense ids in first-seen order.  Returns the graph and the
    token-to-id map (None when ids were already dense integers).
    """
    header_nodes = None
    pairs: list[tuple[str, str]] = []
    for ln, line in _data_lines(path):
        if line.lower().startswith("nodes:"):
            if header_nodes is not None:
                raise ParseError(f"{path}: line {ln}: duplicate nodes header")
            try:
                header_nodes = int(line.split(":", 1)[1])
            except ValueError:
                raise ParseError(f"{path}: line {ln}: bad nodes header") from None
            if header_nodes < 1:
                raise ParseError(f"{path}: line {ln}: node count must be positive")
            continue
        toks = line.split()
        if len(toks) != 2:
            raise ParseError(f"{path}: line {ln}: expected 'u v', got {line!r}")
        if toks[0] == toks[1]:
            raise ParseError(f"{path}: line {ln}: self-edge {toks[0]!r}")
        pairs.append((toks[0], toks[1]))

    def _all_int() -> bool:
        try:
            return all(int(a) >= 0 and int(b) >= 0 for a, b in pairs)
        except ValueError:
            return False

    if pairs and _all_int():
        edges = np.array([(int(a), int(b)) for a, b in pairs], dtype=np.int64)
        v = int(edges.max()) + 1
        if header_nodes is not None:
            if header_nodes < v:
                raise ParseError(f"{path}: nodes header {header_nodes} "
                                 f"smaller than max id {v - 1}")
            v = header_nodes
        return build_from_edges(edges, v), None

    id_map: dict[str, int] = {}
    for a, b in pairs:
        for tok in (a, b):
            if tok not in id_map:
                id_map[tok] = len(id_map)
    v = len(id_map)
    if header_nodes is not None:
        if header_nodes < v:
            raise ParseError(f"{path}: nodes header {header_nodes} smaller "
                             f"than the {v} distinct ids seen")
        v = header_nodes
    if v == 0:
        raise ParseError(f"{path}: no edges and no nodes header")
    edges = np.array([(id_map[a], id_map[b]) for a, b in pairs],
                     dtype=np.int64).reshape(-1, 2)
    return build_from_edges(edges, v), id_map


def _resolve_node(tok: str, id_map: dict | None, v: int, where: str) -> int:
    if id_map is not None:
        if tok not in id_map:
            raise ParseError(f"{where}: unknown node id {tok!r}")
        return id_map[tok]
    try:
        node = int(tok)
    except ValueError:
        raise ParseError(f"{where}: non-integer node id {tok!r}") from None
    if not 0 <= node < v:
        raise ParseError(f"{where}: node id {node} outside [0, {v})")
    return node


SPLIT_NAMES = ("train", "val", "test")


def load_labels(path, v: int, id_map: dict | None = None
                ) -> tuple[np.ndarray, dict | None, dict]:
    """Read ``node class [split]`` lines.

    Returns (labels, masks, class_map): labels hold dense 0-based classes
    (first-seen order) and -1 for unlabeled nodes; masks is a dict of boolean
    arrays per split name, or None when no split column was present.
    """
    labels = np.full(v, -1, dtype=np.int64)
    class_map: dict[str, int] = {}
    masks = {name: np.zeros(v, dtype=bool) for name in SPLIT_NAMES}
    saw_split = False
    for ln, line in _data_lines(path):
        toks = line.split()
        if len(toks) not in (2, 3):
            raise ParseError(f"{path}: line {ln}: expected 'node class [split]'")
        node = _resolve_node(toks[0], id_map, v, f"{path}: line {ln}")
        if toks[1] not in class_map:
            class_map[toks[1]] = len(class_map)
        labels[node] = class_map[toks[1]]
        if len(toks) == 3:
            if toks[2] not in SPLIT_NAMES:
                raise ParseError(f"{path}: line {ln}: unknown split {toks[2]!r}")
            saw_split = True
            masks[toks[2]][node] = True
    return labels, (masks if saw_split else None), class_map


def load_splits(path, v: int, id_map: dict | None = None) -> dict:
    """Read ``node split`` lines into boolean masks per split name."""
    masks = {name: np.zeros(v, dtype=bool) for name in SPLIT_NAMES}
    for ln, line in _data_lines(path):
        toks = line.split()
        if len(toks) != 2 or toks[1] not in SPLIT_NAMES:
            raise ParseError(f"{path}: line {ln}: expected 'node train|val|test'")
        node = _resolve_node(toks[0], id_map, v, f"{path}: line {ln}")
        masks[toks[1]][node] = True
    return masks


def _format_index(x) -> str:
    xf = float(x)
    if xf == int(xf) and abs(xf) < 1e15:
        return str(int(xf))
    return f"{xf:.12e}"


def write_series(series_list, path, metadata: dict | None = None) -> None:
    """Write series as CSV: '#' metadata comments, a header line, then rows
    sorted by (run_id, measure, index) with 12-significant-digit values."""
    rows = []
    for s in series_list:
        run_id = str(s.metadata.get("run_id", ""))
        for i, val in zip(s.index, s.values):
            rows.append((run_id, s.measure_name, float(i), float(val)))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            for key in sorted(metadata or {}):
                f.write(f"# {key}: {metadata[key]}\n")
            f.write("index,measure,value,run_id\n")
            for run_id, measure, idx, val in rows:
                f.write(f"{_format_index(idx)},{measure},{val:.12e},{run_id}\n")
    except OSError as exc:
        raise OSError(f"cannot write series file {path}: {exc}") from exc


def read_series(path) -> list[MeasureSeries]:
    """Read a series CSV back; one MeasureSeries per (run_id, measure).

    '#' comment lines are parsed into each series' metadata.
    """
    meta: dict = {}
    groups: dict[tuple[str, str], list[tuple[float, float]]] = {}
    header_seen = False
    with open(path, "r", encoding="utf-8") as f:
        for ln, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if ":" in body:
                    k, _, val = body.partition(":")
                    meta[k.strip()] = val.strip()
                continue
            if not header_seen:
                if line != "index,measure,value,run_id":
                    raise ParseError(f"{path}: line {ln}: bad header {line!r}")
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise ParseError(f"{path}: line {ln}: expected 4 columns")
            idx, measure, value, run_id = parts
            try:
                groups.setdefault((run_id, measure), []).append(
                    (float(idx), float(value)))
            except ValueError:
                raise ParseError(f"{path}: line {ln}: non-numeric field") from None
    if not header_seen:
        raise ParseError(f"{path}: missing header line")
    out = []
    for (run_id, measure), pts in sorted(groups.items()):
        pts.sort()
        index = np.array([p[0] for p in pts])
        values = np.array([p[1] for p in pts])
        out.append(MeasureSeries(index, values, measure,
                                 dict(meta, run_id=run_id)))
    return out


def fit_to_dict(fit: DecayFit) -> dict:
    return {
        "c1": fit.c1,
        "c2": fit.c2,
        "r2_exp": fit.r_squared_exp,
        "r2_alg": fit.r_squared_alg,
        "classification": fit.classification,
        "floor_index": fit.floor_truncation_index,
    }


def write_fit_json(fits: dict[str, DecayFit], path) -> None:
    """Write decay fits as JSON: a flat object for a single series, else a
    mapping keyed by 'run_id/measure'."""
    if len(fits) == 1:
        payload = fit_to_dict(next(iter(fits.values())))
    else:
        payload = {key: fit_to_dict(f) for key, f in sorted(fits.items())}
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write fit file {path}: {exc}") from exc
