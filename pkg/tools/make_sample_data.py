"""Generate the bundled sample dataset: a 4-community planted-partition
graph at Texas scale with labels and a deterministic train/val/test split.

Run from the repo root:  python3 tools/make_sample_data.py
"""

from __future__ import annotations

import pathlib

import numpy as np

NODES_PER_CLASS = 60
CLASSES = 4
P_IN = 0.10
P_OUT = 0.008
SEED = 7


def main() -> None:
    rng = np.random.default_rng(SEED)
    v = NODES_PER_CLASS * CLASSES
    labels = np.repeat(np.arange(CLASSES), NODES_PER_CLASS)

    edges = []
    for i in range(v):
        for j in range(i + 1, v):
            p = P_IN if labels[i] == labels[j] else P_OUT
            if rng.random() < p:
                edges.append((i, j))

    # keep everything on the giant component: attach strays to a same-class hub
    adj = {i: set() for i in range(v)}
    for u, w in edges:
        adj[u].add(w)
        adj[w].add(u)
    for i in range(v):
        if not adj[i]:
            hub = int(np.flatnonzero(labels == labels[i])[0])
            if hub == i:
                hub = int(np.flatnonzero(labels == labels[i])[1])
            edges.append((min(i, hub), max(i, hub)))
            adj[i].add(hub)
            adj[hub].add(i)

    # splits: deterministic 60/20/20 round-robin within each class
    split_names = np.empty(v, dtype=object)
    for c in range(CLASSES):
        ids = np.flatnonzero(labels == c)
        for k, node in enumerate(ids):
            split_names[node] = ("train", "train", "train", "val", "test")[k % 5]

    root = pathlib.Path(__file__).resolve().parent.parent / "data"
    root.mkdir(exist_ok=True)

    with open(root / "sample_edges.txt", "w", newline="") as f:
        f.write("# sample planted-partition graph: 4 communities of 60 nodes\n")
        f.write(f"nodes: {v}\n")
        for u, w in sorted(set(edges)):
            f.write(f"{u} {w}\n")

    with open(root / "sample_labels.txt", "w", newline="") as f:
        f.write("# node_id class_id split\n")
        for i in range(v):
            f.write(f"{i} {labels[i]} {split_names[i]}\n")

    print(f"wrote {v} nodes, {len(set(edges))} edges")


if __name__ == "__main__":
    main()
