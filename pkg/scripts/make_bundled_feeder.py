"""Regenerate src/gridshare/data/feeder123.json.

A 123-bus radial stand-in split into five microgrids by six open tie
switches; five more sectionalising switches sit closed inside microgrids.
"""
import json
from pathlib import Path

import numpy as np

MICROGRIDS = [  # (first node, last node, houses)
    (1, 25, 113),
    (26, 50, 106),
    (51, 85, 161),
    (86, 105, 88),
    (106, 123, 48),
]
TIES = [(0, 1), (0, 3), (1, 3), (1, 4), (2, 3), (2, 4)]
LOAD_NODES = 85


def main():
    rng = np.random.default_rng(123)
    nodes = [str(i) for i in range(1, 124)]
    edges, houses = [], {}
    sw = 1
    loads_left = LOAD_NODES
    house_no = 1
    for k, (lo, hi, n_houses) in enumerate(MICROGRIDS):
        members = list(range(lo, hi + 1))
        # random recursive tree inside the microgrid
        for j, node in enumerate(members[1:], start=1):
            parent = members[int(rng.integers(max(0, j - 3), j))]
            edges.append({"a": str(parent), "b": str(node), "kind": "line"})
        # one closed sectionalising switch on the last tree edge
        last = edges.pop()
        last.update(kind="switch", switch_id=f"S{sw}")
        edges.append(last)
        sw += 1
        # load nodes: proportional share of the 85
        n_loads = round(LOAD_NODES * len(members) / 123) if k < 4 else loads_left
        loads_left -= n_loads
        load_nodes = sorted(rng.choice(members, size=n_loads, replace=False).tolist())
        split = np.array_split(np.arange(n_houses), n_loads)
        for node, chunk in zip(load_nodes, split):
            for _ in chunk:
                houses[f"H{house_no:04d}"] = str(node)
                house_no += 1
    opened = []
    for a, b in TIES:
        na = MICROGRIDS[a][1] - int(rng.integers(0, 5))
        nb = MICROGRIDS[b][0] + int(rng.integers(0, 5))
        sid = f"S{sw}"
        sw += 1
        edges.append({"a": str(na), "b": str(nb), "kind": "switch", "switch_id": sid})
        opened.append(sid)
    doc = {"nodes": nodes, "edges": edges, "houses": houses, "default_open": opened}
    out = Path(__file__).resolve().parents[1] / "src" / "gridshare" / "data" / "feeder123.json"
    out.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {out}: {len(edges)} edges, {sw - 1} switches, {len(houses)} houses")


if __name__ == "__main__":
    main()
