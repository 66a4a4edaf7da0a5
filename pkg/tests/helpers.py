"""Small fixtures shared by the study, CLI and acceptance tests."""
import json

import numpy as np

from gridshare.fleet import FLEET_HEADER


def small_topology(houses_per_mg=(4, 3, 5)):
    """A chain of microgrids joined by open switches: I - II - III."""
    nodes, edges, houses = [], [], {}
    k = 0
    for m, count in enumerate(houses_per_mg):
        a, b = f"{m}a", f"{m}b"
        nodes += [a, b]
        edges.append({"a": a, "b": b, "kind": "line"})
        for _ in range(count):
            k += 1
            houses[f"H{k:04d}"] = b
    opened = []
    for m in range(len(houses_per_mg) - 1):
        sid = f"S{m + 1}"
        edges.append({"a": f"{m}b", "b": f"{m + 1}a", "kind": "switch", "switch_id": sid})
        opened.append(sid)
    return {"nodes": nodes, "edges": edges, "houses": houses, "default_open": opened}


def write_study(tmp_path, *, houses=(4, 3, 5), days=90, train_len=60, holdout_len=15,
                **extra):
    topo = tmp_path / "topo.json"
    topo.write_text(json.dumps(small_topology(houses)))
    cfg = {"fleet": {"synth": {"houses": sum(houses), "days": days, "seed": 3}},
           "topology": "topo.json", "trials": 50, "seed": 11,
           "train_len": train_len, "holdout_len": holdout_len}
    cfg.update(extra)
    path = tmp_path / "study.json"
    path.write_text(json.dumps(cfg))
    return path


def ramp_fleet_csv(path, houses=6, days=365, seed=0):
    """Fleet with no generation whose load grows linearly day by day with a
    hair of noise, so every grid-energy series is close to a straight line."""
    rng = np.random.default_rng(seed)
    lines = [",".join(FLEET_HEADER)]
    for h in range(houses):
        base = 5.0 + h
        for t in range(days * 6):
            day = t // 6
            v = base + 0.05 * day + rng.normal(scale=0.01)
            lines.append(f"H{h + 1:04d},150,15,2,{t},{max(v, 0.0)!r},0.0")
    path.write_text("\n".join(lines) + "\n")
    return path
