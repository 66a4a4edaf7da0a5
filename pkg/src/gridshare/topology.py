"""Feeder graph with switchable edges, microgrid partitioning and scenarios."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigError, SchemaError

OPEN, CLOSED = "open", "closed"

_ROMAN = ["I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX", "X",
          "XI", "XII", "XIII", "XIV", "XV", "XVI", "XVII", "XVIII", "XIX", "XX"]


def roman(k: int) -> str:
    """1-based roman numeral; falls back to arabic past 20."""
    return _ROMAN[k - 1] if 1 <= k <= len(_ROMAN) else str(k)


def node_key(node):
    """Order node ids numerically when they look like integers."""
    s = str(node)
    try:
        return (0, int(s), "")
    except ValueError:
        return (1, 0, s)


@dataclass(frozen=True)
class Edge:
    a: str
    b: str
    kind: str = "line"
    switch_id: str | None = None


@dataclass(frozen=True)
class FeederGraph:
    nodes: tuple
    edges: tuple
    house_assignment: dict = field(hash=False)
    default_open: tuple = ()

    def __post_init__(self):
        nodes = set(self.nodes)
        if len(nodes) != len(self.nodes):
            raise SchemaError("duplicate node ids")
        seen = set()
        for e in self.edges:
            if e.a not in nodes or e.b not in nodes:
                raise SchemaError(f"edge {e.a}-{e.b} references an unknown node")
            if e.kind not in ("line", "switch"):
                raise SchemaError(f"edge kind must be line or switch, got {e.kind!r}")
            if e.kind == "switch":
                if not e.switch_id:
                    raise SchemaError(f"switch edge {e.a}-{e.b} lacks a switch_id")
                if e.switch_id in seen:
                    raise SchemaError(f"duplicate switch id {e.switch_id}")
                seen.add(e.switch_id)
        for h, n in self.house_assignment.items():
            if n not in nodes:
                raise SchemaError(f"house {h} assigned to unknown node {n}")
        unknown = set(self.default_open) - seen
        if unknown:
            raise SchemaError(f"default_open names unknown switches {sorted(unknown)}")
        if len(_components(self.nodes, self.edges)) > 1:
            raise SchemaError("feeder is not connected with all switches closed")

    @property
    def switch_ids(self) -> list[str]:
        return sorted((e.switch_id for e in self.edges if e.kind == "switch"), key=node_key)

    def default_switch_state(self) -> dict:
        opened = set(self.default_open)
        return {s: OPEN if s in opened else CLOSED for s in self.switch_ids}

    @classmethod
    def from_dict(cls, d: dict) -> "FeederGraph":
        try:
            nodes = tuple(str(n) for n in d["nodes"])
            edges = tuple(Edge(str(e["a"]), str(e["b"]), e.get("kind", "line"),
                               None if e.get("switch_id") is None else str(e["switch_id"]))
                          for e in d["edges"])
            houses = {str(h): str(n) for h, n in d.get("houses", {}).items()}
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed topology document: {exc}") from None
        return cls(nodes, edges, houses, tuple(str(s) for s in d.get("default_open", ())))

    def to_dict(self) -> dict:
        edges = []
        for e in self.edges:
            row = {"a": e.a, "b": e.b, "kind": e.kind}
            if e.switch_id is not None:
                row["switch_id"] = e.switch_id
            edges.append(row)
        return {"nodes": list(self.nodes), "edges": edges,
                "houses": dict(self.house_assignment), "default_open": list(self.default_open)}


def load_topology(path=None) -> FeederGraph:
    """Load a topology JSON; ``None`` loads the bundled five-microgrid feeder."""
    if path is None:
        text = resources.files("gridshare.data").joinpath("feeder123.json").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"topology is not valid JSON: {exc}") from None
    return FeederGraph.from_dict(doc)


def _components(nodes, edges):
    parent = {n: n for n in nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in edges:
        ra, rb = find(e.a), find(e.b)
        if ra != rb:
            parent[ra] = rb
    groups: dict = {}
    for n in nodes:
        groups.setdefault(find(n), set()).add(n)
    return sorted(groups.values(), key=lambda g: node_key(min(g, key=node_key)))


@dataclass(frozen=True)
class Microgrid:
    id: str
    nodes: frozenset
    houses: frozenset


@dataclass(frozen=True)
class MicrogridPartition:
    microgrids: tuple
    switch_state: dict = field(hash=False)

    def by_id(self, mg_id: str) -> Microgrid:
        for mg in self.microgrids:
            if mg.id == mg_id:
                return mg
        raise KeyError(mg_id)

    def microgrid_of_node(self) -> dict:
        return {n: mg.id for mg in self.microgrids for n in mg.nodes}


def partition(feeder: FeederGraph, switch_state: dict | None = None) -> MicrogridPartition:
    """Split the feeder into microgrids: connected components once open
    switches are removed. Microgrids are named MG-I, MG-II, ... in order of
    their smallest node id."""
    if switch_state is None:
        switch_state = feeder.default_switch_state()
    ids = set(feeder.switch_ids)
    unknown = set(switch_state) - ids
    if unknown:
        raise ConfigError(f"unknown switch ids: {sorted(unknown, key=node_key)}")
    missing = ids - set(switch_state)
    if missing:
        raise ConfigError(f"switch state missing for: {sorted(missing, key=node_key)}")
    for s, v in switch_state.items():
        if v not in (OPEN, CLOSED):
            raise ConfigError(f"switch {s}: state must be 'open' or 'closed', got {v!r}")

    kept = [e for e in feeder.edges if not (e.kind == "switch" and switch_state[e.switch_id] == OPEN)]
    comps = _components(feeder.nodes, kept)
    houses_at: dict = {}
    for h, n in feeder.house_assignment.items():
        houses_at.setdefault(n, set()).add(h)
    mgs = []
    for k, comp in enumerate(comps, start=1):
        hs = set().union(*(houses_at.get(n, set()) for n in comp))
        mgs.append(Microgrid(f"MG-{roman(k)}", frozenset(comp), frozenset(hs)))
    return MicrogridPartition(tuple(mgs), dict(switch_state))


def neighboring_pairs(feeder: FeederGraph, part: MicrogridPartition) -> list[tuple[str, str]]:
    """Microgrid pairs joined by at least one switch edge, ordered by id."""
    where = part.microgrid_of_node()
    order = {mg.id: i for i, mg in enumerate(part.microgrids)}
    pairs = set()
    for e in feeder.edges:
        if e.kind != "switch":
            continue
        a, b = where[e.a], where[e.b]
        if a != b:
            pairs.add(tuple(sorted((a, b), key=order.__getitem__)))
    return sorted(pairs, key=lambda p: (order[p[0]], order[p[1]]))


@dataclass(frozen=True)
class Scenario:
    """A coalition of houses settled jointly (``p2p=True``) or separately."""

    name: str
    kind: str  # single | pair | all
    members: tuple  # microgrid ids
    houses: frozenset
    p2p: bool


def scenario_set(part: MicrogridPartition, pairs) -> list[Scenario]:
    """Singles, neighbouring pairs and ALL, each with and without P2P.

    ALL is omitted when there is a single microgrid (it would duplicate it).
    """
    out = []

    def add(name, kind, members):
        hs = frozenset().union(*(part.by_id(m).houses for m in members))
        for p2p in (False, True):
            out.append(Scenario(name, kind, tuple(members), hs, p2p))

    for mg in part.microgrids:
        add(mg.id, "single", (mg.id,))
    for a, b in pairs:
        add(f"{a} & {b.removeprefix('MG-')}", "pair", (a, b))
    if len(part.microgrids) > 1:
        add("ALL", "all", tuple(mg.id for mg in part.microgrids))
    return out
