"""Bundled road-network scenarios and scenario file IO.

A scenario document is the network description plus an optional
``traffic_lights`` section; the bundled scenarios are generated
deterministically in code so they need no data files.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ParseError
from .roadnet import Junction, RoadEdge, RoadNetwork, network_from_document
from .simulator import TrafficLight, traffic_lights_from_document

GRID_EDGE_LENGTH = 100.0
GRID_SPEED_LIMIT = 13.89  # 50 km/h


@dataclass(frozen=True)
class Scenario:
    name: str
    network: RoadNetwork
    lights: dict[str, TrafficLight] = field(default_factory=dict)

    def to_document(self) -> dict:
        doc = self.network.to_document()
        doc["name"] = self.name
        if self.lights:
            doc["traffic_lights"] = [
                {
                    "junction": light.junction,
                    "offset": light.offset,
                    "phases": [
                        {"green": sorted(green), "duration": duration}
                        for green, duration in light.phases
                    ],
                }
                for light in self.lights.values()
            ]
        return doc


def grid4x4(with_lights: bool = True) -> Scenario:
    """4x4 junction grid with bidirectional 100 m single-lane streets.

    The four interior junctions carry two-phase signals alternating between
    the vertical and horizontal approaches.
    """
    interior = {(1, 1), (1, 2), (2, 1), (2, 2)}
    junctions = [
        Junction(
            id=f"J{r}{c}",
            x=100.0 * c,
            y=100.0 * r,
            has_traffic_light=with_lights and (r, c) in interior,
        )
        for r in range(4)
        for c in range(4)
    ]
    edges = []
    for r in range(4):
        for c in range(4):
            for dr, dc in ((0, 1), (1, 0)):
                r2, c2 = r + dr, c + dc
                if r2 > 3 or c2 > 3:
                    continue
                for a, b in ((f"J{r}{c}", f"J{r2}{c2}"), (f"J{r2}{c2}", f"J{r}{c}")):
                    edges.append(
                        RoadEdge(
                            frm=a,
                            to=b,
                            length=GRID_EDGE_LENGTH,
                            lanes=1,
                            road_type="straight",
                            speed_limit=GRID_SPEED_LIMIT,
                        )
                    )
    network = RoadNetwork(junctions, edges, name="grid4x4")
    lights = {}
    if with_lights:
        for r, c in sorted(interior):
            junction = f"J{r}{c}"
            vertical = frozenset(
                e.id for e in network.in_edges(junction) if e.frm[1] != junction[1]
            )
            horizontal = frozenset(
                e.id for e in network.in_edges(junction) if e.frm[1] == junction[1]
            )
            lights[junction] = TrafficLight(
                junction=junction,
                phases=((vertical, 30.0), (horizontal, 30.0)),
                offset=0.0,
            )
    return Scenario("grid4x4", network, lights)


def grid4x4_trap() -> Scenario:
    """grid4x4 variant with short single-lane diagonal shortcuts.

    The diagonals undercut the grid distance between consecutive diagonal
    junctions (110 m vs 200 m) but hold barely a dozen vehicles, so under
    load they jam while the parallel grid streets keep flowing. Distance-only
    routing funnels everything through them.
    """
    base = grid4x4(with_lights=False)
    junctions = list(base.network.junctions.values())
    edges = list(base.network.edges)
    for (a, b) in (("J00", "J11"), ("J11", "J22"), ("J22", "J33")):
        for frm, to in ((a, b), (b, a)):
            edges.append(
                RoadEdge(
                    frm=frm,
                    to=to,
                    length=110.0,
                    lanes=1,
                    road_type="curved",
                    speed_limit=GRID_SPEED_LIMIT,
                )
            )
    return Scenario("grid4x4-trap", RoadNetwork(junctions, edges, name="grid4x4-trap"), {})


def twolane_vs_onelane(columns: int = 6) -> Scenario:
    """Two parallel corridors with a deliberate lane imbalance.

    The top corridor (A row) is two-lane, the bottom corridor (B row) and all
    connecting rungs are single-lane, echoing networks where one-lane roads
    outnumber two-lane ones. Corridor travel times are identical, so route
    choice between them is purely a lane-count preference.
    """
    junctions = []
    for c in range(columns):
        junctions.append(Junction(id=f"A{c}", x=150.0 * c, y=100.0))
        junctions.append(Junction(id=f"B{c}", x=150.0 * c, y=0.0))
    edges = []

    def both_ways(a: str, b: str, length: float, lanes: int):
        for frm, to in ((a, b), (b, a)):
            edges.append(
                RoadEdge(
                    frm=frm,
                    to=to,
                    length=length,
                    lanes=lanes,
                    road_type="straight",
                    speed_limit=GRID_SPEED_LIMIT,
                )
            )

    for c in range(columns - 1):
        both_ways(f"A{c}", f"A{c + 1}", 150.0, lanes=2)
        both_ways(f"B{c}", f"B{c + 1}", 150.0, lanes=1)
    for c in range(columns):
        both_ways(f"A{c}", f"B{c}", 100.0, lanes=1)
    network = RoadNetwork(junctions, edges, name="twolane-vs-onelane")
    return Scenario("twolane-vs-onelane", network, {})


BUILTIN_SCENARIOS = {
    "grid4x4": grid4x4,
    "grid4x4-trap": grid4x4_trap,
    "twolane-vs-onelane": twolane_vs_onelane,
}


def load_scenario(source: str | Path) -> Scenario:
    """Resolve a bundled scenario name or load a scenario document."""
    if isinstance(source, str) and source in BUILTIN_SCENARIOS:
        return BUILTIN_SCENARIOS[source]()
    path = Path(source)
    if not path.exists():
        raise ParseError(
            f"unknown scenario {source!r}: not a bundled name "
            f"({', '.join(sorted(BUILTIN_SCENARIOS))}) and no such file"
        )
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: scenario document must be a mapping")
    network = network_from_document(doc, name=path.stem)
    lights = traffic_lights_from_document(doc.get("traffic_lights", []))
    return Scenario(network.name, network, lights)


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario.to_document(), indent=2, sort_keys=True) + "\n")
