"""Directed road-network graph, per-edge dynamics and state encoding.

The network is immutable after construction. Dynamic edge quantities live in
:class:`NetworkState` snapshots that producers (the simulator) replace rather
than mutate, so snapshots are safe to share across threads.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import MissingDynamics, ParseError, TopologyError, UnknownEdge

ROAD_TYPES = ("straight", "curved", "ramp")
COMPLEXITIES = ("simple", "complex")
TRAFFIC_CONDITIONS = ("low", "high")
LANE_BUCKETS = ("1", "2", "3+")

# One stopped vehicle (default 5 m body + 2.5 m minimum gap) claims this many
# meters of lane; jam capacity of an edge is length * lanes / slot.
VEHICLE_SLOT_M = 7.5
# Congestion speed floor used by the simulator and by travel-time bounds.
FLOOR_SPEED = 0.5
# Occupancy at or above which the traffic condition attribute flips to "high".
KAPPA_THRESHOLD = 0.5

# Fixed column order of the encoded state matrix.
FEATURE_COLUMNS = (
    "occupancy",
    "usage",
    "mean_speed",
    "travel_time",
    "lanes",
    "length",
    "road_type=straight",
    "road_type=curved",
    "road_type=ramp",
    "complexity=simple",
    "complexity=complex",
    "future_usage",
    "selected_path",
)
SELECTED_COLUMN = FEATURE_COLUMNS.index("selected_path")


@dataclass(frozen=True)
class Junction:
    id: str
    x: float
    y: float
    has_traffic_light: bool = False
    complexity: str = "simple"

    def __post_init__(self):
        if self.complexity not in COMPLEXITIES:
            raise ValueError(f"unknown junction complexity {self.complexity!r}")
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise ValueError(f"junction {self.id}: position must be finite")


@dataclass(frozen=True)
class RoadEdge:
    frm: str
    to: str
    length: float
    lanes: int
    road_type: str
    speed_limit: float

    def __post_init__(self):
        if self.frm == self.to:
            raise ValueError(f"self-loop edge at junction {self.frm}")
        if self.length <= 0:
            raise ValueError(f"edge {self.id}: length must be positive")
        if self.lanes <= 0:
            raise ValueError(f"edge {self.id}: lanes must be positive")
        if self.speed_limit <= 0:
            raise ValueError(f"edge {self.id}: speed limit must be positive")
        if self.road_type not in ROAD_TYPES:
            raise ValueError(f"edge {self.id}: unknown road type {self.road_type!r}")

    @property
    def id(self) -> str:
        return f"{self.frm}->{self.to}"

    @property
    def free_flow_time(self) -> float:
        return self.length / self.speed_limit

    @property
    def jam_slots(self) -> float:
        """Vehicles the edge can hold bumper to bumper across all lanes."""
        return self.length * self.lanes / VEHICLE_SLOT_M


@dataclass(frozen=True)
class EnvironmentVector:
    """Per-edge attribute tuple used for preference matching."""

    road_type: str
    lanes: int
    complexity: str
    traffic_condition: str

    def encode(self) -> np.ndarray:
        return encode_attributes(
            self.road_type, self.lanes, self.complexity, self.traffic_condition
        )


def lane_bucket(lanes: int) -> str:
    if lanes <= 1:
        return "1"
    if lanes == 2:
        return "2"
    return "3+"


def encode_attributes(
    road_type: str, lanes: int, complexity: str, condition: str
) -> np.ndarray:
    """One-hot concatenation [road type(3), lane bucket(3), complexity(2), condition(2)].

    The same layout encodes both road environment vectors and driver
    preference vectors so the two are directly comparable.
    """
    vec = np.zeros(10)
    vec[ROAD_TYPES.index(road_type)] = 1.0
    vec[3 + LANE_BUCKETS.index(lane_bucket(lanes))] = 1.0
    vec[6 + COMPLEXITIES.index(complexity)] = 1.0
    vec[8 + TRAFFIC_CONDITIONS.index(condition)] = 1.0
    return vec


ATTRIBUTE_BLOCKS = {
    "road_type": slice(0, 3),
    "lanes": slice(3, 6),
    "complexity": slice(6, 8),
    "traffic_condition": slice(8, 10),
}


@dataclass(frozen=True)
class GraphTopology:
    """Plain-array view of the directed graph for the Q-network."""

    num_nodes: int
    edge_src: np.ndarray
    edge_dst: np.ndarray


class RoadNetwork:
    """Validated directed road graph with O(degree) adjacency queries.

    Edges are kept in canonical lexicographic (from, to) order; every state
    encoding, feature matrix and checkpoint relies on that order being stable.
    """

    def __init__(self, junctions: list[Junction], edges: list[RoadEdge], name: str = ""):
        self.name = name
        self.junctions: dict[str, Junction] = {}
        for j in junctions:
            if j.id in self.junctions:
                raise TopologyError(f"duplicate junction id {j.id!r}")
            self.junctions[j.id] = j
        seen: set[tuple[str, str]] = set()
        for e in edges:
            for end in (e.frm, e.to):
                if end not in self.junctions:
                    raise TopologyError(f"edge {e.id} references missing junction {end!r}")
            if (e.frm, e.to) in seen:
                raise TopologyError(f"duplicate edge {e.id}")
            seen.add((e.frm, e.to))
        self.edges: tuple[RoadEdge, ...] = tuple(sorted(edges, key=lambda e: (e.frm, e.to)))
        self.edge_ids: tuple[str, ...] = tuple(e.id for e in self.edges)
        self._edge_index = {e.id: i for i, e in enumerate(self.edges)}
        self._out: dict[str, list[RoadEdge]] = {j: [] for j in self.junctions}
        self._in: dict[str, list[RoadEdge]] = {j: [] for j in self.junctions}
        for e in self.edges:
            self._out[e.frm].append(e)
            self._in[e.to].append(e)
        self.node_ids: tuple[str, ...] = tuple(sorted(self.junctions))
        self._node_index = {j: i for i, j in enumerate(self.node_ids)}

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def num_junctions(self) -> int:
        return len(self.junctions)

    def edge(self, edge_id: str) -> RoadEdge:
        try:
            return self.edges[self._edge_index[edge_id]]
        except KeyError:
            raise UnknownEdge(f"no edge {edge_id!r}") from None

    def edge_row(self, edge_id: str) -> int:
        try:
            return self._edge_index[edge_id]
        except KeyError:
            raise UnknownEdge(f"no edge {edge_id!r}") from None

    def has_edge(self, edge_id: str) -> bool:
        return edge_id in self._edge_index

    def out_edges(self, junction_id: str) -> list[RoadEdge]:
        return self._out[junction_id]

    def in_edges(self, junction_id: str) -> list[RoadEdge]:
        return self._in[junction_id]

    def topology(self) -> GraphTopology:
        src = np.array([self._node_index[e.frm] for e in self.edges], dtype=np.int64)
        dst = np.array([self._node_index[e.to] for e in self.edges], dtype=np.int64)
        return GraphTopology(self.num_junctions, src, dst)

    # static normalization bounds
    def max_length(self) -> float:
        return max(e.length for e in self.edges)

    def max_lanes(self) -> int:
        return max(e.lanes for e in self.edges)

    def to_document(self) -> dict:
        return {
            "name": self.name,
            "junctions": [
                {
                    "id": j.id,
                    "x": j.x,
                    "y": j.y,
                    "traffic_light": j.has_traffic_light,
                    "complexity": j.complexity,
                }
                for j in self.junctions.values()
            ],
            "edges": [
                {
                    "from": e.frm,
                    "to": e.to,
                    "length": e.length,
                    "lanes": e.lanes,
                    "road_type": e.road_type,
                    "speed_limit": e.speed_limit,
                }
                for e in self.edges
            ],
        }


def network_from_document(doc: dict, name: str = "") -> RoadNetwork:
    """Build a validated network from a parsed description document."""
    if not isinstance(doc, dict):
        raise ParseError("network document must be a mapping")
    for key in ("junctions", "edges"):
        if key not in doc:
            raise ParseError(f"network document lacks {key!r} section")
    try:
        junctions = [
            Junction(
                id=str(row["id"]),
                x=float(row["x"]),
                y=float(row["y"]),
                has_traffic_light=bool(row.get("traffic_light", False)),
                complexity=str(row.get("complexity", "simple")),
            )
            for row in doc["junctions"]
        ]
        edges = [
            RoadEdge(
                frm=str(row["from"]),
                to=str(row["to"]),
                length=float(row["length"]),
                lanes=int(row["lanes"]),
                road_type=str(row.get("road_type", "straight")),
                speed_limit=float(row["speed_limit"]),
            )
            for row in doc["edges"]
        ]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed network document: {exc}") from exc
    return RoadNetwork(junctions, edges, name=str(doc.get("name", name)))


def load_network(source: str | Path | dict) -> RoadNetwork:
    """Load a network description from a YAML/JSON file or a parsed mapping."""
    if isinstance(source, dict):
        return network_from_document(source)
    path = Path(source)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return network_from_document(doc, name=path.stem)


def save_network(network: RoadNetwork, path: str | Path) -> None:
    Path(path).write_text(json.dumps(network.to_document(), indent=2, sort_keys=True) + "\n")


@dataclass(frozen=True)
class EdgeDynamics:
    """Dynamic quantities of one edge at one instant."""

    occupancy: float
    usage: float
    mean_speed: float
    travel_time: float
    future_usage: float
    timestamp: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.occupancy <= 1.0:
            raise ValueError(f"occupancy {self.occupancy} outside [0, 1]")
        if self.usage < 0 or self.mean_speed < 0 or self.future_usage < 0:
            raise ValueError("usage, mean speed and future usage must be non-negative")
        if self.travel_time <= 0:
            raise ValueError("travel time must be positive")


@dataclass(frozen=True)
class NetworkState:
    """Immutable per-edge dynamics snapshot, aligned with canonical edge order."""

    timestamp: float
    edge_ids: tuple[str, ...]
    occupancy: np.ndarray
    usage: np.ndarray
    mean_speed: np.ndarray
    travel_time: np.ndarray
    future_usage: np.ndarray
    selected: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        n = len(self.edge_ids)
        if self.selected is None:
            object.__setattr__(self, "selected", np.zeros(n))
        for name in ("occupancy", "usage", "mean_speed", "travel_time", "future_usage", "selected"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise MissingDynamics(f"{name} has {arr.shape[0] if arr.ndim else 0} rows, expected {n}")
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def row(self, edge_id: str) -> int:
        try:
            return self.edge_ids.index(edge_id)
        except ValueError:
            raise UnknownEdge(f"no edge {edge_id!r} in state") from None

    def dynamics_for(self, edge_id: str) -> EdgeDynamics:
        i = self.row(edge_id)
        return EdgeDynamics(
            occupancy=float(self.occupancy[i]),
            usage=float(self.usage[i]),
            mean_speed=float(self.mean_speed[i]),
            travel_time=float(self.travel_time[i]),
            future_usage=float(self.future_usage[i]),
            timestamp=self.timestamp,
        )

    def with_selected(self, rows: list[int]) -> "NetworkState":
        sel = np.zeros(len(self.edge_ids))
        sel[rows] = 1.0
        return NetworkState(
            timestamp=self.timestamp,
            edge_ids=self.edge_ids,
            occupancy=self.occupancy,
            usage=self.usage,
            mean_speed=self.mean_speed,
            travel_time=self.travel_time,
            future_usage=self.future_usage,
            selected=sel,
        )


def free_flow_state(network: RoadNetwork, timestamp: float = 0.0) -> NetworkState:
    """State of an empty network: every edge at its speed limit."""
    limits = np.array([e.speed_limit for e in network.edges])
    lengths = np.array([e.length for e in network.edges])
    n = network.num_edges
    return NetworkState(
        timestamp=timestamp,
        edge_ids=network.edge_ids,
        occupancy=np.zeros(n),
        usage=np.zeros(n),
        mean_speed=limits,
        travel_time=lengths / limits,
        future_usage=np.zeros(n),
    )


def state_from_mapping(
    network: RoadNetwork, dynamics: dict[str, EdgeDynamics], timestamp: float = 0.0
) -> NetworkState:
    """Assemble a state from per-edge dynamics; every edge must be covered."""
    missing = [eid for eid in network.edge_ids if eid not in dynamics]
    if missing:
        raise MissingDynamics(f"no dynamics for edges {missing[:5]}")
    rows = [dynamics[eid] for eid in network.edge_ids]
    return NetworkState(
        timestamp=timestamp,
        edge_ids=network.edge_ids,
        occupancy=np.array([d.occupancy for d in rows]),
        usage=np.array([d.usage for d in rows]),
        mean_speed=np.array([d.mean_speed for d in rows]),
        travel_time=np.array([d.travel_time for d in rows]),
        future_usage=np.array([d.future_usage for d in rows]),
    )


def environment_vector(
    network: RoadNetwork,
    state: NetworkState,
    edge_id: str,
    kappa_threshold: float = KAPPA_THRESHOLD,
) -> EnvironmentVector:
    """Road environment vector of an edge: static attributes plus the
    low/high traffic condition derived from current occupancy."""
    edge = network.edge(edge_id)
    occupancy = float(state.occupancy[state.row(edge_id)])
    condition = "high" if occupancy >= kappa_threshold else "low"
    return EnvironmentVector(
        road_type=edge.road_type,
        lanes=edge.lanes,
        complexity=network.junctions[edge.to].complexity,
        traffic_condition=condition,
    )


def encode_state(network: RoadNetwork, state: NetworkState) -> np.ndarray:
    """Encode a state snapshot as the |E| x 13 feature matrix.

    Numeric columns are min-max normalized with static bounds so values stay
    in [0, 1] regardless of load: counts against jam capacity, speeds against
    the edge speed limit, travel times between free-flow and jammed extremes.
    """
    if state.edge_ids != network.edge_ids:
        raise MissingDynamics("state edge order does not match network")
    n = network.num_edges
    lengths = np.array([e.length for e in network.edges])
    limits = np.array([e.speed_limit for e in network.edges])
    lanes = np.array([float(e.lanes) for e in network.edges])
    jam = np.array([e.jam_slots for e in network.edges])
    ff_time = lengths / limits
    jam_time = lengths / FLOOR_SPEED

    out = np.zeros((n, len(FEATURE_COLUMNS)))
    out[:, 0] = np.clip(state.occupancy, 0.0, 1.0)
    out[:, 1] = np.clip(state.usage / jam, 0.0, 1.0)
    out[:, 2] = np.clip(state.mean_speed / limits, 0.0, 1.0)
    out[:, 3] = np.clip((state.travel_time - ff_time) / (jam_time - ff_time), 0.0, 1.0)
    out[:, 4] = lanes / network.max_lanes()
    out[:, 5] = lengths / network.max_length()
    for i, e in enumerate(network.edges):
        out[i, 6 + ROAD_TYPES.index(e.road_type)] = 1.0
        out[i, 9 + COMPLEXITIES.index(network.junctions[e.to].complexity)] = 1.0
    out[:, 11] = np.clip(state.future_usage / jam, 0.0, 1.0)
    out[:, 12] = state.selected
    return out


def mark_encoded(encoded: np.ndarray, rows: list[int] | tuple[int, ...]) -> np.ndarray:
    """Copy of an encoded state matrix with the selected-path indicator set."""
    out = encoded.copy()
    out[:, SELECTED_COLUMN] = 0.0
    out[list(rows), SELECTED_COLUMN] = 1.0
    return out
