"""Deterministic mesoscopic traffic simulation.

Vehicles advance along fixed routes with a density-dependent edge speed
v = speed_limit * (1 - occupancy), floored at FLOOR_SPEED. Occupancies are
measured at the start of each step, before new departures enter, so a vehicle
joining an empty edge travels its first step at the speed limit. Saturated
edges and red lights hold vehicles at the edge end in FIFO order; nothing is
ever dropped.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import DisconnectedRoute, NoLight, UnknownEdge
from .roadnet import FLOOR_SPEED, NetworkState, RoadNetwork


@dataclass
class Vehicle:
    id: str
    route: tuple[str, ...]
    depart_time: float
    edge_index: int = 0
    position: float = 0.0
    speed: float = 0.0
    length: float = 5.0
    min_gap: float = 2.5
    arrive_time: float | None = None
    departed: bool = False
    _moved_step: int = field(default=-1, repr=False)

    @property
    def slot(self) -> float:
        return self.length + self.min_gap

    @property
    def current_edge(self) -> str:
        return self.route[self.edge_index]

    @property
    def remaining_route(self) -> tuple[str, ...]:
        """Edges still to be completed, including the current one."""
        if self.arrive_time is not None:
            return ()
        if not self.departed:
            return self.route
        return self.route[self.edge_index:]


@dataclass(frozen=True)
class TrafficLight:
    """Fixed-cycle signal at one junction.

    Each phase is a (green incoming-edge ids, duration) pair; the cycle
    repeats forever, shifted by ``offset`` seconds.
    """

    junction: str
    phases: tuple[tuple[frozenset[str], float], ...]
    offset: float = 0.0

    def __post_init__(self):
        if not self.phases:
            raise ValueError(f"traffic light at {self.junction} has no phases")
        for _, duration in self.phases:
            if duration <= 0:
                raise ValueError(f"traffic light at {self.junction}: phase durations must be positive")

    @property
    def cycle_length(self) -> float:
        return sum(d for _, d in self.phases)

    def _local_time(self, t: float) -> float:
        return (t + self.offset) % self.cycle_length

    def is_green(self, edge_id: str, t: float) -> bool:
        local = self._local_time(t)
        start = 0.0
        for green, duration in self.phases:
            if start <= local < start + duration:
                return edge_id in green
            start += duration
        return False  # unreachable: local < cycle_length

    def green_eta(self, edge_id: str, t: float) -> float:
        """Seconds until the edge is next green; 0 while it is green."""
        if self.is_green(edge_id, t):
            return 0.0
        local = self._local_time(t)
        start = 0.0
        waits = []
        for green, duration in self.phases:
            if edge_id in green:
                wait = start - local
                if wait < 0:
                    wait += self.cycle_length
                waits.append(wait)
            start += duration
        if not waits:
            return float("inf")
        return min(waits)


def traffic_lights_from_document(rows: list[dict]) -> dict[str, TrafficLight]:
    lights = {}
    for row in rows:
        phases = tuple(
            (frozenset(p["green"]), float(p["duration"])) for p in row["phases"]
        )
        light = TrafficLight(
            junction=str(row["junction"]),
            phases=phases,
            offset=float(row.get("offset", 0.0)),
        )
        lights[light.junction] = light
    return lights


class TrafficSim:
    """Single-threaded stepper over one road network.

    Each :meth:`step` advances the clock by ``dt`` and returns a fresh
    immutable :class:`NetworkState`; the sim never hands out internal state.
    """

    def __init__(
        self,
        network: RoadNetwork,
        lights: dict[str, TrafficLight] | None = None,
        dt: float = 1.0,
        floor_speed: float = FLOOR_SPEED,
    ):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.network = network
        self.lights = dict(lights or {})
        for junction, light in self.lights.items():
            green_edges = set().union(*(g for g, _ in light.phases))
            incoming = {e.id for e in network.in_edges(junction)}
            missing = incoming - green_edges
            if missing:
                raise ValueError(
                    f"traffic light at {junction} never turns green for {sorted(missing)}"
                )
        self.dt = dt
        self.floor_speed = floor_speed
        self.t = 0.0
        self._step_count = 0
        self._seq = 0
        self._pending: list[tuple[float, int, Vehicle]] = []  # heap by (depart, seq)
        self._on_edge: dict[str, list[Vehicle]] = {eid: [] for eid in network.edge_ids}
        self._vehicles: dict[str, Vehicle] = {}
        self._arrived: list[Vehicle] = []
        self._new_arrivals: list[Vehicle] = []
        self.n_injected = 0

    # -- bookkeeping ------------------------------------------------------

    @property
    def n_pending(self) -> int:
        return len(self._pending)

    @property
    def n_active(self) -> int:
        return sum(len(vs) for vs in self._on_edge.values())

    @property
    def n_arrived(self) -> int:
        return len(self._arrived)

    def vehicle(self, vehicle_id: str) -> Vehicle:
        return self._vehicles[vehicle_id]

    def pop_arrivals(self) -> list[Vehicle]:
        """Vehicles that arrived since the last call, in arrival order."""
        out, self._new_arrivals = self._new_arrivals, []
        return out

    # -- demand -----------------------------------------------------------

    def validate_route(self, route: tuple[str, ...] | list[str]) -> tuple[str, ...]:
        route = tuple(route)
        if not route:
            raise DisconnectedRoute("empty route")
        edges = []
        for eid in route:
            if not self.network.has_edge(eid):
                raise UnknownEdge(f"no edge {eid!r}")
            edges.append(self.network.edge(eid))
        for a, b in zip(edges, edges[1:]):
            if a.to != b.frm:
                raise DisconnectedRoute(f"edges {a.id} and {b.id} do not connect")
        return route

    def inject_vehicle(
        self,
        route: tuple[str, ...] | list[str],
        depart_time: float | None = None,
        vehicle_id: str | None = None,
        length: float = 5.0,
        min_gap: float = 2.5,
    ) -> str:
        route = self.validate_route(route)
        depart = self.t if depart_time is None else float(depart_time)
        if depart < self.t:
            raise ValueError(f"depart time {depart} is in the past (t={self.t})")
        vid = vehicle_id if vehicle_id is not None else f"veh{self.n_injected}"
        if vid in self._vehicles:
            raise ValueError(f"duplicate vehicle id {vid!r}")
        vehicle = Vehicle(id=vid, route=route, depart_time=depart, length=length, min_gap=min_gap)
        self._vehicles[vid] = vehicle
        heapq.heappush(self._pending, (depart, self._seq, vehicle))
        self._seq += 1
        self.n_injected += 1
        return vid

    # -- signals ----------------------------------------------------------

    def green_eta(self, junction: str, edge_id: str) -> float:
        if junction not in self.lights:
            raise NoLight(f"junction {junction!r} has no traffic light")
        return self.lights[junction].green_eta(edge_id, self.t)

    def _may_cross(self, edge_id: str) -> bool:
        edge = self.network.edge(edge_id)
        light = self.lights.get(edge.to)
        if light is None:
            return True
        return light.is_green(edge_id, self.t)

    # -- stepping ---------------------------------------------------------

    def _edge_occupancy(self, edge_id: str) -> float:
        edge = self.network.edge(edge_id)
        used = sum(v.slot for v in self._on_edge[edge_id])
        return min(1.0, used / (edge.length * edge.lanes))

    def _has_room(self, edge_id: str, slot: float) -> bool:
        edge = self.network.edge(edge_id)
        queue = self._on_edge[edge_id]
        used = sum(v.slot for v in queue)
        if used + slot > edge.length * edge.lanes:
            return False
        # FIFO entry: the tail vehicle must have cleared one slot of the lane.
        return not queue or queue[-1].position >= slot

    def _activate_departures(self) -> None:
        due = []
        while self._pending and self._pending[0][0] <= self.t:
            due.append(heapq.heappop(self._pending))
        for depart, seq, vehicle in due:
            first = vehicle.route[0]
            if self._has_room(first, vehicle.slot):
                vehicle.position = 0.0
                vehicle.departed = True
                self._on_edge[first].append(vehicle)
            else:
                # Saturated entry edge: keep queued with the original key so
                # departures stay FIFO.
                heapq.heappush(self._pending, (depart, seq, vehicle))

    def step(self) -> NetworkState:
        # Speeds come from the occupancy snapshot before departures enter.
        speeds = {}
        for eid in self.network.edge_ids:
            limit = self.network.edge(eid).speed_limit
            rho = self._edge_occupancy(eid)
            speeds[eid] = float(np.clip(limit * (1.0 - rho), self.floor_speed, limit))

        self._activate_departures()

        self._step_count += 1
        realized: dict[str, list[float]] = {eid: [] for eid in self.network.edge_ids}
        for eid in self.network.edge_ids:
            edge = self.network.edges[self.network.edge_row(eid)]
            queue = self._on_edge[eid]
            leader_pos: float | None = None
            for vehicle in list(queue):
                if vehicle._moved_step == self._step_count:
                    leader_pos = vehicle.position
                    continue
                vehicle._moved_step = self._step_count
                start_pos = vehicle.position
                target = start_pos + speeds[eid] * self.dt
                if leader_pos is not None:
                    target = min(target, leader_pos - vehicle.slot)
                target = max(target, start_pos)
                if target >= edge.length:
                    moved = edge.length - start_pos
                    if vehicle.edge_index == len(vehicle.route) - 1:
                        queue.remove(vehicle)
                        vehicle.arrive_time = self.t + self.dt
                        vehicle.speed = moved / self.dt
                        self._arrived.append(vehicle)
                        self._new_arrivals.append(vehicle)
                        continue
                    next_eid = vehicle.route[vehicle.edge_index + 1]
                    if self._may_cross(eid) and self._has_room(next_eid, vehicle.slot):
                        queue.remove(vehicle)
                        vehicle.edge_index += 1
                        vehicle.position = 0.0
                        self._on_edge[next_eid].append(vehicle)
                        leader_pos = None  # leader left the edge
                    else:
                        vehicle.position = edge.length
                        leader_pos = vehicle.position
                else:
                    moved = target - start_pos
                    vehicle.position = target
                    leader_pos = vehicle.position
                vehicle.speed = moved / self.dt
                realized[vehicle.current_edge].append(vehicle.speed)

        self.t += self.dt
        return self._snapshot(realized)

    def _snapshot(self, realized: dict[str, list[float]] | None = None) -> NetworkState:
        n = self.network.num_edges
        occupancy = np.zeros(n)
        usage = np.zeros(n)
        mean_speed = np.zeros(n)
        travel_time = np.zeros(n)
        future = np.zeros(n)
        for i, eid in enumerate(self.network.edge_ids):
            edge = self.network.edges[i]
            occupancy[i] = self._edge_occupancy(eid)
            queue = self._on_edge[eid]
            usage[i] = len(queue)
            if realized is not None and realized.get(eid):
                mean_speed[i] = float(np.mean(realized[eid]))
            elif queue:
                mean_speed[i] = float(np.mean([v.speed for v in queue]))
            else:
                mean_speed[i] = edge.speed_limit
            travel_time[i] = edge.length / max(mean_speed[i], self.floor_speed)
        for vehicle in self._vehicles.values():
            for eid in vehicle.remaining_route:
                future[self.network.edge_row(eid)] += 1
        return NetworkState(
            timestamp=self.t,
            edge_ids=self.network.edge_ids,
            occupancy=occupancy,
            usage=usage,
            mean_speed=mean_speed,
            travel_time=travel_time,
            future_usage=future,
        )

    def state(self) -> NetworkState:
        """Snapshot of the current instant without advancing the clock."""
        return self._snapshot()

    def run(self, seconds: float) -> NetworkState:
        steps = max(1, round(seconds / self.dt))
        state = self.state()
        for _ in range(steps):
            state = self.step()
        return state

    def run_until_empty(self, horizon: float = 36000.0) -> NetworkState:
        state = self.state()
        while (self.n_pending or self.n_active) and self.t < horizon:
            state = self.step()
        return state
