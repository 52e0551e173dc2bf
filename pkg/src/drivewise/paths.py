"""Candidate route enumeration: the K cheapest simple paths under live
travel times, plus ideal/actual route timing and selected-path marking.

Ranking weights are the per-edge travel times xi(t); when a signal-timing
provider is supplied, the expected wait for the next green phase at each
signalised junction is added to the edge leading into it. Ties are broken
lexicographically by edge-id sequence so candidate sets are reproducible.
"""
from __future__ import annotations

import heapq
from collections.abc import Callable
from dataclasses import dataclass

from .errors import DisconnectedRoute, EmptyRoute, NoPath, UnknownEdge
from .roadnet import NetworkState, RoadNetwork

# (junction id, incoming edge id) -> seconds until green; None disables the term
GreenEta = Callable[[str, str], float]


@dataclass(frozen=True)
class CandidateRouteSet:
    """Action space for one routing request: up to K routes, cheapest first."""

    source: str
    destination: str
    routes: tuple[tuple[str, ...], ...]
    costs: tuple[float, ...]

    def __post_init__(self):
        if len(self.routes) != len(self.costs):
            raise ValueError("routes and costs differ in length")
        if any(b < a for a, b in zip(self.costs, self.costs[1:])):
            raise ValueError("candidate costs must be non-decreasing")
        if len(set(self.routes)) != len(self.routes):
            raise ValueError("candidate routes must be distinct")

    def __len__(self) -> int:
        return len(self.routes)


def validate_route(network: RoadNetwork, route: tuple[str, ...] | list[str]) -> tuple[str, ...]:
    route = tuple(route)
    edges = [network.edge(eid) for eid in route]
    for a, b in zip(edges, edges[1:]):
        if a.to != b.frm:
            raise DisconnectedRoute(f"edges {a.id} and {b.id} do not connect")
    return route


def ideal_time(network: RoadNetwork, route: tuple[str, ...] | list[str]) -> float:
    """Free-flow traversal time: sum of length / speed limit per edge.

    Junction crossing and signal waits are deliberately excluded.
    """
    route = validate_route(network, route)
    if not route:
        raise EmptyRoute("route has no edges")
    return sum(network.edge(eid).free_flow_time for eid in route)


def actual_time(
    network: RoadNetwork, state: NetworkState, route: tuple[str, ...] | list[str]
) -> float:
    """Traversal time under current average speeds (congestion included)."""
    route = validate_route(network, route)
    if not route:
        raise EmptyRoute("route has no edges")
    return float(sum(state.travel_time[state.row(eid)] for eid in route))


def mark_selected_path(
    state: NetworkState, route: tuple[str, ...] | list[str]
) -> NetworkState:
    """Copy of the state with the selected-path indicator set on route edges."""
    rows = [state.row(eid) for eid in route]
    return state.with_selected(rows)


def _edge_weights(
    network: RoadNetwork, state: NetworkState, green_eta: GreenEta | None
) -> dict[str, float]:
    weights = {}
    for eid in network.edge_ids:
        w = float(state.travel_time[state.row(eid)])
        if green_eta is not None:
            to = network.edge(eid).to
            if network.junctions[to].has_traffic_light:
                w += float(green_eta(to, eid))
        weights[eid] = w
    return weights


def _lex_dijkstra(
    network: RoadNetwork,
    weights: dict[str, float],
    source: str,
    destination: str,
    banned_nodes: frozenset[str] = frozenset(),
    banned_edges: frozenset[str] = frozenset(),
) -> tuple[float, tuple[str, ...]] | None:
    """Cheapest path as (cost, edge ids); cost ties resolved toward the
    lexicographically smallest edge-id sequence.

    All weights are strictly positive, so the lexicographic refinement keeps
    the optimal-substructure property and label setting stays valid.
    """
    best: dict[str, tuple[float, tuple[str, ...]]] = {}
    heap: list[tuple[float, tuple[str, ...], str]] = [(0.0, (), source)]
    while heap:
        cost, seq, node = heapq.heappop(heap)
        if node in best and best[node] <= (cost, seq):
            continue
        best[node] = (cost, seq)
        if node == destination:
            return cost, seq
        for edge in network.out_edges(node):
            if edge.id in banned_edges or edge.to in banned_nodes:
                continue
            label = (cost + weights[edge.id], seq + (edge.id,))
            if edge.to in best and best[edge.to] <= label:
                continue
            heapq.heappush(heap, (label[0], label[1], edge.to))
    return None


def shortest_path(
    network: RoadNetwork,
    weights: dict[str, float],
    source: str,
    destination: str,
) -> tuple[float, tuple[str, ...]]:
    found = _lex_dijkstra(network, weights, source, destination)
    if found is None:
        raise NoPath(f"no route from {source!r} to {destination!r}")
    return found


def _route_nodes(network: RoadNetwork, route: tuple[str, ...], source: str) -> list[str]:
    nodes = [source]
    for eid in route:
        nodes.append(network.edge(eid).to)
    return nodes


def _route_cost(weights: dict[str, float], route: tuple[str, ...]) -> float:
    cost = 0.0
    for eid in route:
        cost += weights[eid]
    return cost


def k_candidate_paths(
    network: RoadNetwork,
    state: NetworkState,
    source: str,
    destination: str,
    k: int,
    green_eta: GreenEta | None = None,
) -> CandidateRouteSet:
    """Yen-style enumeration of the K cheapest loopless routes.

    Returns fewer than K routes when the graph does not contain K simple
    paths. Candidate order is total: (cost, edge-id sequence).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if source == destination:
        raise ValueError("source and destination must differ")
    for junction in (source, destination):
        if junction not in network.junctions:
            raise UnknownEdge(f"no junction {junction!r}")
    weights = _edge_weights(network, state, green_eta)

    first = _lex_dijkstra(network, weights, source, destination)
    if first is None:
        raise NoPath(f"no route from {source!r} to {destination!r}")
    accepted: list[tuple[float, tuple[str, ...]]] = [first]
    candidates: list[tuple[float, tuple[str, ...]]] = []
    seen: set[tuple[str, ...]] = {first[1]}

    while len(accepted) < k:
        _, prev_route = accepted[-1]
        prev_nodes = _route_nodes(network, prev_route, source)
        for i in range(len(prev_route)):
            spur_node = prev_nodes[i]
            root = prev_route[:i]
            root_cost = sum(weights[eid] for eid in root)
            banned_edges = {
                route[i]
                for _, route in accepted
                if len(route) > i and route[:i] == root
            }
            banned_edges.update(
                route[i]
                for _, route in candidates
                if len(route) > i and route[:i] == root
            )
            banned_nodes = frozenset(prev_nodes[:i])
            spur = _lex_dijkstra(
                network,
                weights,
                spur_node,
                destination,
                banned_nodes=banned_nodes,
                banned_edges=frozenset(banned_edges),
            )
            if spur is None:
                continue
            route = root + spur[1]
            if route not in seen:
                seen.add(route)
                # Left-to-right resummation keeps costs bit-identical with an
                # independent enumeration of the same path.
                heapq.heappush(candidates, (_route_cost(weights, route), route))
        if not candidates:
            break
        accepted.append(heapq.heappop(candidates))

    routes = tuple(route for _, route in accepted)
    costs = tuple(_route_cost(weights, route) for route in routes)
    return CandidateRouteSet(source=source, destination=destination, routes=routes, costs=costs)
