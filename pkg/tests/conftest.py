import pytest

from busmob.geo import CartPoint
from busmob.network import Edge, Node, RoadNetwork


def build_net(nodes, edges, connections=(), speed=10.0):
    """nodes: {id: (x, y)}; edges: {id: (from, to)} or {id: (from, to, speed)}."""
    ns = {k: Node(k, CartPoint(*v)) for k, v in nodes.items()}
    es = {}
    for eid, spec in edges.items():
        a, b = spec[0], spec[1]
        v = spec[2] if len(spec) > 2 else speed
        length = ((ns[a].pos.x - ns[b].pos.x) ** 2 + (ns[a].pos.y - ns[b].pos.y) ** 2) ** 0.5
        es[eid] = Edge(eid, a, b, length, v)
    return RoadNetwork(ns, es, frozenset(connections))


@pytest.fixture
def line_net():
    """Single edge (0,0) -> (100,0) at 10 m/s."""
    return build_net({"A": (0, 0), "B": (100, 0)}, {"e": ("A", "B")})


@pytest.fixture
def l_net():
    """e1 east (0,0)->(100,0), e2 north (100,0)->(100,100), connection registered."""
    return build_net(
        {"A": (0, 0), "B": (100, 0), "C": (100, 100)},
        {"e1": ("A", "B"), "e2": ("B", "C")},
        {("e1", "e2")},
    )
