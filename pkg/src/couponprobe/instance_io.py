"""Reading and writing the textual instance format.

A file holds one instance as directive lines; '#' starts a comment anywhere:

    nodes 5
    edge 0 1 0.4          # source target probability
    coupons 1.0 2.0       # strictly increasing positive values
    attract 0.3 0.7       # one row per user, one column per coupon
    ...
    K 1
    B 3.0
    W 2                   # optional cap on distinct users probed

Errors carry the offending line number and, for attractiveness problems, the
user and coupon values involved.
"""

from __future__ import annotations

from .influence import Graph
from .model import Instance


class InstanceFormatError(ValueError):
    def __init__(self, path: str, line: int | None, message: str):
        self.path = path
        self.line = line
        self.message = message
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"{where}: {message}")


def _parse_int(path: str, lineno: int, token: str, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise InstanceFormatError(path, lineno, f"{what} must be an integer, got {token!r}") from None


def _parse_float(path: str, lineno: int, token: str, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise InstanceFormatError(path, lineno, f"{what} must be a number, got {token!r}") from None


def load_instance(path: str) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()

    nodes: int | None = None
    edges: list[tuple[int, int, float]] = []
    edge_pairs: dict[tuple[int, int], int] = {}
    coupons: list[float] | None = None
    attract: list[tuple[float, ...]] = []
    K: int | None = None
    B: float | None = None
    W: int | None = None

    for lineno, raw in enumerate(lines, 1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        parts = text.split()
        key, args = parts[0], parts[1:]
        if key == "nodes":
            if nodes is not None:
                raise InstanceFormatError(path, lineno, "duplicate 'nodes' directive")
            if len(args) != 1:
                raise InstanceFormatError(path, lineno, "'nodes' takes exactly one value")
            nodes = _parse_int(path, lineno, args[0], "node count")
            if nodes < 1:
                raise InstanceFormatError(path, lineno, f"node count must be positive, got {nodes}")
        elif key == "edge":
            if nodes is None:
                raise InstanceFormatError(path, lineno, "'edge' must come after 'nodes'")
            if len(args) != 3:
                raise InstanceFormatError(path, lineno, "'edge' takes: source target probability")
            u = _parse_int(path, lineno, args[0], "edge source")
            v = _parse_int(path, lineno, args[1], "edge target")
            p = _parse_float(path, lineno, args[2], "edge probability")
            if not (0 <= u < nodes and 0 <= v < nodes):
                raise InstanceFormatError(path, lineno, f"edge endpoint out of range ({u}, {v})")
            if u == v:
                raise InstanceFormatError(path, lineno, f"self-loop at node {u}")
            if (u, v) in edge_pairs:
                raise InstanceFormatError(
                    path, lineno, f"duplicate edge ({u}, {v}); first seen on line {edge_pairs[(u, v)]}"
                )
            if not 0.0 <= p <= 1.0:
                raise InstanceFormatError(path, lineno, f"edge probability {p} outside [0, 1]")
            edge_pairs[(u, v)] = lineno
            edges.append((u, v, p))
        elif key == "coupons":
            if coupons is not None:
                raise InstanceFormatError(path, lineno, "duplicate 'coupons' directive")
            if not args:
                raise InstanceFormatError(path, lineno, "'coupons' needs at least one value")
            coupons = [_parse_float(path, lineno, t, "coupon value") for t in args]
            for i, c in enumerate(coupons):
                if c <= 0.0:
                    raise InstanceFormatError(path, lineno, f"coupon value {c} is not positive")
                if i > 0 and c <= coupons[i - 1]:
                    raise InstanceFormatError(
                        path, lineno, f"coupon values must be strictly increasing ({coupons[i-1]} then {c})"
                    )
        elif key == "attract":
            if coupons is None:
                raise InstanceFormatError(path, lineno, "'attract' must come after 'coupons'")
            if nodes is None:
                raise InstanceFormatError(path, lineno, "'attract' must come after 'nodes'")
            user = len(attract)
            if user >= nodes:
                raise InstanceFormatError(path, lineno, f"more 'attract' rows than the {nodes} declared users")
            if len(args) != len(coupons):
                raise InstanceFormatError(
                    path, lineno,
                    f"user {user}: expected {len(coupons)} attractiveness values, got {len(args)}",
                )
            row = tuple(_parse_float(path, lineno, t, "attractiveness") for t in args)
            for i, p in enumerate(row):
                if not 0.0 <= p <= 1.0:
                    raise InstanceFormatError(path, lineno, f"user {user}: attractiveness {p} outside [0, 1]")
                if i > 0 and p < row[i - 1]:
                    raise InstanceFormatError(
                        path, lineno,
                        f"user {user}: attractiveness drops from {row[i-1]} at coupon value "
                        f"{coupons[i-1]} to {p} at coupon value {coupons[i]}; rows must be non-decreasing",
                    )
            attract.append(row)
        elif key == "K":
            if len(args) != 1:
                raise InstanceFormatError(path, lineno, "'K' takes exactly one value")
            K = _parse_int(path, lineno, args[0], "K")
            if K < 0:
                raise InstanceFormatError(path, lineno, f"K must be non-negative, got {K}")
        elif key == "B":
            if len(args) != 1:
                raise InstanceFormatError(path, lineno, "'B' takes exactly one value")
            B = _parse_float(path, lineno, args[0], "B")
            if B <= 0.0:
                raise InstanceFormatError(path, lineno, f"B must be positive, got {B}")
        elif key == "W":
            if len(args) != 1:
                raise InstanceFormatError(path, lineno, "'W' takes exactly one value")
            W = _parse_int(path, lineno, args[0], "W")
            if W < 0:
                raise InstanceFormatError(path, lineno, f"W must be non-negative, got {W}")
        else:
            raise InstanceFormatError(path, lineno, f"unknown directive {key!r}")

    for name, value in (("nodes", nodes), ("coupons", coupons), ("K", K), ("B", B)):
        if value is None:
            raise InstanceFormatError(path, None, f"missing required directive {name!r}")
    if len(attract) != nodes:
        raise InstanceFormatError(
            path, None, f"expected {nodes} 'attract' rows, found {len(attract)}"
        )

    graph = Graph(node_count=nodes, edges=tuple(edges))
    return Instance(
        graph=graph,
        coupons=tuple(coupons),
        attractiveness=tuple(attract),
        K=K,
        B=B,
        W=W,
    )


def save_instance(instance: Instance, path: str) -> None:
    """Write an instance back out; load_instance(save_instance(x)) == x."""
    lines = [f"nodes {instance.graph.node_count}"]
    for u, v, p in instance.graph.edges:
        lines.append(f"edge {u} {v} {p!r}")
    lines.append("coupons " + " ".join(repr(c) for c in instance.coupons))
    for row in instance.attractiveness:
        lines.append("attract " + " ".join(repr(p) for p in row))
    lines.append(f"K {instance.K}")
    lines.append(f"B {instance.B!r}")
    if instance.W is not None:
        lines.append(f"W {instance.W}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
