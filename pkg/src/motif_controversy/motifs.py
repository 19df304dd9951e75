"""Dyadic and triadic motifs over the overlay of reply and follow graphs.

A dyad is a user pair with at least one reply between them; its class (A-G)
combines the reply direction with the follow relation. A triad is a closed
triangle of the overlay containing at least one reply; it is coarsened into
the multiset of its three pair kinds, which gives 20 groups.
"""
from dataclasses import dataclass
from enum import Enum
from itertools import chain
from itertools import combinations_with_replacement
from math import comb
from typing import Dict
from typing import FrozenSet
from typing import List
from typing import NamedTuple
from typing import Optional
from typing import Set
from typing import Tuple

import networkx as nx

from .exceptions import NoReplyEdge
from .exceptions import SelfPair
from .thread_model import Arc
from .thread_model import FollowGraph
from .thread_model import ReplyGraph


class DyadClass(str, Enum):
    """Reply/follow configuration of a user pair with at least one reply.

    Members, replies ``u -> v`` oriented from the replier:

    * A: one-way reply, no follow
    * B: reciprocal reply, no follow
    * C: one-way reply, ``u`` follows ``v``
    * D: one-way reply, ``v`` follows ``u``
    * E: reciprocal reply, reciprocal follow
    * F: reciprocal reply, one-way follow
    * G: one-way reply, reciprocal follow
    """

    A = "A"
    B = "B"
    C = "C"
    D = "D"
    E = "E"
    F = "F"
    G = "G"


DYAD_CLASSES: Tuple[DyadClass, ...] = tuple(DyadClass)


class PairKind(str, Enum):
    """Connection type of one side of a triangle."""

    FO = "FO"  # follow only
    RO1 = "RO1"  # one-way reply, no follow
    RO2 = "RO2"  # reciprocal reply, no follow
    RF = "RF"  # reply and follow, any orientation


PAIR_KINDS: Tuple[PairKind, ...] = tuple(PairKind)

TriadGroup = Tuple[PairKind, PairKind, PairKind]

TRIAD_GROUPS: Tuple[TriadGroup, ...] = tuple(
    combinations_with_replacement(PAIR_KINDS, 3)
)


def triad_code(group: TriadGroup) -> str:
    """Canonical text code of a triad group, e.g. ``FO|RO1|RF``."""
    return "|".join(kind.value for kind in group)


TRIAD_CODES: Tuple[str, ...] = tuple(triad_code(g) for g in TRIAD_GROUPS)
_TRIAD_INDEX: Dict[TriadGroup, int] = {g: i for i, g in enumerate(TRIAD_GROUPS)}
_KIND_RANK: Dict[PairKind, int] = {k: i for i, k in enumerate(PAIR_KINDS)}


def triad_group(kinds: Tuple[PairKind, PairKind, PairKind]) -> TriadGroup:
    """Sort three pair kinds into their canonical group."""
    a, b, c = sorted(kinds, key=_KIND_RANK.__getitem__)
    return a, b, c


class Census(NamedTuple):
    """Raw counts and frequencies, in slot order."""

    counts: Tuple[int, ...]
    freq: Tuple[float, ...]


@dataclass(frozen=True)
class MotifFeatures:
    """Motif predictors of one thread plus the raw counts behind them."""

    dyad_freq: Tuple[float, ...]
    triad_freq: Tuple[float, ...]
    triangle_ratio: float
    dyad_counts: Tuple[int, ...] = (0,) * len(DYAD_CLASSES)
    triad_counts: Tuple[int, ...] = (0,) * len(TRIAD_GROUPS)
    n_reply_triangles: int = 0


def classify_dyad(u: str, v: str, rg: ReplyGraph, fg: FollowGraph) -> DyadClass:
    """Classify the reply/follow configuration of a user pair.

    Args:
        u: First user.
        v: Second user.
        rg: Reply graph holding at least one reply between ``u`` and ``v``.
        fg: Follow graph.

    Returns:
        The dyad class; it does not depend on the order of ``u`` and ``v``.

    Raises:
        SelfPair: ``u`` equals ``v``.
        NoReplyEdge: Neither user replied to the other.

    Example:
        >>> from types import MappingProxyType
        >>> rg = ReplyGraph(frozenset("uv"), MappingProxyType({("u", "v"): 1}))
        >>> classify_dyad("u", "v", rg, FollowGraph.from_edges([("v", "u")])).value
        'D'
    """
    if u == v:
        raise SelfPair(f"dyad of user {u!r} with itself")
    return _classify(u, v, rg.replies(u, v), rg.replies(v, u), fg)


def _classify(
    u: str, v: str, r_uv: bool, r_vu: bool, fg: FollowGraph
) -> DyadClass:
    if not (r_uv or r_vu):
        raise NoReplyEdge(f"no reply between {u!r} and {v!r}")
    if r_uv and r_vu:
        n_follows = fg.follows(u, v) + fg.follows(v, u)
        return (DyadClass.B, DyadClass.F, DyadClass.E)[n_follows]
    src, dst = (u, v) if r_uv else (v, u)
    forward, backward = fg.follows(src, dst), fg.follows(dst, src)
    if forward and backward:
        return DyadClass.G
    if forward:
        return DyadClass.C
    if backward:
        return DyadClass.D
    return DyadClass.A


def _normalize(counts: List[int]) -> Census:
    total = sum(counts)
    freq = tuple(c / total for c in counts) if total else (0.0,) * len(counts)
    return Census(counts=tuple(counts), freq=freq)


def _reply_pairs(rg: ReplyGraph) -> List[Arc]:
    return sorted({(u, v) if u < v else (v, u) for u, v in rg.simple_arcs})


def dyadic_census(rg: ReplyGraph, fg: FollowGraph) -> Census:
    """Count dyad classes over every user pair with a reply.

    Args:
        rg: Reply graph of one thread.
        fg: Follow graph, global or already restricted to the thread.

    Returns:
        Counts and frequencies in A..G order; zeros when there is no reply
        between distinct users.
    """
    local = fg.restrict(rg.users)
    counts = [0] * len(DYAD_CLASSES)
    rank = {c: i for i, c in enumerate(DYAD_CLASSES)}
    for u, v in _reply_pairs(rg):
        cls = _classify(u, v, rg.replies(u, v), rg.replies(v, u), local)
        counts[rank[cls]] += 1
    return _normalize(counts)


class _Overlay:
    """Undirected index over the union of reply and follow arcs."""

    def __init__(self, rg: ReplyGraph, fg: FollowGraph) -> None:
        self.reply: FrozenSet[Arc] = rg.simple_arcs
        self.follow: FrozenSet[Arc] = fg.restrict(rg.users).edges
        self.adj: Dict[str, Set[str]] = {u: set() for u in rg.users}
        for u, v in chain(self.reply, self.follow):
            self.adj[u].add(v)
            self.adj[v].add(u)

    def kind(self, u: str, v: str) -> Optional[PairKind]:
        replies = ((u, v) in self.reply) + ((v, u) in self.reply)
        follows = (u, v) in self.follow or (v, u) in self.follow
        if replies and follows:
            return PairKind.RF
        if replies == 2:
            return PairKind.RO2
        if replies == 1:
            return PairKind.RO1
        if follows:
            return PairKind.FO
        return None

    def triangles(self) -> List[Tuple[str, str, str]]:
        """Closed triples, each once, by forward neighbour intersection."""
        order = sorted(self.adj, key=lambda n: (len(self.adj[n]), n))
        rank = {n: i for i, n in enumerate(order)}
        forward = {n: {m for m in self.adj[n] if rank[m] > rank[n]} for n in order}
        found = []
        for u in order:
            for v in sorted(forward[u], key=rank.__getitem__):
                for w in sorted(forward[u] & forward[v], key=rank.__getitem__):
                    found.append((u, v, w))
        return found


def triadic_census(rg: ReplyGraph, fg: FollowGraph) -> Census:
    """Count triad groups over closed overlay triangles holding a reply.

    Args:
        rg: Reply graph of one thread.
        fg: Follow graph, global or already restricted to the thread.

    Returns:
        Counts and frequencies in :data:`TRIAD_GROUPS` order; zeros when no
        triangle qualifies.
    """
    overlay = _Overlay(rg, fg)
    counts = [0] * len(TRIAD_GROUPS)
    for u, v, w in overlay.triangles():
        kinds = (overlay.kind(u, v), overlay.kind(v, w), overlay.kind(u, w))
        if not any(k in (PairKind.RO1, PairKind.RO2, PairKind.RF) for k in kinds):
            continue
        group = triad_group(kinds)  # type: ignore[arg-type]
        counts[_TRIAD_INDEX[group]] += 1
    return _normalize(counts)


def reply_triangles(rg: ReplyGraph) -> int:
    """Number of user triples whose three pairs all exchanged a reply."""
    g = rg.to_networkx().to_undirected(as_view=False)
    return sum(nx.triangles(g).values()) // 3


def triangle_ratio(rg: ReplyGraph) -> float:
    """Closed reply triples over all possible user triples.

    Args:
        rg: Reply graph of one thread.

    Returns:
        A ratio in [0, 1]; 0 with fewer than three users.
    """
    n = len(rg.users)
    if n < 3:
        return 0.0
    return reply_triangles(rg) / comb(n, 3)


def motif_features(rg: ReplyGraph, fg: FollowGraph) -> MotifFeatures:
    """Dyadic and triadic censuses plus the triangle ratio of a thread."""
    local = fg.restrict(rg.users)
    dyads = dyadic_census(rg, local)
    triads = triadic_census(rg, local)
    n = len(rg.users)
    closed = reply_triangles(rg) if n >= 3 else 0
    return MotifFeatures(
        dyad_freq=dyads.freq,
        triad_freq=triads.freq,
        triangle_ratio=closed / comb(n, 3) if n >= 3 else 0.0,
        dyad_counts=dyads.counts,
        triad_counts=triads.counts,
        n_reply_triangles=closed,
    )
