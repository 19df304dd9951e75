"""Structural, propagation and temporal features of a thread.

These are the classical graph features the motif features are compared
against. Degrees are total (in + out) degrees; cascade depths count hops.
"""
from dataclasses import asdict
from dataclasses import dataclass
from typing import Dict
from typing import NamedTuple

import numpy as np

from .thread_model import ReplyGraph
from .thread_model import ReplyTree

ONE_HOUR_S = 3600


class Structural(NamedTuple):
    """Sizes and average degrees of the reply tree and the reply graph."""

    n_nodes_T: int  # noqa: N815
    n_edges_T: int  # noqa: N815
    n_nodes_R: int  # noqa: N815
    n_edges_R: int  # noqa: N815
    avg_degree_T: float  # noqa: N815
    avg_degree_R: float  # noqa: N815


class Propagation(NamedTuple):
    """Cascade depth and relative degree of the reply tree."""

    avg_cascade_depth: float
    max_relative_degree: float


class Temporal(NamedTuple):
    """Reply latency features."""

    avg_inter_reply_time: float
    frac_first_hour: float


@dataclass(frozen=True)
class BaselineFeatures:
    """The ten baseline predictors of one thread."""

    n_nodes_T: int  # noqa: N815
    n_edges_T: int  # noqa: N815
    n_nodes_R: int  # noqa: N815
    n_edges_R: int  # noqa: N815
    avg_degree_T: float  # noqa: N815
    avg_degree_R: float  # noqa: N815
    avg_cascade_depth: float
    max_relative_degree: float
    avg_inter_reply_time: float
    frac_first_hour: float

    def as_dict(self) -> Dict[str, float]:
        """Field name to value, in slot order."""
        return {k: float(v) for k, v in asdict(self).items()}


def structural_features(tree: ReplyTree, rg: ReplyGraph) -> Structural:
    """Sizes and average total degree of both thread views.

    Args:
        tree: The reply tree.
        rg: Its projection on users.

    Returns:
        Node/edge counts and average degrees. Reply-graph edges are counted
        once per ordered user pair, self-replies excluded.

    Example:
        >>> from motif_controversy.thread_model import Post, build_reply_tree
        >>> from motif_controversy.thread_model import project_reply_graph
        >>> tree = build_reply_tree([Post("1", "a", None, 0)], thread_id="t")
        >>> tuple(structural_features(tree, project_reply_graph(tree)))
        (1, 0, 1, 0, 0.0, 0.0)
    """
    n_nodes_t = len(tree.posts)
    n_edges_t = len(tree.arcs)
    n_nodes_r = len(rg.users)
    n_edges_r = len(rg.simple_arcs)
    return Structural(
        n_nodes_T=n_nodes_t,
        n_edges_T=n_edges_t,
        n_nodes_R=n_nodes_r,
        n_edges_R=n_edges_r,
        avg_degree_T=2.0 * n_edges_t / n_nodes_t if n_nodes_t else 0.0,
        avg_degree_R=2.0 * n_edges_r / n_nodes_r if n_nodes_r else 0.0,
    )


def _max_non_root_degree(tree: ReplyTree) -> int:
    return max((tree.degree(p.post_id) for p in tree.posts if p.post_id != tree.root))


def propagation_features(tree: ReplyTree) -> Propagation:
    """Average root-to-leaf depth and maximum relative degree.

    Args:
        tree: The reply tree.

    Returns:
        Mean hop length over root-to-leaf paths, and the largest non-root
        degree divided by the root degree. A lone root gives zeros.
    """
    if len(tree.posts) < 2:
        return Propagation(0.0, 0.0)
    depths = [tree.depth[leaf] for leaf in tree.leaves()]
    root_degree = tree.degree(tree.root)
    return Propagation(
        avg_cascade_depth=float(np.mean(depths)),
        max_relative_degree=_max_non_root_degree(tree) / root_degree,
    )


def _inter_reply_times(tree: ReplyTree) -> np.ndarray:
    by_id = tree.by_id
    deltas = [by_id[c].timestamp - by_id[p].timestamp for c, p in tree.arcs]
    # clock skew yields negative latencies in lenient mode
    return np.clip(np.asarray(deltas, dtype=float), 0.0, None)


def temporal_features(tree: ReplyTree) -> Temporal:
    """Average inter-reply time and share of replies within the first hour.

    Args:
        tree: The reply tree.

    Returns:
        Mean seconds between a reply and its parent, and the fraction of
        replies posted no later than one hour after the root. A lone root
        gives zeros.
    """
    if len(tree.posts) < 2:
        return Temporal(0.0, 0.0)
    deltas = _inter_reply_times(tree)
    deadline = tree.root_post.timestamp + ONE_HOUR_S
    replies = [p for p in tree.posts if p.post_id != tree.root]
    early = sum(1 for p in replies if p.timestamp <= deadline)
    return Temporal(
        avg_inter_reply_time=float(deltas.mean()),
        frac_first_hour=early / len(replies),
    )


def baseline_features(tree: ReplyTree, rg: ReplyGraph) -> BaselineFeatures:
    """All ten baseline predictors of a thread."""
    return BaselineFeatures(
        *structural_features(tree, rg),
        *propagation_features(tree),
        *temporal_features(tree),
    )


def baseline_diagnostics(tree: ReplyTree, rg: ReplyGraph) -> Dict[str, float]:
    """Exploratory quantities left out of the prediction vector.

    Args:
        tree: The reply tree.
        rg: Its projection on users.

    Returns:
        Max cascade depth, max direct-reply subtree size, root and max
        non-root degree in the tree, root-author and max degree in the reply
        graph, max/min inter-reply time, in this order.
    """
    lone = len(tree.posts) < 2
    deltas = _inter_reply_times(tree)

    subtree_sizes = []
    for child in tree.children[tree.root]:
        stack, size = [child], 0
        while stack:
            size += 1
            stack.extend(tree.children[stack.pop()])
        subtree_sizes.append(size)

    degrees_r = dict(rg.to_networkx().degree())
    root_author = tree.root_post.author
    return {
        "max_cascade_depth": float(max(tree.depth.values())),
        "max_subtree_size": float(max(subtree_sizes, default=0)),
        "root_degree_T": float(tree.degree(tree.root)),
        "max_degree_T": 0.0 if lone else float(_max_non_root_degree(tree)),
        "root_degree_R": float(degrees_r.get(root_author, 0)),
        "max_degree_R": float(max(degrees_r.values(), default=0)),
        "max_inter_reply_time": 0.0 if lone else float(deltas.max()),
        "min_inter_reply_time": 0.0 if lone else float(deltas.min()),
    }
