"""Test cases for the baseline module."""
from typing import List
from typing import Optional
from typing import Tuple

import pytest

from motif_controversy.baseline import baseline_diagnostics
from motif_controversy.baseline import baseline_features
from motif_controversy.baseline import propagation_features
from motif_controversy.baseline import structural_features
from motif_controversy.baseline import temporal_features
from motif_controversy.thread_model import build_reply_tree
from motif_controversy.thread_model import Post
from motif_controversy.thread_model import project_reply_graph
from motif_controversy.thread_model import ReplyTree

Row = Tuple[str, str, Optional[str], int]


def make_tree(rows: List[Row]) -> ReplyTree:
    """Tree from (id, author, parent, ts) rows."""
    return build_reply_tree([Post(*row) for row in rows], thread_id="t")


def star(m: int) -> ReplyTree:
    """Root by u0 with m replies by distinct users."""
    rows: List[Row] = [("0", "u0", None, 0)]
    rows += [(str(i), f"u{i}", "0", 10 * i) for i in range(1, m + 1)]
    return make_tree(rows)


def path(d: int) -> ReplyTree:
    """Chain of d replies by distinct users."""
    rows: List[Row] = [("0", "u0", None, 0)]
    rows += [(str(i), f"u{i}", str(i - 1), 10 * i) for i in range(1, d + 1)]
    return make_tree(rows)


FOUR_NODE: List[Row] = [
    ("r", "a", None, 0),
    ("x", "b", "r", 1),
    ("y", "c", "r", 2),
    ("z", "d", "x", 3),
]


def test_lone_root() -> None:
    """A lone root gives zeros everywhere but the node counts."""
    tree = make_tree([("1", "a", None, 0)])
    rg = project_reply_graph(tree)
    assert tuple(structural_features(tree, rg)) == (1, 0, 1, 0, 0.0, 0.0)
    assert tuple(propagation_features(tree)) == (0.0, 0.0)
    assert tuple(temporal_features(tree)) == (0.0, 0.0)


def test_three_node_path() -> None:
    """A 3-post path by distinct authors has average degree 4/3 in both views."""
    tree = path(2)
    s = structural_features(tree, project_reply_graph(tree))
    assert s.n_edges_T == 2
    assert s.avg_degree_T == pytest.approx(4 / 3, abs=1e-12)
    assert s.n_edges_R == 2
    assert s.avg_degree_R == pytest.approx(4 / 3, abs=1e-12)


def test_star_degree() -> None:
    """Five users replying once to the root."""
    tree = star(5)
    s = structural_features(tree, project_reply_graph(tree))
    assert s.avg_degree_T == pytest.approx(2 * 5 / 6, abs=1e-12)
    assert s.n_nodes_R == 6


def test_reply_graph_collapses_multiplicity() -> None:
    """Repeated replies between the same users count once in the reply graph."""
    tree = make_tree([("1", "a", None, 0), ("2", "b", "1", 1), ("3", "b", "1", 2)])
    s = structural_features(tree, project_reply_graph(tree))
    assert (s.n_edges_T, s.n_edges_R) == (2, 1)
    assert s.avg_degree_R == 1.0


def test_four_node_propagation() -> None:
    """Leaves y and z at depths 1 and 2; x has the root's degree."""
    p = propagation_features(make_tree(FOUR_NODE))
    assert p.avg_cascade_depth == 1.5
    assert p.max_relative_degree == 1.0


@pytest.mark.parametrize("m", [1, 3, 7])
def test_star_propagation(m: int) -> None:
    """A star has depth 1 and relative degree 1/m."""
    p = propagation_features(star(m))
    assert p.avg_cascade_depth == 1.0
    assert p.max_relative_degree == pytest.approx(1 / m, abs=1e-12)


@pytest.mark.parametrize("d", [2, 3, 6])
def test_path_propagation(d: int) -> None:
    """A path of d replies has depth d and relative degree 2."""
    p = propagation_features(path(d))
    assert p.avg_cascade_depth == d
    assert p.max_relative_degree == 2.0


def test_replies_at_half_and_one_and_a_half_hours() -> None:
    """Replies at +30 and +90 minutes."""
    t = temporal_features(
        make_tree([("1", "a", None, 0), ("2", "b", "1", 1800), ("3", "c", "1", 5400)])
    )
    assert t.avg_inter_reply_time == 3600.0
    assert t.frac_first_hour == 0.5


def test_instant_replies() -> None:
    """Replies at the parent's instant."""
    t = temporal_features(
        make_tree([("1", "a", None, 7), ("2", "b", "1", 7), ("3", "c", "2", 7)])
    )
    assert tuple(t) == (0.0, 1.0)


def test_chain_latency() -> None:
    """root(0) <- b(100) <- c(7300)."""
    t = temporal_features(
        make_tree([("1", "a", None, 0), ("2", "b", "1", 100), ("3", "c", "2", 7300)])
    )
    assert t.avg_inter_reply_time == 3650.0
    assert t.frac_first_hour == 0.5


def test_first_hour_boundary_is_inclusive() -> None:
    """A reply exactly one hour after the root is in the first hour."""
    t = temporal_features(make_tree([("1", "a", None, 0), ("2", "b", "1", 3600)]))
    assert t.frac_first_hour == 1.0


def test_skewed_latency_is_clipped() -> None:
    """A reply older than its parent counts as zero latency."""
    t = temporal_features(make_tree([("1", "a", None, 100), ("2", "b", "1", 40)]))
    assert t.avg_inter_reply_time == 0.0


def test_time_shift_invariance() -> None:
    """Shifting every timestamp changes no temporal feature."""
    rows: List[Row] = [("1", "a", None, 0), ("2", "b", "1", 100), ("3", "c", "2", 7300)]
    shifted = [(i, a, p, ts + 12345) for i, a, p, ts in rows]
    assert temporal_features(make_tree(rows)) == temporal_features(make_tree(shifted))


def test_relabeling_invariance() -> None:
    """Renaming posts and users changes no baseline feature."""
    renamed = [
        (f"p{i}", f"user-{a}", None if p is None else f"p{p}", ts)
        for i, a, p, ts in FOUR_NODE
    ]
    left, right = make_tree(FOUR_NODE), make_tree(renamed)
    assert baseline_features(left, project_reply_graph(left)) == baseline_features(
        right, project_reply_graph(right)
    )


@pytest.mark.parametrize("tree", [star(4), path(4), make_tree(FOUR_NODE)])
def test_depth_bounds(tree: ReplyTree) -> None:
    """Average depth is at least 1 and below the number of posts."""
    depth = propagation_features(tree).avg_cascade_depth
    assert 1.0 <= depth <= max(tree.depth.values()) <= len(tree) - 1


def test_diagnostics() -> None:
    """Discarded quantities are still reported."""
    tree = make_tree(
        [
            ("r", "a", None, 0),
            ("x", "b", "r", 10),
            ("y", "c", "r", 50),
            ("z", "a", "x", 60),
        ]
    )
    diag = baseline_diagnostics(tree, project_reply_graph(tree))
    assert diag == {
        "max_cascade_depth": 2.0,
        "max_subtree_size": 2.0,
        "root_degree_T": 2.0,
        "max_degree_T": 2.0,
        "root_degree_R": 3.0,
        "max_degree_R": 3.0,
        "max_inter_reply_time": 50.0,
        "min_inter_reply_time": 10.0,
    }
