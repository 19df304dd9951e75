"""Reply trees, follow graphs and reply graphs of threaded conversations.

A thread is a tree of posts whose arcs point from a reply to its parent. The
tree projects onto users as a directed reply graph; the follow graph is the
static social network the users live in.
"""
import logging
from collections import Counter
from dataclasses import dataclass
from dataclasses import field
from dataclasses import fields
from enum import Enum
from functools import cached_property
from types import MappingProxyType
from typing import AbstractSet
from typing import Any
from typing import Dict
from typing import FrozenSet
from typing import Iterable
from typing import List
from typing import Mapping
from typing import Optional
from typing import Set
from typing import Tuple

import networkx as nx

from .exceptions import CycleDetected
from .exceptions import DuplicatePost
from .exceptions import EmptyThread
from .exceptions import MissingParent
from .exceptions import MultipleRoots
from .exceptions import ThreadValidationError
from .exceptions import TimestampOrder

logger = logging.getLogger(__name__)

Arc = Tuple[str, str]


class Label(str, Enum):
    """Thread-level controversy label."""

    CONTROVERSIAL = "controversial"
    NON_CONTROVERSIAL = "non-controversial"

    @property
    def value01(self) -> int:
        """Numeric encoding, controversial is the positive class."""
        return 1 if self is Label.CONTROVERSIAL else 0


@dataclass(frozen=True)
class Post:
    """One content item of a thread."""

    post_id: str
    author: str
    parent: Optional[str]
    timestamp: int


@dataclass(frozen=True)
class ReplyTree:
    """Validated content reply tree of one thread.

    Build instances with :func:`build_reply_tree`; the constructor does not
    validate.
    """

    thread_id: str
    posts: Tuple[Post, ...]
    root: str
    label: Optional[Label] = None
    source: Optional[str] = None

    @cached_property
    def by_id(self) -> Mapping[str, Post]:
        """Posts indexed by id."""
        return MappingProxyType({p.post_id: p for p in self.posts})

    @cached_property
    def arcs(self) -> Tuple[Arc, ...]:
        """Reply arcs ``(post, parent)``, in post order."""
        return tuple((p.post_id, p.parent) for p in self.posts if p.parent is not None)

    @cached_property
    def children(self) -> Mapping[str, Tuple[str, ...]]:
        """Direct replies of every post, in post order."""
        kids: Dict[str, List[str]] = {p.post_id: [] for p in self.posts}
        for child, parent in self.arcs:
            kids[parent].append(child)
        return MappingProxyType({k: tuple(v) for k, v in kids.items()})

    @cached_property
    def depth(self) -> Mapping[str, int]:
        """Hop distance of every post from the root."""
        down = self.downward_graph()
        lengths = nx.single_source_shortest_path_length(down, self.root)
        return MappingProxyType(dict(lengths))

    @property
    def root_post(self) -> Post:
        """The post that starts the thread."""
        return self.by_id[self.root]

    def degree(self, post_id: str) -> int:
        """Number of tree arcs touching a post (parent plus children)."""
        parent = 0 if post_id == self.root else 1
        return parent + len(self.children[post_id])

    def leaves(self) -> List[str]:
        """Posts without replies, in post order."""
        return [pid for pid, kids in self.children.items() if not kids]

    def graph(self) -> nx.DiGraph:
        """Frozen networkx view with arcs pointing reply -> parent."""
        g = nx.DiGraph()
        g.add_nodes_from(p.post_id for p in self.posts)
        g.add_edges_from(self.arcs)
        return nx.freeze(g)

    def downward_graph(self) -> nx.DiGraph:
        """Frozen networkx view with arcs pointing parent -> reply."""
        return nx.freeze(self.graph().reverse(copy=True))

    def __len__(self) -> int:
        return len(self.posts)

    def __getstate__(self) -> Dict[str, Any]:
        # cached views hold mapping proxies, which do not pickle
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class FollowGraph:
    """Directed follow relations, ``(u, v)`` meaning ``u`` follows ``v``."""

    users: FrozenSet[str] = frozenset()
    edges: FrozenSet[Arc] = frozenset()

    @classmethod
    def from_edges(
        cls, edges: Iterable[Arc], users: Iterable[str] = ()
    ) -> "FollowGraph":
        """Create a follow graph, users default to the edge endpoints.

        Args:
            edges: ``(follower, followee)`` pairs.
            users: Extra users without edges.

        Returns:
            The follow graph.

        Raises:
            ValueError: On a self-follow.
        """
        edge_set = frozenset(edges)
        loops = [e for e in edge_set if e[0] == e[1]]
        if loops:
            raise ValueError(f"self-follow not allowed: {loops[0][0]!r}")
        everyone = set(users)
        for u, v in edge_set:
            everyone.add(u)
            everyone.add(v)
        return cls(users=frozenset(everyone), edges=edge_set)

    @cached_property
    def successors(self) -> Mapping[str, FrozenSet[str]]:
        """Followees of every user that follows someone."""
        out: Dict[str, Set[str]] = {}
        for u, v in self.edges:
            out.setdefault(u, set()).add(v)
        return MappingProxyType({u: frozenset(vs) for u, vs in out.items()})

    def follows(self, u: str, v: str) -> bool:
        """Whether ``u`` follows ``v``."""
        return (u, v) in self.edges

    def restrict(self, users: AbstractSet[str]) -> "FollowGraph":
        """Induced follow graph on a user subset.

        Cost depends on the subset and its out-edges only.

        Args:
            users: Users to keep.

        Returns:
            The restricted graph, with exactly ``users`` as user set.
        """
        succ = self.successors
        kept = frozenset(
            (u, v) for u in users for v in succ.get(u, ()) if v in users
        )
        return FollowGraph(users=frozenset(users), edges=kept)

    def __getstate__(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class ReplyGraph:
    """Projection of one reply tree onto its users.

    ``edges[(u, v)]`` is the number of posts by ``u`` replying to a post by
    ``v``. Self-loops are kept here but ignored by degree and motif code.
    """

    users: FrozenSet[str]
    edges: Mapping[Arc, int] = field(default_factory=lambda: MappingProxyType({}))

    @cached_property
    def simple_arcs(self) -> FrozenSet[Arc]:
        """Distinct reply arcs between different users."""
        return frozenset((u, v) for u, v in self.edges if u != v)

    def replies(self, u: str, v: str) -> bool:
        """Whether ``u`` replied at least once to ``v``."""
        return (u, v) in self.edges

    def to_networkx(self) -> nx.DiGraph:
        """Simple directed graph, multiplicity kept as the ``count`` attribute."""
        g = nx.DiGraph()
        g.add_nodes_from(self.users)
        g.add_edges_from(
            (u, v, {"count": n}) for (u, v), n in self.edges.items() if u != v
        )
        return g


def _order_key(post: Post) -> Tuple[int, str]:
    return post.timestamp, post.post_id


def build_reply_tree(
    posts: Iterable[Post],
    thread_id: str,
    label: Optional[Label] = None,
    strict: bool = False,
    source: Optional[str] = None,
) -> ReplyTree:
    """Validate posts and assemble them into a reply tree.

    Args:
        posts: Posts of the thread, in any order.
        thread_id: Identifier of the thread.
        label: Controversy label, if known.
        strict: Reject replies older than their parent instead of warning.
        source: Page the thread was collected from.

    Returns:
        The reply tree, posts sorted by timestamp then id.

    Raises:
        EmptyThread: No post.
        DuplicatePost: Two posts with the same id.
        MissingParent: A parent id that is not in the thread.
        MultipleRoots: Not exactly one post without parent.
        CycleDetected: Parent links contain a cycle.
        ThreadValidationError: A negative timestamp.
        TimestampOrder: Strict mode, a reply older than its parent.

    Example:
        >>> tree = build_reply_tree(
        ...     [Post("1", "a", None, 0), Post("2", "b", "1", 5)], thread_id="t"
        ... )
        >>> tree.root, len(tree.arcs)
        ('1', 1)
    """
    items = sorted(posts, key=_order_key)
    if not items:
        raise EmptyThread("no posts", thread_id)

    by_id: Dict[str, Post] = {}
    for post in items:
        if post.post_id in by_id:
            raise DuplicatePost(f"duplicate post id {post.post_id!r}", thread_id)
        if post.timestamp < 0:
            raise ThreadValidationError(
                f"negative timestamp on post {post.post_id!r}", thread_id
            )
        by_id[post.post_id] = post

    for post in items:
        if post.parent is not None and post.parent not in by_id:
            raise MissingParent(
                f"post {post.post_id!r} replies to unknown post {post.parent!r}",
                thread_id,
            )

    roots = [p.post_id for p in items if p.parent is None]
    if len(roots) > 1:
        raise MultipleRoots(f"{len(roots)} posts without parent", thread_id)

    g = nx.DiGraph()
    g.add_nodes_from(by_id)
    g.add_edges_from((p.post_id, p.parent) for p in items if p.parent is not None)
    if not roots or not nx.is_directed_acyclic_graph(g):
        cycle = nx.find_cycle(g)
        raise CycleDetected(
            "parent links form a cycle through " + ", ".join(repr(u) for u, _ in cycle),
            thread_id,
        )

    for post in items:
        if post.parent is None:
            continue
        parent = by_id[post.parent]
        if post.timestamp < parent.timestamp:
            message = (
                f"post {post.post_id!r} ({post.timestamp}) is older than its "
                f"parent {parent.post_id!r} ({parent.timestamp})"
            )
            if strict:
                raise TimestampOrder(message, thread_id)
            logger.warning("thread %r: %s", thread_id, message)

    return ReplyTree(
        thread_id=thread_id,
        posts=tuple(items),
        root=roots[0],
        label=label,
        source=source,
    )


def project_reply_graph(tree: ReplyTree) -> ReplyGraph:
    """Project a reply tree onto its authors.

    Args:
        tree: A valid reply tree.

    Returns:
        The reply graph with edge multiplicities.

    Example:
        >>> tree = build_reply_tree(
        ...     [
        ...         Post("1", "a", None, 0),
        ...         Post("2", "b", "1", 1),
        ...         Post("3", "b", "1", 2),
        ...     ],
        ...     thread_id="t",
        ... )
        >>> dict(project_reply_graph(tree).edges)
        {('b', 'a'): 2}
    """
    by_id = tree.by_id
    counts = Counter(
        (by_id[child].author, by_id[parent].author) for child, parent in tree.arcs
    )
    return ReplyGraph(
        users=frozenset(p.author for p in tree.posts),
        edges=MappingProxyType(dict(sorted(counts.items()))),
    )


def count_users(tree: ReplyTree) -> int:
    """Number of distinct authors, the root author included."""
    return len({p.author for p in tree.posts})


def direct_reply_subtrees(tree: ReplyTree) -> List[ReplyTree]:
    """Split a thread into the subtrees rooted at each direct reply of the root.

    Args:
        tree: A valid reply tree.

    Returns:
        One unlabeled tree per child of the root, in post order.
    """
    down = tree.downward_graph()
    subtrees = []
    for child in tree.children[tree.root]:
        members = nx.descendants(down, child) | {child}
        posts = tuple(
            Post(p.post_id, p.author, None, p.timestamp) if p.post_id == child else p
            for p in tree.posts
            if p.post_id in members
        )
        subtrees.append(
            ReplyTree(
                thread_id=f"{tree.thread_id}/{child}",
                posts=posts,
                root=child,
                source=tree.source,
            )
        )
    return subtrees
