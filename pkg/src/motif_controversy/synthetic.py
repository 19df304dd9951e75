"""Labeled synthetic threads with a controllable reply/follow signal.

Every thread gets its own users. Each reply decides, the first time a user
pair meets, whether the replier follows the author it answers; replies to
non-followed users are what makes a thread look controversial. Controversial
threads also attach deeper, answer faster and re-engage the same users.
Non-controversial threads sit in denser communities: users who never
exchange a reply follow each other more often, which only shows in triangles.
"""
import logging
from dataclasses import asdict
from dataclasses import dataclass
from dataclasses import field
from dataclasses import fields
from dataclasses import replace
from pathlib import Path
from typing import Any
from typing import Dict
from typing import List
from typing import Mapping
from typing import Optional
from typing import Set
from typing import Tuple

import numpy as np
import yaml

from .exceptions import InvalidParams
from .thread_model import Arc
from .thread_model import build_reply_tree
from .thread_model import FollowGraph
from .thread_model import Label
from .thread_model import Post
from .thread_model import ReplyTree

logger = logging.getLogger(__name__)

_PROBABILITIES = (
    "p_reply_nonfollowed",
    "p_follow_mutual",
    "depth_bias",
    "p_reciprocal",
    "p_new_user",
    "background_density",
)


@dataclass(frozen=True)
class ClassParams:
    """Generation parameters of one class.

    Attributes:
        n_threads: Threads to generate.
        size_median: Median number of posts, root included.
        size_sigma: Log-scale spread of the thread size.
        min_size: Smallest thread, in posts.
        max_size: Largest thread, in posts.
        p_reply_nonfollowed: A reply targets a user the replier does not
            follow.
        p_follow_mutual: A followed author follows the replier back.
        depth_bias: A reply attaches to a non-root post.
        time_scale: Mean reply delay after the parent post, in seconds.
        p_reciprocal: A reply answers back a user who replied before.
        p_new_user: A non-reciprocal reply comes from a new user.
        background_density: Follow probability of a directed user pair not
            implied by reply behaviour.
    """

    n_threads: int = 600
    size_median: float = 40.0
    size_sigma: float = 0.6
    min_size: int = 3
    max_size: int = 200
    p_reply_nonfollowed: float = 0.5
    p_follow_mutual: float = 0.4
    depth_bias: float = 0.5
    time_scale: float = 1800.0
    p_reciprocal: float = 0.15
    p_new_user: float = 0.6
    background_density: float = 0.02

    def validate(self, name: str) -> None:
        """Check ranges.

        Args:
            name: Class name used in messages.

        Raises:
            InvalidParams: A value out of range.
        """
        for attr in _PROBABILITIES:
            value = getattr(self, attr)
            if not 0.0 <= value <= 1.0:
                raise InvalidParams(f"{name}.{attr} = {value} outside [0, 1]")
        if self.n_threads < 0:
            raise InvalidParams(f"{name}.n_threads must be non-negative")
        if self.min_size < 2:
            raise InvalidParams(f"{name}.min_size must be at least 2")
        if self.max_size < self.min_size:
            raise InvalidParams(f"{name}.max_size below min_size")
        if self.size_median <= 0 or self.size_sigma < 0:
            raise InvalidParams(f"{name}: size_median > 0 and size_sigma >= 0 required")
        if self.time_scale <= 0:
            raise InvalidParams(f"{name}.time_scale must be positive")


CONTROVERSIAL_PRESET = ClassParams(
    size_median=45.0,
    p_reply_nonfollowed=0.75,
    p_follow_mutual=0.3,
    depth_bias=0.7,
    time_scale=900.0,
    p_reciprocal=0.25,
    p_new_user=0.5,
    background_density=0.01,
)
NON_CONTROVERSIAL_PRESET = ClassParams(
    size_median=35.0,
    p_reply_nonfollowed=0.3,
    p_follow_mutual=0.7,
    depth_bias=0.35,
    time_scale=2700.0,
    p_reciprocal=0.1,
    p_new_user=0.65,
    background_density=0.06,
)


@dataclass(frozen=True)
class SynthParams:
    """Parameters of a synthetic corpus.

    Attributes:
        controversial: Parameters of controversial threads.
        non_controversial: Parameters of non-controversial threads.
        jitter: Per-thread noise on every probability, as a standard
            deviation in logit space.
        time_jitter: Per-thread log-normal noise on the time scale.
        n_sources: Pages threads are spread over; 0 leaves them unset.
        seed: Seed of the generator.
    """

    controversial: ClassParams = field(default_factory=lambda: CONTROVERSIAL_PRESET)
    non_controversial: ClassParams = field(
        default_factory=lambda: NON_CONTROVERSIAL_PRESET
    )
    jitter: float = 0.6
    time_jitter: float = 0.5
    n_sources: int = 0
    seed: int = 42

    def validate(self) -> None:
        """Check every range.

        Raises:
            InvalidParams: A value out of range.
        """
        self.controversial.validate(Label.CONTROVERSIAL.value)
        self.non_controversial.validate(Label.NON_CONTROVERSIAL.value)
        if self.jitter < 0 or self.time_jitter < 0:
            raise InvalidParams("jitter values must be non-negative")
        if self.n_sources < 0:
            raise InvalidParams("n_sources must be non-negative")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "SynthParams":
        """Preset values overridden by a nested mapping.

        Args:
            data: Top-level keys of this class; ``controversial`` and
                ``non_controversial`` hold :class:`ClassParams` keys.

        Returns:
            The parameters.

        Raises:
            InvalidParams: Unknown key or wrong value type.
        """
        known = {f.name for f in fields(cls)}
        class_keys = {f.name for f in fields(ClassParams)}
        unknown = set(data) - known
        if unknown:
            raise InvalidParams(f"unknown synthetic parameter(s): {sorted(unknown)}")
        base = cls()
        updates: Dict[str, Any] = {}
        try:
            for key, value in data.items():
                if key in ("controversial", "non_controversial"):
                    if not isinstance(value, Mapping):
                        raise InvalidParams(f"{key} must be a mapping")
                    bad = set(value) - class_keys
                    if bad:
                        raise InvalidParams(
                            f"unknown {key} parameter(s): {sorted(bad)}"
                        )
                    current = getattr(base, key)
                    typed = {
                        k: type(getattr(current, k))(v) for k, v in value.items()
                    }
                    updates[key] = replace(current, **typed)
                else:
                    updates[key] = type(getattr(base, key))(value)
        except (TypeError, ValueError) as err:
            raise InvalidParams(f"bad synthetic parameter value: {err}") from err
        params = replace(base, **updates)
        params.validate()
        return params

    @classmethod
    def from_yaml(cls, path: Path) -> "SynthParams":
        """Read parameters from a YAML file.

        Args:
            path: YAML document; an empty file yields the preset.

        Returns:
            The parameters.

        Raises:
            InvalidParams: The document is not YAML, or not a mapping of known
                keys.
        """
        try:
            with path.open(encoding="utf-8") as stream:
                data = yaml.safe_load(stream) or {}
        except (yaml.YAMLError, UnicodeDecodeError) as err:
            raise InvalidParams(f"{path}: unreadable parameters: {err}") from err
        if not isinstance(data, dict):
            raise InvalidParams(f"{path}: expected a mapping of parameters")
        return cls.from_mapping(data)

    def to_dict(self) -> Dict[str, Any]:
        """Plain nested form, loadable by :meth:`from_mapping`."""
        return asdict(self)


def _jitter_prob(p: float, sd: float, rng: np.random.Generator) -> float:
    # 0 and 1 stay exact
    if sd == 0 or p <= 0.0 or p >= 1.0:
        return p
    logit = np.log(p / (1 - p)) + rng.normal(0.0, sd)
    return float(1.0 / (1.0 + np.exp(-logit)))


class _ThreadBuilder:
    """Grows one thread post by post."""

    def __init__(
        self,
        thread_id: str,
        params: ClassParams,
        start: int,
        rng: np.random.Generator,
    ) -> None:
        self.thread_id = thread_id
        self.params = params
        self.rng = rng
        self.posts: List[Post] = [Post("0", self._user(0), None, start)]
        self.n_users = 1
        self.replied: Dict[str, Set[str]] = {}
        self.met: Set[Tuple[str, str]] = set()
        self.follows: Set[Arc] = set()

    def _user(self, index: int) -> str:
        return f"{self.thread_id}:u{index}"

    def _new_user(self) -> str:
        self.n_users += 1
        return self._user(self.n_users - 1)

    def _meet(self, replier: str, author: str) -> None:
        pair = (replier, author) if replier < author else (author, replier)
        if pair in self.met:
            return
        self.met.add(pair)
        p = self.params
        if self.rng.random() < p.p_reply_nonfollowed:
            if self.rng.random() < p.background_density:
                self.follows.add((author, replier))
        else:
            self.follows.add((replier, author))
            if self.rng.random() < p.p_follow_mutual:
                self.follows.add((author, replier))

    def _add(self, parent: Post, author: str) -> None:
        delay = int(round(self.rng.exponential(self.params.time_scale)))
        post = Post(
            str(len(self.posts)), author, parent.post_id, parent.timestamp + delay
        )
        self.posts.append(post)
        if author != parent.author:
            self._meet(author, parent.author)
            self.replied.setdefault(author, set()).add(parent.author)

    def _reciprocal(self) -> bool:
        candidates = [
            p
            for p in self.posts[1:]
            if p.author != self.posts[int(p.parent)].author  # type: ignore[arg-type]
        ]
        if not candidates:
            return False
        target = candidates[int(self.rng.integers(len(candidates)))]
        parent = self.posts[int(target.parent)]  # type: ignore[arg-type]
        self._add(target, parent.author)
        return True

    def _reply(self) -> None:
        p = self.params
        if len(self.posts) > 1 and self.rng.random() < p.depth_bias:
            target = self.posts[1 + int(self.rng.integers(len(self.posts) - 1))]
        else:
            target = self.posts[0]
        # ordinary replies never close a reply pair
        answered = self.replied.get(target.author, set())
        existing = [
            self._user(i)
            for i in range(self.n_users)
            if self._user(i) != target.author and self._user(i) not in answered
        ]
        if not existing or self.rng.random() < p.p_new_user:
            author = self._new_user()
        else:
            author = existing[int(self.rng.integers(len(existing)))]
        self._add(target, author)

    def grow(self, size: int) -> None:
        while len(self.posts) < size:
            if self.rng.random() < self.params.p_reciprocal and self._reciprocal():
                continue
            self._reply()

    def background(self) -> None:
        """Follow edges between users who never exchanged a reply."""
        density = self.params.background_density
        if density == 0:
            return
        users = [self._user(i) for i in range(self.n_users)]
        for u in users:
            for v in users:
                if u == v:
                    continue
                pair = (u, v) if u < v else (v, u)
                if pair not in self.met and self.rng.random() < density:
                    self.follows.add((u, v))


def _jittered(
    params: ClassParams, synth: SynthParams, rng: np.random.Generator
) -> ClassParams:
    probs = {
        a: _jitter_prob(getattr(params, a), synth.jitter, rng) for a in _PROBABILITIES
    }
    scale = params.time_scale * float(rng.lognormal(0.0, synth.time_jitter))
    return replace(params, time_scale=scale, **probs)


def _size(params: ClassParams, rng: np.random.Generator) -> int:
    raw = rng.lognormal(np.log(params.size_median), params.size_sigma)
    return int(np.clip(round(raw), params.min_size, params.max_size))


def generate_synthetic(
    params: Optional[SynthParams] = None,
) -> Tuple[List[ReplyTree], FollowGraph]:
    """Generate a labeled corpus and its follow graph.

    Args:
        params: Generator parameters; the default preset when omitted.

    Returns:
        Labeled trees in a seed-determined shuffled order, and the follow
        graph of all their users.

    Raises:
        InvalidParams: Parameters out of range.

    Example:
        >>> small = ClassParams(n_threads=2, size_median=6)
        >>> trees, fg = generate_synthetic(SynthParams(small, small, seed=1))
        >>> len(trees), sorted({t.label.value for t in trees})
        (4, ['controversial', 'non-controversial'])
    """
    params = params or SynthParams()
    params.validate()
    rng = np.random.default_rng(params.seed)
    plan = [(Label.CONTROVERSIAL, i) for i in range(params.controversial.n_threads)]
    plan += [
        (Label.NON_CONTROVERSIAL, i) for i in range(params.non_controversial.n_threads)
    ]
    order = rng.permutation(len(plan))

    trees: List[ReplyTree] = []
    edges: Set[Arc] = set()
    for position in order:
        label, index = plan[int(position)]
        base = (
            params.controversial
            if label is Label.CONTROVERSIAL
            else params.non_controversial
        )
        prefix = "c" if label is Label.CONTROVERSIAL else "n"
        thread_id = f"{prefix}{index:05d}"
        local = _jittered(base, params, rng)
        builder = _ThreadBuilder(
            thread_id, local, start=int(rng.integers(0, 30 * 86400)), rng=rng
        )
        builder.grow(_size(base, rng))
        builder.background()
        edges |= builder.follows
        source = (
            f"page{int(rng.integers(params.n_sources)):03d}"
            if params.n_sources
            else None
        )
        trees.append(
            build_reply_tree(
                builder.posts,
                thread_id=thread_id,
                label=label,
                strict=True,
                source=source,
            )
        )
    logger.info("generated %d threads, %d follow edges", len(trees), len(edges))
    return trees, FollowGraph.from_edges(edges)
