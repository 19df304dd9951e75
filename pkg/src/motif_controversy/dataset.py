"""Thread/follow files, dataset filters, feature matrices and experiments.

Threads are stored one JSON object per line::

    {"thread_id": "t1", "label": "controversial",
     "posts": [{"id": "1", "author": "a", "parent": null, "ts": 0}, ...]}

Follow edges are stored one ``follower<TAB>followee`` pair per line, ``#``
starting a comment line.
"""
import json
import logging
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path
from typing import Any
from typing import Callable
from typing import Dict
from typing import Iterable
from typing import List
from typing import NamedTuple
from typing import Optional
from typing import Sequence
from typing import Set
from typing import Tuple

import numpy as np
import pandas as pd
from joblib import delayed
from joblib import Parallel
from sklearn.model_selection import GroupShuffleSplit
from sklearn.model_selection import train_test_split

from .boost import BoostModel
from .boost import Classifier
from .boost import cross_validate
from .boost import DEFAULT_ROUNDS
from .boost import evaluate
from .boost import Metrics
from .boost import predict_labels
from .boost import score_predictions
from .boost import train
from .exceptions import ClassifierError
from .exceptions import ParseError
from .exceptions import ThreadValidationError
from .exceptions import UntrainedModel
from .features import ABLATION_MASKS
from .features import extract_thread
from .features import FeatureSlot
from .features import MaskSpec
from .features import resolve_mask
from .features import SLOT_NAMES
from .features import ThreadFeatures
from .thread_model import build_reply_tree
from .thread_model import count_users
from .thread_model import direct_reply_subtrees
from .thread_model import FollowGraph
from .thread_model import Label
from .thread_model import Post
from .thread_model import ReplyTree

logger = logging.getLogger(__name__)

USER_FILTERS: Tuple[int, ...] = (2, 3, 10)
METRIC_COLUMNS: Tuple[str, ...] = (
    "mask",
    "k",
    "accuracy",
    "precision",
    "recall",
    "f_measure",
    "tp",
    "fp",
    "tn",
    "fn",
)


class Dataset(NamedTuple):
    """Threads of a corpus and the follow graph of its users."""

    trees: Tuple[ReplyTree, ...]
    follows: FollowGraph


def _labels() -> Dict[Optional[str], Optional[Label]]:
    mapping: Dict[Optional[str], Optional[Label]] = {None: None}
    mapping.update({label.value: label for label in Label})
    return mapping


def _parse_post(raw: Any) -> Post:
    if not isinstance(raw, dict):
        raise ValueError("post must be an object")
    post_id, author = raw.get("id"), raw.get("author")
    parent, ts = raw.get("parent"), raw.get("ts")
    if not isinstance(post_id, str) or not isinstance(author, str):
        raise ValueError("post needs string 'id' and 'author'")
    if parent is not None and not isinstance(parent, str):
        raise ValueError(f"post {post_id!r}: 'parent' must be a string or null")
    if isinstance(ts, bool) or not isinstance(ts, int):
        raise ValueError(f"post {post_id!r}: 'ts' must be integer seconds")
    return Post(post_id=post_id, author=author, parent=parent, timestamp=ts)


def parse_thread_record(line: str, strict: bool = False) -> ReplyTree:
    """Parse and validate one JSONL thread record.

    Args:
        line: The JSON text.
        strict: Reject replies older than their parent.

    Returns:
        The reply tree.

    Raises:
        ValueError: Malformed JSON or schema.
        ThreadValidationError: The posts do not form a valid tree.
    """
    record = json.loads(line)
    if not isinstance(record, dict):
        raise ValueError("thread record must be an object")
    thread_id = record.get("thread_id")
    if not isinstance(thread_id, str):
        raise ValueError("'thread_id' must be a string")
    labels = _labels()
    if record.get("label") not in labels:
        raise ValueError(f"thread {thread_id!r}: unknown label {record.get('label')!r}")
    posts = record.get("posts")
    if not isinstance(posts, list):
        raise ValueError(f"thread {thread_id!r}: 'posts' must be a list")
    source = record.get("source")
    if source is not None and not isinstance(source, str):
        raise ValueError(f"thread {thread_id!r}: 'source' must be a string")
    return build_reply_tree(
        (_parse_post(p) for p in posts),
        thread_id=thread_id,
        label=labels[record.get("label")],
        strict=strict,
        source=source,
    )


def read_threads(path: Path, strict: bool = False) -> List[ReplyTree]:
    """Read a JSONL thread file.

    Args:
        path: File to read.
        strict: Fail on the first bad line or thread instead of skipping it.

    Returns:
        Valid threads in file order.

    Raises:
        ParseError: Strict mode, a malformed or non-UTF-8 line, or a
            duplicate thread id.
        ThreadValidationError: Strict mode, an invalid thread.
    """
    trees: List[ReplyTree] = []
    seen: Set[str] = set()
    with path.open("rb") as lines:
        for line_no, raw in enumerate(lines, start=1):
            try:
                line = raw.decode("utf-8")
                if not line.strip():
                    continue
                tree = parse_thread_record(line, strict=strict)
                if tree.thread_id in seen:
                    raise ValueError(f"duplicate thread id {tree.thread_id!r}")
            except ThreadValidationError as err:
                if strict:
                    raise
                logger.warning("%s:%d: skipped, %s", path, line_no, err)
                continue
            except ValueError as err:  # JSON and UTF-8 decoding errors included
                if strict:
                    raise ParseError(str(err), line_no, str(path)) from err
                logger.warning("%s:%d: skipped, %s", path, line_no, err)
                continue
            seen.add(tree.thread_id)
            trees.append(tree)
    logger.info("read %d threads from %s", len(trees), path)
    return trees


def _follow_edge(raw: bytes) -> Optional[Tuple[str, str]]:
    text = raw.decode("utf-8").rstrip("\r\n")
    if not text.strip() or text.startswith("#"):
        return None
    fields = text.split("\t")
    if len(fields) != 2 or not all(fields):
        raise ValueError("expected 'follower<TAB>followee'")
    return fields[0], fields[1]


def read_follows(path: Path, strict: bool = False) -> FollowGraph:
    """Read a TSV follow file.

    Args:
        path: File to read.
        strict: Fail on malformed lines instead of skipping them.

    Returns:
        The follow graph; self-follows are dropped with a warning.

    Raises:
        ParseError: Strict mode, a line that is not two tab-separated ids
            or not UTF-8.
    """
    edges: Set[Tuple[str, str]] = set()
    with path.open("rb") as lines:
        for line_no, raw in enumerate(lines, start=1):
            try:
                edge = _follow_edge(raw)
            except ValueError as err:
                if strict:
                    raise ParseError(str(err), line_no, str(path)) from err
                logger.warning("%s:%d: skipped, %s", path, line_no, err)
                continue
            if edge is None:
                continue
            follower, followee = edge
            if follower == followee:
                logger.warning(
                    "%s:%d: dropped self-follow of %r", path, line_no, follower
                )
                continue
            edges.add(edge)
    logger.info("read %d follow edges from %s", len(edges), path)
    return FollowGraph.from_edges(edges)


def load_dataset(
    threads_path: Path, follows_path: Optional[Path], strict: bool = False
) -> Dataset:
    """Load threads and, when given, the follow graph.

    Args:
        threads_path: JSONL thread file.
        follows_path: TSV follow file; ``None`` means no follow edges.
        strict: Reject bad lines and invalid threads instead of skipping.

    Returns:
        The dataset.
    """
    trees = read_threads(threads_path, strict=strict)
    follows = (
        read_follows(follows_path, strict=strict) if follows_path else FollowGraph()
    )
    return Dataset(trees=tuple(trees), follows=follows)


def thread_record(tree: ReplyTree) -> Dict[str, Any]:
    """Plain-data form of a tree, the inverse of :func:`parse_thread_record`."""
    record: Dict[str, Any] = {
        "thread_id": tree.thread_id,
        "label": tree.label.value if tree.label is not None else None,
        "posts": [
            {"id": p.post_id, "author": p.author, "parent": p.parent, "ts": p.timestamp}
            for p in tree.posts
        ],
    }
    if tree.source is not None:
        record["source"] = tree.source
    return record


def save_dataset(
    dataset: Dataset, threads_path: Path, follows_path: Optional[Path]
) -> None:
    """Write threads as JSONL and follow edges as sorted TSV.

    Args:
        dataset: Threads and follow graph.
        threads_path: Destination of the thread file.
        follows_path: Destination of the follow file, skipped when ``None``.
    """
    with threads_path.open("w", encoding="utf-8", newline="\n") as out:
        for tree in dataset.trees:
            out.write(json.dumps(thread_record(tree), ensure_ascii=False) + "\n")
    if follows_path is not None:
        with follows_path.open("w", encoding="utf-8", newline="\n") as out:
            for follower, followee in sorted(dataset.follows.edges):
                out.write(f"{follower}\t{followee}\n")


def filter_threads(trees: Iterable[ReplyTree], k: int) -> List[ReplyTree]:
    """Keep threads involving more than ``k`` users, root author included.

    Args:
        trees: Threads to filter.
        k: User threshold.

    Returns:
        Retained threads, order preserved.

    Raises:
        ValueError: Negative ``k``.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    return [t for t in trees if count_users(t) > k]


def retention_summary(
    trees: Sequence[ReplyTree], ks: Sequence[int] = USER_FILTERS
) -> pd.DataFrame:
    """Threads kept by each user filter, in dataset-statistics layout.

    Args:
        trees: All threads.
        ks: Filters to report; shares are relative to the first one.

    Returns:
        One row per ``k`` with retained threads, share, average users and
        total posts.
    """
    rows = []
    reference: Optional[int] = None
    for k in ks:
        kept = filter_threads(trees, k)
        if reference is None:
            reference = len(kept)
        rows.append(
            {
                "k": k,
                "threads": len(kept),
                "share": len(kept) / reference if reference else 0.0,
                "avg_users": (
                    float(np.mean([count_users(t) for t in kept])) if kept else 0.0
                ),
                "total_posts": sum(len(t.posts) for t in kept),
            }
        )
    return pd.DataFrame(
        rows, columns=["k", "threads", "share", "avg_users", "total_posts"]
    )


def _extract(tree: ReplyTree, follows: FollowGraph) -> ThreadFeatures:
    return extract_thread(tree, follows)


def extract_all(
    trees: Sequence[ReplyTree], fg: FollowGraph, jobs: int = 1
) -> List[ThreadFeatures]:
    """Features of every thread, in input order.

    Each worker receives the follow graph restricted to its thread.

    Args:
        trees: Threads.
        fg: Global follow graph.
        jobs: Parallel workers, ``-1`` for every core.

    Returns:
        One :class:`ThreadFeatures` per thread.

    Raises:
        ValueError: ``jobs`` is 0.
    """
    if jobs == 0:
        raise ValueError("jobs must be -1 for every core or a positive count")
    local = [fg.restrict({p.author for p in tree.posts}) for tree in trees]
    if jobs == 1:
        return [_extract(tree, follows) for tree, follows in zip(trees, local)]
    return list(
        Parallel(n_jobs=jobs)(
            delayed(_extract)(tree, follows) for tree, follows in zip(trees, local)
        )
    )


@dataclass(frozen=True)
class FeatureMatrix:
    """Feature rows of a list of threads, in input order."""

    thread_ids: Tuple[str, ...]
    X: np.ndarray  # noqa: N815
    labels: Tuple[Optional[Label], ...]
    n_users: np.ndarray
    sources: Tuple[Optional[str], ...]
    diagnostics: pd.DataFrame = field(repr=False)

    def __len__(self) -> int:
        return len(self.thread_ids)

    @property
    def labeled_mask(self) -> np.ndarray:
        """Rows carrying a label."""
        return np.array([label is not None for label in self.labels], dtype=bool)

    @property
    def y(self) -> np.ndarray:
        """0/1 labels; only meaningful on a fully labeled matrix.

        Raises:
            ValueError: Some row is unlabeled.
        """
        if not self.labeled_mask.all():
            raise ValueError("matrix holds unlabeled threads")
        return np.array(
            [label.value01 for label in self.labels if label is not None], dtype=int
        )

    def select(self, rows: np.ndarray) -> "FeatureMatrix":
        """Subset of rows, by boolean mask or index array."""
        index = np.flatnonzero(rows) if rows.dtype == bool else np.asarray(rows)
        return FeatureMatrix(
            thread_ids=tuple(self.thread_ids[i] for i in index),
            X=self.X[index],
            labels=tuple(self.labels[i] for i in index),
            n_users=self.n_users[index],
            sources=tuple(self.sources[i] for i in index),
            diagnostics=self.diagnostics.iloc[index].reset_index(drop=True),
        )

    def labeled(self) -> "FeatureMatrix":
        """Rows carrying a label."""
        return self.select(self.labeled_mask)

    def with_users_above(self, k: int) -> "FeatureMatrix":
        """Rows of threads involving more than ``k`` users."""
        return self.select(self.n_users > k)

    def frame(self) -> pd.DataFrame:
        """Slot columns plus the label column."""
        df = pd.DataFrame(self.X, columns=list(SLOT_NAMES))
        df[FeatureSlot.LABEL] = [
            label.value if label is not None else "" for label in self.labels
        ]
        return df

    def to_csv(self, path: Path) -> None:
        """Write the feature table."""
        self.frame().to_csv(path, index=False, encoding="utf-8")

    def diagnostics_to_csv(self, path: Path) -> None:
        """Write the per-thread diagnostics table."""
        self.diagnostics.to_csv(path, index=False, encoding="utf-8")


def build_feature_matrix(
    trees: Sequence[ReplyTree], fg: FollowGraph, jobs: int = 1
) -> FeatureMatrix:
    """Feature rows and diagnostics of every thread.

    Args:
        trees: Threads, labeled or not.
        fg: Follow graph.
        jobs: Parallel workers, ``-1`` for every core.

    Returns:
        The matrix, one row per thread in input order.
    """
    extracted = extract_all(trees, fg, jobs=jobs)
    X = np.array(  # noqa: N806
        [f.vector.values for f in extracted], dtype=float
    ).reshape(len(extracted), len(SLOT_NAMES))
    diag = pd.DataFrame([f.diagnostics for f in extracted])
    diag.insert(0, FeatureSlot.THREAD_ID, [t.thread_id for t in trees])
    diag.insert(1, FeatureSlot.LABEL, [t.label.value if t.label else "" for t in trees])
    for i, name in enumerate(SLOT_NAMES):
        diag[name] = X[:, i]
    return FeatureMatrix(
        thread_ids=tuple(t.thread_id for t in trees),
        X=X,
        labels=tuple(t.label for t in trees),
        n_users=np.array([count_users(t) for t in trees], dtype=int),
        sources=tuple(t.source for t in trees),
        diagnostics=diag,
    )


@dataclass(frozen=True)
class EvaluationProtocol:
    """How a cell of the ablation table is scored.

    ``kind`` is ``"cv"`` for stratified k-fold cross-validation or
    ``"holdout"`` for a single stratified train/test split.
    """

    kind: str = "cv"
    folds: int = 5
    test_size: float = 0.3
    seed: int = 42
    rounds: int = DEFAULT_ROUNDS
    group_by_source: bool = False

    def __post_init__(self) -> None:
        """Check the protocol kind.

        Raises:
            ValueError: Unknown kind.
        """
        if self.kind not in ("cv", "holdout"):
            raise ValueError(
                f"unknown protocol {self.kind!r}, expected 'cv' or 'holdout'"
            )


ClassifierFactory = Callable[[], Classifier]


def _holdout(
    matrix: FeatureMatrix,
    slots: Tuple[int, ...],
    protocol: EvaluationProtocol,
    classifier: Optional[ClassifierFactory] = None,
) -> Metrics:
    y = matrix.y
    index = np.arange(len(matrix))
    if protocol.group_by_source:
        splitter = GroupShuffleSplit(
            n_splits=1, test_size=protocol.test_size, random_state=protocol.seed
        )
        train_idx, test_idx = next(
            splitter.split(matrix.X, y, groups=list(matrix.sources))
        )
    else:
        train_idx, test_idx = train_test_split(
            index, test_size=protocol.test_size, stratify=y, random_state=protocol.seed
        )
    if classifier is not None:
        Xm = matrix.X[:, slots]  # noqa: N806
        clf = classifier()
        clf.fit(Xm[train_idx], y[train_idx])
        predicted = np.asarray(clf.predict(Xm[test_idx])).astype(int)
        return score_predictions(y[test_idx], predicted)
    model = train(
        matrix.X[train_idx],
        y[train_idx],
        mask=slots,
        rounds=protocol.rounds,
        seed=protocol.seed,
    )
    return evaluate(model, matrix.X[test_idx], y[test_idx])


def score_cell(
    matrix: FeatureMatrix,
    mask: MaskSpec,
    protocol: EvaluationProtocol,
    classifier: Optional[ClassifierFactory] = None,
) -> Metrics:
    """Metrics of one mask on a labeled matrix.

    Cross-validated cells pool the confusion counts of every test fold and
    derive the rates from the pooled counts.

    Args:
        matrix: Fully labeled matrix.
        mask: Slots shown to the classifier.
        protocol: Evaluation protocol.
        classifier: Factory of a plug-in classifier; defaults to boosted
            stumps with ``protocol.rounds`` rounds.

    Returns:
        The metrics.
    """
    slots = resolve_mask(mask)
    if protocol.kind == "holdout":
        return _holdout(matrix, slots, protocol, classifier)
    result = cross_validate(
        matrix.X,
        matrix.y,
        mask=slots,
        k_folds=protocol.folds,
        seed=protocol.seed,
        rounds=protocol.rounds,
        groups=matrix.sources if protocol.group_by_source else None,
        classifier=classifier,
    )
    logger.debug(
        "fold accuracy %.4f +- %.4f", result.mean["accuracy"], result.std["accuracy"]
    )
    return result.pooled


@dataclass(frozen=True)
class AblationTable:
    """Metrics per (mask, user filter) cell; absent cells carry a reason."""

    frame: pd.DataFrame
    absent: Dict[Tuple[str, int], str] = field(default_factory=dict)

    def to_csv(self, path: Path) -> None:
        """Write the metrics table."""
        self.frame.to_csv(path, index=False, encoding="utf-8")

    def to_text(self) -> str:
        """Aligned table, one block of filter rows per mask."""
        header = (
            f"{'Filtering':<12}{'Accuracy':>10}{'Precision':>11}"
            f"{'Recall':>8}{'F-measure':>11}"
        )
        rule = "-" * len(header)
        lines = [header, rule]
        for mask, block in self.frame.groupby("mask", sort=False):
            lines.append(f"{mask:^{len(header)}}")
            lines.append(rule)
            for _, row in block.iterrows():
                label = f">{int(row['k'])} users"
                if pd.isna(row["accuracy"]):
                    reason = self.absent.get((mask, int(row["k"])), "absent")
                    lines.append(f"{label:<12}  ({reason})")
                    continue
                lines.append(
                    f"{label:<12}{row['accuracy']:>10.2f}{row['precision']:>11.2f}"
                    f"{row['recall']:>8.2f}{row['f_measure']:>11.2f}"
                )
            lines.append(rule)
        return "\n".join(lines) + "\n"


def run_ablation(
    matrix: FeatureMatrix,
    masks: Sequence[str] = ABLATION_MASKS,
    ks: Sequence[int] = USER_FILTERS,
    protocol: EvaluationProtocol = EvaluationProtocol(),
    classifier: Optional[ClassifierFactory] = None,
) -> AblationTable:
    """Score every feature block under every user filter.

    Args:
        matrix: Feature matrix; unlabeled rows are ignored.
        masks: Mask names, one block each.
        ks: User filters, one row per block each.
        protocol: Evaluation protocol.
        classifier: Factory of a plug-in classifier, boosted stumps when
            ``None``.

    Returns:
        The table; cells that cannot be scored are left empty and listed in
        ``absent``.
    """
    labeled = matrix.labeled()
    rows = []
    absent: Dict[Tuple[str, int], str] = {}
    for mask in masks:
        for k in ks:
            cell = labeled.with_users_above(k)
            row: Dict[str, Any] = {"mask": mask, "k": k}
            try:
                metrics = score_cell(cell, mask, protocol, classifier)
            except (ClassifierError, ValueError) as err:
                logger.warning("mask %s, k=%d: no result, %s", mask, k, err)
                absent[(mask, k)] = str(err)
            else:
                row.update(metrics.scores())
                row.update(tp=metrics.tp, fp=metrics.fp, tn=metrics.tn, fn=metrics.fn)
            rows.append(row)
    frame = pd.DataFrame(rows, columns=list(METRIC_COLUMNS))
    for column in ("tp", "fp", "tn", "fn"):
        frame[column] = frame[column].astype("Int64")
    return AblationTable(frame=frame, absent=absent)


@dataclass(frozen=True)
class SubthreadReport:
    """Predictions on direct-reply subtrees.

    ``per_tree`` maps every analysed thread to its controversial fraction,
    ``None`` when none of its subtrees passes the user filter.
    """

    predictions: pd.DataFrame
    per_tree: Dict[str, Optional[float]]
    fraction: Optional[float]


def analyze_subthreads(
    model: BoostModel,
    trees: Sequence[ReplyTree],
    fg: FollowGraph,
    k: int = 2,
    only_non_controversial: bool = True,
    jobs: int = 1,
) -> SubthreadReport:
    """Classify the direct-reply subtrees of threads.

    Args:
        model: A trained model.
        trees: Threads to analyse.
        fg: Follow graph.
        k: Subtrees need more than ``k`` users to be classified.
        only_non_controversial: Analyse only threads labeled
            non-controversial, or predicted so when unlabeled.
        jobs: Parallel workers for feature extraction.

    Returns:
        One prediction per qualifying subtree, plus per-thread and overall
        controversial fractions.

    Raises:
        UntrainedModel: The model has no stump.
    """
    if not model.trained:
        raise UntrainedModel("model has no stump")
    selected = list(trees)
    if only_non_controversial:
        unlabeled = [t for t in selected if t.label is None]
        predicted_controversial: Set[str] = set()
        if unlabeled:
            whole = build_feature_matrix(unlabeled, fg, jobs=jobs)
            flags = predict_labels(model, whole.X)
            predicted_controversial = {
                tid for tid, flag in zip(whole.thread_ids, flags) if flag == 1
            }
        selected = [
            t
            for t in selected
            if t.label is Label.NON_CONTROVERSIAL
            or (t.label is None and t.thread_id not in predicted_controversial)
        ]

    owners: List[str] = []
    subtrees: List[ReplyTree] = []
    for tree in selected:
        for sub in direct_reply_subtrees(tree):
            if count_users(sub) > k:
                owners.append(tree.thread_id)
                subtrees.append(sub)

    columns = ["thread_id", "subtree_root", "n_posts", "n_users", "label", "margin"]
    margins = np.zeros(0)
    if subtrees:
        sub_matrix = build_feature_matrix(subtrees, fg, jobs=jobs)
        margins = model.decision_function(sub_matrix.X)
    predictions = pd.DataFrame(
        [
            {
                "thread_id": owner,
                "subtree_root": sub.root,
                "n_posts": len(sub.posts),
                "n_users": count_users(sub),
                "label": (
                    Label.CONTROVERSIAL if margin > 0 else Label.NON_CONTROVERSIAL
                ).value,
                "margin": float(margin),
            }
            for owner, sub, margin in zip(owners, subtrees, margins)
        ],
        columns=columns,
    )

    per_tree: Dict[str, Optional[float]] = {}
    for tree in selected:
        mine = predictions[predictions["thread_id"] == tree.thread_id]
        per_tree[tree.thread_id] = (
            float((mine["label"] == Label.CONTROVERSIAL.value).mean())
            if len(mine)
            else None
        )
    fraction = (
        float((predictions["label"] == Label.CONTROVERSIAL.value).mean())
        if len(predictions)
        else None
    )
    logger.info(
        "%d threads analysed, %d qualifying subtrees", len(selected), len(predictions)
    )
    return SubthreadReport(
        predictions=predictions, per_tree=per_tree, fraction=fraction
    )
