"""Discrete AdaBoost over decision stumps, evaluation and cross-validation.

Labels are 1 for controversial (the positive class) and 0 for
non-controversial; the booster works internally on +1/-1.
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
from typing import Protocol
from typing import Sequence
from typing import Tuple
from typing import Union

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.base import ClassifierMixin
from sklearn.metrics import confusion_matrix
from sklearn.model_selection import StratifiedGroupKFold
from sklearn.model_selection import StratifiedKFold

from .exceptions import DegenerateLabels
from .exceptions import DimensionMismatch
from .exceptions import EmptyMask
from .exceptions import ModelFormatError
from .exceptions import NoWeakLearner
from .exceptions import TooFewSamples
from .exceptions import UntrainedModel
from .features import MaskSpec
from .features import N_SLOTS
from .features import resolve_mask
from .features import SLOT_NAMES
from .thread_model import Label

logger = logging.getLogger(__name__)

EPSILON = 1e-10
DEFAULT_ROUNDS = 100
MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class DecisionStump:
    """One-slot threshold vote, weighted by ``alpha``.

    The stump votes ``polarity`` when the slot value is above ``threshold``
    and ``-polarity`` otherwise.
    """

    feature_index: int
    threshold: float
    polarity: int
    alpha: float

    def vote(self, X: np.ndarray) -> np.ndarray:  # noqa: N803
        """Votes (+1/-1) of the stump on every row."""
        above = X[:, self.feature_index] > self.threshold
        return np.where(above, self.polarity, -self.polarity)


@dataclass(frozen=True)
class BoostModel:
    """Trained ensemble of stumps with its per-slot importance."""

    stumps: Tuple[DecisionStump, ...] = ()
    feature_mask: Tuple[int, ...] = ()
    n_rounds: int = 0
    importance: Tuple[float, ...] = ()
    slot_names: Tuple[str, ...] = SLOT_NAMES
    seed: Optional[int] = None
    weighted_error: Tuple[float, ...] = ()
    training_error: Tuple[float, ...] = ()

    @property
    def trained(self) -> bool:
        """Whether the ensemble holds at least one stump."""
        return bool(self.stumps)

    def error_bound(self) -> Tuple[float, ...]:
        """Running product of ``2 sqrt(err (1 - err))`` after every round."""
        errs = np.clip(
            np.asarray(self.weighted_error, dtype=float), EPSILON, 1 - EPSILON
        )
        return tuple(np.cumprod(2.0 * np.sqrt(errs * (1.0 - errs))).tolist())

    def decision_function(self, X: np.ndarray) -> np.ndarray:  # noqa: N803
        """Signed sum of stump votes for every row.

        Args:
            X: Feature matrix, one row per thread.

        Returns:
            The margins.

        Raises:
            UntrainedModel: The model has no stump.
            DimensionMismatch: Wrong number of columns.
        """
        if not self.trained:
            raise UntrainedModel("model has no stump")
        X = np.atleast_2d(np.asarray(X, dtype=float))  # noqa: N806
        if X.shape[1] != len(self.slot_names):
            raise DimensionMismatch(
                f"expected {len(self.slot_names)} columns, got {X.shape[1]}"
            )
        margin = np.zeros(X.shape[0])
        for stump in self.stumps:
            margin += stump.alpha * stump.vote(X)
        return margin


class Prediction(NamedTuple):
    """Predicted label of one thread and the ensemble margin behind it."""

    label: Label
    margin: float


@dataclass(frozen=True)
class Metrics:
    """Binary classification scores, controversial being the positive class."""

    accuracy: float
    precision: float
    recall: float
    f_measure: float
    tp: int
    fp: int
    tn: int
    fn: int
    undefined: Tuple[str, ...] = ()

    @classmethod
    def from_confusion(cls, tp: int, fp: int, tn: int, fn: int) -> "Metrics":
        """Scores from confusion counts.

        Precision or recall with a zero denominator is reported as 0 and
        listed in ``undefined``; so is the F-measure when either is 0.

        Args:
            tp: True positives.
            fp: False positives.
            tn: True negatives.
            fn: False negatives.

        Returns:
            The metrics.

        Example:
            >>> m = Metrics.from_confusion(tp=3, fp=1, tn=5, fn=1)
            >>> m.accuracy, m.precision, m.recall, m.f_measure
            (0.8, 0.75, 0.75, 0.75)
        """
        undefined = []
        total = tp + fp + tn + fn
        if tp + fp:
            precision = tp / (tp + fp)
        else:
            precision = 0.0
            undefined.append("precision")
        if tp + fn:
            recall = tp / (tp + fn)
        else:
            recall = 0.0
            undefined.append("recall")
        if precision + recall > 0:
            f_measure = 2 * precision * recall / (precision + recall)
        else:
            f_measure = 0.0
            undefined.append("f_measure")
        return cls(
            accuracy=(tp + tn) / total if total else 0.0,
            precision=precision,
            recall=recall,
            f_measure=f_measure,
            tp=tp,
            fp=fp,
            tn=tn,
            fn=fn,
            undefined=tuple(undefined),
        )

    def scores(self) -> Dict[str, float]:
        """The four rate metrics by name."""
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f_measure": self.f_measure,
        }


def _check_labels(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1:
        raise DimensionMismatch("labels must be one-dimensional")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 (non-controversial) or 1 (controversial)")
    return y.astype(int)


def _check_matrix(X: np.ndarray, y: np.ndarray) -> np.ndarray:  # noqa: N803
    X = np.asarray(X, dtype=float)  # noqa: N806
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DimensionMismatch(
            f"matrix of shape {X.shape} does not match {y.shape[0]} labels"
        )
    if not np.isfinite(X).all():
        raise ValueError("feature matrix holds a non-finite value")
    return X


def _mask_slots(mask: Optional[MaskSpec], width: int) -> Tuple[int, ...]:
    if mask is None:
        slots: Sequence[int] = range(width)
    elif width == N_SLOTS:
        slots = resolve_mask(mask)
    elif isinstance(mask, str):
        raise DimensionMismatch(f"named mask {mask!r} needs {N_SLOTS} columns")
    else:
        slots = sorted({int(s) for s in mask})  # type: ignore[arg-type]
    if not slots:
        raise EmptyMask("feature mask selects no slot")
    if min(slots) < 0 or max(slots) >= width:
        raise DimensionMismatch(f"mask slot outside [0, {width})")
    return tuple(slots)


class _StumpSearch:
    """Best stump over every masked slot at once, on presorted columns."""

    def __init__(self, X: np.ndarray, slots: Tuple[int, ...]) -> None:  # noqa: N803
        self.slots = slots
        cols = X[:, slots]
        self.order = np.argsort(cols, axis=0, kind="stable")
        self.sorted = np.take_along_axis(cols, self.order, axis=0)
        # a split between sorted positions i and i + 1 needs distinct values
        self.valid = self.sorted[:-1] < self.sorted[1:]

    @property
    def has_split(self) -> bool:
        return bool(self.valid.any())

    def best(self, w: np.ndarray, s: np.ndarray) -> Tuple[int, float, int, float]:
        w_pos = np.where(s > 0, w, 0.0)
        w_neg = np.where(s < 0, w, 0.0)
        cum_pos = np.cumsum(w_pos[self.order], axis=0)[:-1]
        cum_neg = np.cumsum(w_neg[self.order], axis=0)[:-1]
        total_pos, total_neg = w_pos.sum(), w_neg.sum()
        # polarity +1 errs on positives at or below the split, negatives above
        err_up = cum_pos + (total_neg - cum_neg)
        err_down = cum_neg + (total_pos - cum_pos)
        err = np.where(self.valid, np.minimum(err_up, err_down), np.inf)
        # slot-major scan: ties resolve to the lowest slot, then lowest threshold
        flat = int(np.argmin(err.T))
        col, pos = divmod(flat, err.shape[0])
        polarity = 1 if err_up[pos, col] <= err_down[pos, col] else -1
        lo, hi = self.sorted[pos, col], self.sorted[pos + 1, col]
        threshold = lo + (hi - lo) / 2.0
        if not lo <= threshold < hi:
            threshold = lo
        return self.slots[col], float(threshold), polarity, float(err[pos, col])


def train(
    X: np.ndarray,  # noqa: N803
    y: np.ndarray,
    mask: Optional[MaskSpec] = "all",
    rounds: int = DEFAULT_ROUNDS,
    seed: Optional[int] = None,
    slot_names: Optional[Sequence[str]] = None,
) -> BoostModel:
    """Fit a discrete AdaBoost ensemble of decision stumps.

    Every round fits the stump of least weighted error over all masked slots,
    midpoint thresholds and both polarities. Training stops early when the
    best stump is no better than chance, or after a perfect stump.

    Args:
        X: Feature matrix, one row per thread.
        y: Labels, 1 controversial, 0 non-controversial.
        mask: Mask name or slot indices; ``None`` uses every column.
        rounds: Maximum number of boosting rounds.
        seed: Seed of the run, recorded in the model. The learner itself is
            deterministic.
        slot_names: Column names; defaults to the feature vector slot names
            for full-width matrices and ``x0, x1, ...`` otherwise.

    Returns:
        The trained model.

    Raises:
        DimensionMismatch: Shapes of ``X``, ``y`` and ``slot_names`` disagree.
        DegenerateLabels: Fewer than two samples or a single class.
        EmptyMask: The mask selects nothing.
        NoWeakLearner: No stump beats chance in the first round.
        ValueError: ``rounds`` below 1, or invalid labels/values.
    """
    y = _check_labels(y)
    X = _check_matrix(X, y)  # noqa: N806
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    if y.shape[0] < 2 or np.unique(y).size < 2:
        raise DegenerateLabels("training needs both labels")
    width = X.shape[1]
    if slot_names is None:
        names = SLOT_NAMES if width == N_SLOTS else tuple(f"x{i}" for i in range(width))
    else:
        names = tuple(slot_names)
    if len(names) != width:
        raise DimensionMismatch(f"{len(names)} slot names for {width} columns")
    slots = _mask_slots(mask, width)

    s = np.where(y == 1, 1, -1)
    n = s.shape[0]
    w = np.full(n, 1.0 / n)
    search = _StumpSearch(X, slots)
    margin = np.zeros(n)
    stumps: List[DecisionStump] = []
    weighted_error: List[float] = []
    training_error: List[float] = []

    for round_no in range(rounds):
        if search.has_split:
            slot, threshold, polarity, err = search.best(w, s)
        elif round_no == 0:
            # all masked slots constant: a single vote for the weighted majority
            pos_weight = float(w[s > 0].sum())
            polarity = 1 if pos_weight > 0.5 else -1
            slot, threshold = slots[0], float("-inf")
            err = min(pos_weight, 1 - pos_weight)
        else:
            break
        logger.debug("round %d: slot %d weighted error %.6f", round_no, slot, err)
        if err >= 0.5 - EPSILON:
            break
        clamped = min(max(err, EPSILON), 1 - EPSILON)
        alpha = 0.5 * float(np.log((1 - clamped) / clamped))
        stump = DecisionStump(slot, threshold, polarity, alpha)
        votes = stump.vote(X)

        stumps.append(stump)
        weighted_error.append(err)
        margin += alpha * votes
        training_error.append(float(np.mean(np.where(margin > 0, 1, -1) != s)))

        w = w * np.exp(-alpha * s * votes)
        w = w / w.sum()
        if err <= EPSILON or not search.has_split:
            break

    if not stumps:
        raise NoWeakLearner("no stump beats chance on the training data")

    importance = np.zeros(width)
    for stump in stumps:
        importance[stump.feature_index] += abs(stump.alpha)
    importance = importance / importance.sum()
    logger.info(
        "trained %d stumps over %d slots, training error %.4f",
        len(stumps),
        len(slots),
        training_error[-1],
    )
    return BoostModel(
        stumps=tuple(stumps),
        feature_mask=slots,
        n_rounds=rounds,
        importance=tuple(importance.tolist()),
        slot_names=names,
        seed=seed,
        weighted_error=tuple(weighted_error),
        training_error=tuple(training_error),
    )


def predict(model: BoostModel, x: Union[np.ndarray, Sequence[float]]) -> Prediction:
    """Classify one thread.

    Args:
        model: A trained model.
        x: Feature vector of the thread.

    Returns:
        The label and the margin; a zero margin is non-controversial.
    """
    row = np.asarray(x, dtype=float)[np.newaxis, :]
    margin = float(model.decision_function(row)[0])
    label = Label.CONTROVERSIAL if margin > 0 else Label.NON_CONTROVERSIAL
    return Prediction(label=label, margin=margin)


def predict_labels(model: BoostModel, X: np.ndarray) -> np.ndarray:  # noqa: N803
    """0/1 predictions for every row of a matrix."""
    return (model.decision_function(X) > 0).astype(int)


def evaluate(model: BoostModel, X: np.ndarray, y: np.ndarray) -> Metrics:  # noqa: N803
    """Score a model on labeled data.

    Args:
        model: A trained model.
        X: Feature matrix.
        y: True labels.

    Returns:
        Confusion counts and derived metrics.
    """
    y = _check_labels(y)
    X = _check_matrix(X, y)  # noqa: N806
    return score_predictions(y, predict_labels(model, X))


def score_predictions(y: np.ndarray, predicted: np.ndarray) -> Metrics:
    """Metrics of 0/1 predictions against 0/1 labels."""
    tn, fp, fn, tp = confusion_matrix(y, predicted, labels=[0, 1]).ravel()
    return Metrics.from_confusion(tp=int(tp), fp=int(fp), tn=int(tn), fn=int(fn))


def feature_importance(model: BoostModel) -> List[Tuple[str, float]]:
    """Masked slots ranked by importance, ties broken by slot index.

    Args:
        model: A trained model.

    Returns:
        ``(slot name, score)`` pairs, most important first.

    Raises:
        UntrainedModel: The model has no stump.
    """
    if not model.trained:
        raise UntrainedModel("model has no stump")
    ranked = sorted(model.feature_mask, key=lambda i: (-model.importance[i], i))
    return [(model.slot_names[i], model.importance[i]) for i in ranked]


class Classifier(Protocol):
    """Anything with the scikit-learn ``fit``/``predict`` contract."""

    def fit(self, X: np.ndarray, y: np.ndarray) -> Any:  # noqa: N803
        """Fit on a matrix and 0/1 labels."""

    def predict(self, X: np.ndarray) -> np.ndarray:  # noqa: N803
        """0/1 labels for every row."""


class BoostClassifier(ClassifierMixin, BaseEstimator):  # type: ignore[misc]
    """scikit-learn estimator around :func:`train`."""

    def __init__(
        self, rounds: int = DEFAULT_ROUNDS, seed: Optional[int] = None
    ) -> None:
        """Keep hyper-parameters as scikit-learn expects.

        Args:
            rounds: Maximum number of boosting rounds.
            seed: Seed recorded in the model.
        """
        self.rounds = rounds
        self.seed = seed

    def fit(self, X: np.ndarray, y: np.ndarray) -> "BoostClassifier":  # noqa: N803
        """Train on every column of ``X``."""
        self.model_ = train(X, y, mask=None, rounds=self.rounds, seed=self.seed)
        self.classes_ = np.array([0, 1])
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:  # noqa: N803
        """0/1 labels."""
        return predict_labels(self.model_, X)

    def decision_function(self, X: np.ndarray) -> np.ndarray:  # noqa: N803
        """Ensemble margins."""
        return self.model_.decision_function(X)


@dataclass(frozen=True)
class CrossValidation:
    """Per-fold metrics with their mean and standard deviation."""

    folds: Tuple[Metrics, ...]
    mean: Dict[str, float] = field(default_factory=dict)
    std: Dict[str, float] = field(default_factory=dict)

    @property
    def pooled(self) -> Metrics:
        """Metrics of the confusion counts summed over every test fold."""
        return Metrics.from_confusion(
            tp=sum(m.tp for m in self.folds),
            fp=sum(m.fp for m in self.folds),
            tn=sum(m.tn for m in self.folds),
            fn=sum(m.fn for m in self.folds),
        )


def cross_validate(
    X: np.ndarray,  # noqa: N803
    y: np.ndarray,
    mask: MaskSpec = "all",
    k_folds: int = 5,
    seed: int = 42,
    rounds: int = DEFAULT_ROUNDS,
    groups: Optional[Sequence[Any]] = None,
    classifier: Optional[Callable[[], Classifier]] = None,
) -> CrossValidation:
    """Stratified k-fold evaluation, deterministic under ``seed``.

    Args:
        X: Full-width feature matrix.
        y: 0/1 labels.
        mask: Slots shown to the classifier.
        k_folds: Number of folds.
        seed: Seed of the fold shuffling.
        rounds: Boosting rounds of the default classifier.
        groups: Source of every row; rows of one source stay in one fold.
        classifier: Factory of a plug-in classifier; defaults to
            :class:`BoostClassifier`.

    Returns:
        Metrics of every test fold, their mean and std.

    Raises:
        TooFewSamples: A class has fewer rows than folds, or too few groups.
    """
    y = _check_labels(y)
    X = _check_matrix(X, y)  # noqa: N806
    slots = _mask_slots(mask, X.shape[1])
    if k_folds < 2:
        raise TooFewSamples("cross-validation needs at least 2 folds")
    per_class = np.bincount(y, minlength=2)
    if per_class.min() < k_folds:
        raise TooFewSamples(
            f"{k_folds} folds need {k_folds} threads per class,"
            f" got {per_class.tolist()}"
        )
    if groups is None:
        splits: Iterable[Tuple[np.ndarray, np.ndarray]] = StratifiedKFold(
            n_splits=k_folds, shuffle=True, random_state=seed
        ).split(X, y)
    else:
        if len(set(groups)) < k_folds:
            raise TooFewSamples(f"{k_folds} folds need {k_folds} distinct sources")
        splits = StratifiedGroupKFold(
            n_splits=k_folds, shuffle=True, random_state=seed
        ).split(X, y, groups=list(groups))

    make = classifier or (lambda: BoostClassifier(rounds=rounds, seed=seed))
    Xm = X[:, slots]  # noqa: N806
    folds = []
    for fold_no, (train_idx, test_idx) in enumerate(splits):
        clf = make()
        clf.fit(Xm[train_idx], y[train_idx])
        predicted = np.asarray(clf.predict(Xm[test_idx])).astype(int)
        metrics = score_predictions(y[test_idx], predicted)
        logger.debug("fold %d: accuracy %.4f", fold_no, metrics.accuracy)
        folds.append(metrics)

    table = np.array([list(m.scores().values()) for m in folds])
    names = list(folds[0].scores())
    return CrossValidation(
        folds=tuple(folds),
        mean=dict(zip(names, table.mean(axis=0).tolist())),
        std=dict(zip(names, table.std(axis=0).tolist())),
    )


def model_to_dict(model: BoostModel) -> Dict[str, Any]:
    """Versioned plain-data form of a model."""
    return {
        "version": MODEL_FORMAT_VERSION,
        "slot_names": list(model.slot_names),
        "mask": list(model.feature_mask),
        "n_rounds": model.n_rounds,
        "seed": model.seed,
        "stumps": [
            {
                "slot": s.feature_index,
                # null marks the constant vote, whose threshold is -inf
                "threshold": s.threshold if np.isfinite(s.threshold) else None,
                "polarity": s.polarity,
                "alpha": s.alpha,
            }
            for s in model.stumps
        ],
        "importance": list(model.importance),
        "weighted_error": list(model.weighted_error),
        "training_error": list(model.training_error),
    }


def model_from_dict(data: Dict[str, Any]) -> BoostModel:
    """Rebuild a model from :func:`model_to_dict` output.

    Args:
        data: Plain-data model.

    Returns:
        The model.

    Raises:
        ModelFormatError: Unknown version or missing keys.
    """
    if data.get("version") != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model version {data.get('version')!r}")
    try:
        return BoostModel(
            stumps=tuple(
                DecisionStump(
                    feature_index=int(s["slot"]),
                    threshold=(
                        float("-inf")
                        if s["threshold"] is None
                        else float(s["threshold"])
                    ),
                    polarity=int(s["polarity"]),
                    alpha=float(s["alpha"]),
                )
                for s in data["stumps"]
            ),
            feature_mask=tuple(int(i) for i in data["mask"]),
            n_rounds=int(data["n_rounds"]),
            importance=tuple(float(v) for v in data["importance"]),
            slot_names=tuple(data["slot_names"]),
            seed=data.get("seed"),
            weighted_error=tuple(float(v) for v in data.get("weighted_error", ())),
            training_error=tuple(float(v) for v in data.get("training_error", ())),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise ModelFormatError(f"malformed model: {err}") from err


def model_to_json(model: BoostModel) -> str:
    """Strict JSON text of a model; floats keep their shortest exact form."""
    text = json.dumps(model_to_dict(model), indent=2, sort_keys=True, allow_nan=False)
    return text + "\n"


def model_from_json(text: str) -> BoostModel:
    """Parse :func:`model_to_json` output.

    Args:
        text: JSON document.

    Returns:
        The model.

    Raises:
        ModelFormatError: Not a JSON object or not a model.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ModelFormatError(f"model is not valid JSON: {err}") from err
    if not isinstance(data, dict):
        raise ModelFormatError("model JSON must be an object")
    return model_from_dict(data)


def save_model(model: BoostModel, path: Path) -> None:
    """Write a model as JSON."""
    path.write_text(model_to_json(model), encoding="utf-8")


def load_model(path: Path) -> BoostModel:
    """Read a model written by :func:`save_model`.

    Args:
        path: Model file.

    Returns:
        The model.

    Raises:
        ModelFormatError: Not UTF-8 text, or not a model.
    """
    try:
        text = path.read_bytes().decode("utf-8")
    except UnicodeDecodeError as err:
        raise ModelFormatError(f"{path}: model is not UTF-8 text: {err}") from err
    return model_from_json(text)
