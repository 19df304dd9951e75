"""Fixed-order feature vector of a thread, slot names and ablation masks."""
from dataclasses import dataclass
from dataclasses import fields
from typing import Dict
from typing import Iterable
from typing import Mapping
from typing import NamedTuple
from typing import Tuple
from typing import Union

import numpy as np

from .baseline import baseline_diagnostics
from .baseline import baseline_features
from .baseline import BaselineFeatures
from .exceptions import DimensionMismatch
from .exceptions import EmptyMask
from .motifs import DYAD_CLASSES
from .motifs import motif_features
from .motifs import TRIAD_CODES
from .thread_model import count_users
from .thread_model import FollowGraph
from .thread_model import project_reply_graph
from .thread_model import ReplyTree


class FeatureSlot:
    """Names of the slots of a feature vector, and of their blocks."""

    BASELINE: Tuple[str, ...] = tuple(f.name for f in fields(BaselineFeatures))
    DYADIC: Tuple[str, ...] = tuple(f"dyad_{c.value}" for c in DYAD_CLASSES)
    TRIADIC: Tuple[str, ...] = tuple(f"triad_{code}" for code in TRIAD_CODES)
    TRIANGLE_RATIO = "triangle_ratio"
    LABEL = "label"
    THREAD_ID = "thread_id"


SLOT_NAMES: Tuple[str, ...] = (
    FeatureSlot.BASELINE
    + FeatureSlot.DYADIC
    + FeatureSlot.TRIADIC
    + (FeatureSlot.TRIANGLE_RATIO,)
)
N_SLOTS = len(SLOT_NAMES)
SLOT_INDEX: Mapping[str, int] = {name: i for i, name in enumerate(SLOT_NAMES)}

_N_BASELINE = len(FeatureSlot.BASELINE)
_N_DYADIC = len(FeatureSlot.DYADIC)

MASKS: Mapping[str, Tuple[int, ...]] = {
    "baseline": tuple(range(_N_BASELINE)),
    "baseline+dyadic": tuple(range(_N_BASELINE + _N_DYADIC)),
    "baseline+dyadic+triadic": tuple(range(N_SLOTS)),
    "dyadic-only": tuple(range(_N_BASELINE, _N_BASELINE + _N_DYADIC)),
    "all": tuple(range(N_SLOTS)),
}

# row blocks of the ablation table, in display order
ABLATION_MASKS: Tuple[str, ...] = (
    "baseline",
    "baseline+dyadic",
    "baseline+dyadic+triadic",
    "dyadic-only",
)

MaskSpec = Union[str, Iterable[Union[int, str]]]


def resolve_mask(mask: MaskSpec) -> Tuple[int, ...]:
    """Turn a mask name, or a collection of slot indices/names, into slots.

    Args:
        mask: A key of :data:`MASKS`, or slot indices and/or slot names.

    Returns:
        Sorted distinct slot indices.

    Raises:
        EmptyMask: No slot selected.
        KeyError: Unknown mask or slot name.
        DimensionMismatch: Slot index out of range.

    Example:
        >>> resolve_mask("dyadic-only")
        (10, 11, 12, 13, 14, 15, 16)
    """
    if isinstance(mask, str):
        if mask not in MASKS:
            raise KeyError(f"unknown mask {mask!r}, expected one of {sorted(MASKS)}")
        slots = set(MASKS[mask])
    else:
        slots = set()
        for item in mask:
            index = SLOT_INDEX[item] if isinstance(item, str) else int(item)
            if not 0 <= index < N_SLOTS:
                raise DimensionMismatch(f"slot {index} outside [0, {N_SLOTS})")
            slots.add(index)
    if not slots:
        raise EmptyMask("feature mask selects no slot")
    return tuple(sorted(slots))


@dataclass(frozen=True)
class FeatureVector:
    """Predictors of one thread, in :data:`SLOT_NAMES` order."""

    values: Tuple[float, ...]

    def __post_init__(self) -> None:
        """Check length and finiteness.

        Raises:
            DimensionMismatch: Wrong length.
            ValueError: A non-finite value.
        """
        if len(self.values) != N_SLOTS:
            raise DimensionMismatch(
                f"feature vector has {len(self.values)} slots, expected {N_SLOTS}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature vector holds a non-finite value")

    def as_array(self) -> np.ndarray:
        """Values as a float array."""
        return np.asarray(self.values, dtype=float)

    def as_dict(self) -> Dict[str, float]:
        """Slot name to value."""
        return dict(zip(SLOT_NAMES, self.values))

    def __getitem__(self, slot: Union[int, str]) -> float:
        index = SLOT_INDEX[slot] if isinstance(slot, str) else slot
        return self.values[index]


class ThreadFeatures(NamedTuple):
    """Feature vector of a thread and its diagnostics record."""

    vector: FeatureVector
    diagnostics: Dict[str, float]


def extract_thread(tree: ReplyTree, fg: FollowGraph) -> ThreadFeatures:
    """Compute every feature of one thread.

    Args:
        tree: The reply tree.
        fg: Follow graph covering (at least) the thread's users.

    Returns:
        The feature vector and the diagnostics (user count, exploratory
        baseline quantities, raw motif counts).
    """
    rg = project_reply_graph(tree)
    base = baseline_features(tree, rg)
    motifs = motif_features(rg, fg)
    vector = FeatureVector(
        tuple(base.as_dict().values())
        + motifs.dyad_freq
        + motifs.triad_freq
        + (motifs.triangle_ratio,)
    )

    diagnostics: Dict[str, float] = {"n_users": float(count_users(tree))}
    diagnostics.update(baseline_diagnostics(tree, rg))
    diagnostics.update(
        {
            f"count_{name}": float(c)
            for name, c in zip(FeatureSlot.DYADIC, motifs.dyad_counts)
        }
    )
    diagnostics.update(
        {
            f"count_{name}": float(c)
            for name, c in zip(FeatureSlot.TRIADIC, motifs.triad_counts)
        }
    )
    diagnostics["n_reply_triangles"] = float(motifs.n_reply_triangles)
    return ThreadFeatures(vector=vector, diagnostics=diagnostics)
