"""Detect controversy in conversation threads from interaction motifs."""
from .__main__ import main
from .baseline import baseline_features
from .baseline import BaselineFeatures
from .boost import BoostClassifier
from .boost import BoostModel
from .boost import cross_validate
from .boost import evaluate
from .boost import feature_importance
from .boost import load_model
from .boost import Metrics
from .boost import predict
from .boost import save_model
from .boost import train
from .dataset import analyze_subthreads
from .dataset import build_feature_matrix
from .dataset import filter_threads
from .dataset import load_dataset
from .dataset import run_ablation
from .dataset import save_dataset
from .features import extract_thread
from .features import FeatureSlot
from .features import FeatureVector
from .features import MASKS
from .motifs import classify_dyad
from .motifs import DyadClass
from .motifs import dyadic_census
from .motifs import motif_features
from .motifs import triadic_census
from .motifs import triangle_ratio
from .synthetic import generate_synthetic
from .synthetic import SynthParams
from .thread_model import build_reply_tree
from .thread_model import FollowGraph
from .thread_model import Label
from .thread_model import Post
from .thread_model import project_reply_graph
from .thread_model import ReplyGraph
from .thread_model import ReplyTree

__all__ = [
    "main",
    "baseline_features",
    "BaselineFeatures",
    "BoostClassifier",
    "BoostModel",
    "cross_validate",
    "evaluate",
    "feature_importance",
    "load_model",
    "Metrics",
    "predict",
    "save_model",
    "train",
    "analyze_subthreads",
    "build_feature_matrix",
    "filter_threads",
    "load_dataset",
    "run_ablation",
    "save_dataset",
    "extract_thread",
    "FeatureSlot",
    "FeatureVector",
    "MASKS",
    "classify_dyad",
    "DyadClass",
    "dyadic_census",
    "motif_features",
    "triadic_census",
    "triangle_ratio",
    "generate_synthetic",
    "SynthParams",
    "build_reply_tree",
    "FollowGraph",
    "Label",
    "Post",
    "project_reply_graph",
    "ReplyGraph",
    "ReplyTree",
]
