"""Test cases for the dataset module."""
from pathlib import Path
from typing import List

import numpy as np
import pytest
from sklearn.linear_model import LogisticRegression
from sklearn.pipeline import make_pipeline
from sklearn.pipeline import Pipeline
from sklearn.preprocessing import StandardScaler

from motif_controversy.boost import BoostModel
from motif_controversy.boost import DecisionStump
from motif_controversy.dataset import analyze_subthreads
from motif_controversy.dataset import build_feature_matrix
from motif_controversy.dataset import Dataset
from motif_controversy.dataset import EvaluationProtocol
from motif_controversy.dataset import filter_threads
from motif_controversy.dataset import load_dataset
from motif_controversy.dataset import read_follows
from motif_controversy.dataset import read_threads
from motif_controversy.dataset import retention_summary
from motif_controversy.dataset import run_ablation
from motif_controversy.dataset import save_dataset
from motif_controversy.dataset import score_cell
from motif_controversy.exceptions import MissingParent
from motif_controversy.exceptions import ParseError
from motif_controversy.exceptions import UntrainedModel
from motif_controversy.features import N_SLOTS
from motif_controversy.features import SLOT_NAMES
from motif_controversy.synthetic import ClassParams
from motif_controversy.synthetic import generate_synthetic
from motif_controversy.synthetic import SynthParams
from motif_controversy.thread_model import build_reply_tree
from motif_controversy.thread_model import count_users
from motif_controversy.thread_model import direct_reply_subtrees
from motif_controversy.thread_model import FollowGraph
from motif_controversy.thread_model import Label
from motif_controversy.thread_model import Post
from motif_controversy.thread_model import ReplyTree

THREADS = Path("tests/sample_threads.jsonl")
FOLLOWS = Path("tests/sample_follows.tsv")


def star(thread_id: str, users: int) -> ReplyTree:
    """Thread in which every user but the root author replies to the root."""
    posts = [Post("0", "u0", None, 0)]
    posts += [Post(str(i), f"u{i}", "0", i) for i in range(1, users)]
    return build_reply_tree(posts, thread_id=thread_id)


def constant_model(polarity: int) -> BoostModel:
    """Model voting ``polarity`` on every row."""
    return BoostModel(
        stumps=(DecisionStump(0, -1e18, polarity, 1.0),),
        feature_mask=(0,),
        n_rounds=1,
        importance=(1.0,) + (0.0,) * (N_SLOTS - 1),
    )


@pytest.fixture(scope="module")
def corpus() -> Dataset:
    """Small labeled synthetic corpus."""
    small = ClassParams(n_threads=25, size_median=40.0)
    trees, fg = generate_synthetic(SynthParams(small, small, seed=3))
    return Dataset(trees=tuple(trees), follows=fg)


def test_load_sample() -> None:
    """Every sample thread and follow edge loads; the self-follow is dropped."""
    dataset = load_dataset(THREADS, FOLLOWS)
    assert [t.thread_id for t in dataset.trees][:2] == ["c1", "c2"]
    assert len(dataset.trees) == 9
    assert dataset.trees[-1].label is None
    assert len(dataset.follows.edges) == 6
    assert not dataset.follows.follows("a", "a")


def test_self_follow_warning(caplog: pytest.LogCaptureFixture) -> None:
    """Dropping a self-follow is logged with its line."""
    read_follows(FOLLOWS)
    assert "self-follow" in caplog.text
    assert ":8:" in caplog.text


def test_empty_follows_file(tmp_path: Path) -> None:
    """Without follow edges every dyad is A or B."""
    empty = tmp_path / "follows.tsv"
    empty.write_text("", encoding="utf-8")
    dataset = load_dataset(THREADS, empty)
    assert dataset.follows.edges == frozenset()
    matrix = build_feature_matrix(dataset.trees, dataset.follows)
    other = [SLOT_NAMES.index(f"dyad_{c}") for c in "CDEFG"]
    assert not matrix.X[:, other].any()


def test_missing_parent_strict(tmp_path: Path) -> None:
    """Strict mode stops on an invalid thread, naming it."""
    path = tmp_path / "threads.jsonl"
    path.write_text(
        '{"thread_id": "ok", "label": null, "posts": [{"id": "1", "author": "a",'
        ' "parent": null, "ts": 0}]}\n'
        '{"thread_id": "broken", "label": null, "posts": [{"id": "1", "author": "a",'
        ' "parent": null, "ts": 0}, {"id": "2", "author": "b", "parent": "9",'
        ' "ts": 1}]}\n',
        encoding="utf-8",
    )
    with pytest.raises(MissingParent) as info:
        read_threads(path, strict=True)
    assert info.value.thread_id == "broken"
    assert [t.thread_id for t in read_threads(path)] == ["ok"]


def test_malformed_line(tmp_path: Path) -> None:
    """Strict mode reports the line number of bad JSON; lenient mode skips it."""
    path = tmp_path / "threads.jsonl"
    good = THREADS.read_text(encoding="utf-8").splitlines()[0]
    other = good.replace("c1", "c9")
    path.write_text(f"{good}\n{{not json\n\n{other}\n", encoding="utf-8")
    with pytest.raises(ParseError) as info:
        read_threads(path, strict=True)
    assert info.value.line == 2
    assert [t.thread_id for t in read_threads(path)] == ["c1", "c9"]


def test_bad_follow_line(tmp_path: Path) -> None:
    """A follow line needs two tab-separated ids."""
    path = tmp_path / "follows.tsv"
    path.write_text("a\tb\nc d\n", encoding="utf-8")
    with pytest.raises(ParseError) as info:
        read_follows(path, strict=True)
    assert info.value.line == 2
    assert read_follows(path).edges == frozenset({("a", "b")})


def test_duplicate_thread_id(tmp_path: Path) -> None:
    """Thread ids are unique within a file."""
    line = THREADS.read_text(encoding="utf-8").splitlines()[0]
    path = tmp_path / "threads.jsonl"
    path.write_text(f"{line}\n{line}\n", encoding="utf-8")
    with pytest.raises(ParseError):
        read_threads(path, strict=True)
    assert len(read_threads(path)) == 1


def test_save_load_round_trip(tmp_path: Path) -> None:
    """Saving and loading is lossless and stable."""
    dataset = load_dataset(THREADS, FOLLOWS)
    first = (tmp_path / "a.jsonl", tmp_path / "a.tsv")
    second = (tmp_path / "b.jsonl", tmp_path / "b.tsv")
    save_dataset(dataset, *first)
    reloaded = load_dataset(*first, strict=True)
    save_dataset(reloaded, *second)
    assert reloaded.trees == dataset.trees
    assert reloaded.follows == dataset.follows
    assert first[0].read_bytes() == second[0].read_bytes()
    assert first[1].read_bytes() == second[1].read_bytes()


def test_filter_threads() -> None:
    """A 3-user thread passes k=2 but not k=3."""
    three = star("t3", 3)
    assert filter_threads([three], 2) == [three]
    assert filter_threads([three], 3) == []
    assert filter_threads([star("t1", 1)], 0) == [star("t1", 1)]
    with pytest.raises(ValueError):
        filter_threads([three], -1)


def test_filter_retention_counts() -> None:
    """100 threads: 97 with more than 3 users, 87 with more than 10."""
    trees: List[ReplyTree] = [star(f"a{i}", 3) for i in range(3)]
    trees += [star(f"b{i}", 5) for i in range(10)]
    trees += [star(f"c{i}", 11) for i in range(87)]
    assert [len(filter_threads(trees, k)) for k in (2, 3, 10)] == [100, 97, 87]
    summary = retention_summary(trees)
    assert summary["threads"].tolist() == [100, 97, 87]
    assert summary["share"].tolist() == pytest.approx([1.0, 0.97, 0.87])
    assert summary["avg_users"].iloc[2] == 11.0


def test_filter_is_monotone(corpus: Dataset) -> None:
    """A stricter filter keeps a subset."""
    for k1, k2 in ((0, 2), (2, 3), (3, 10), (10, 30)):
        loose = {t.thread_id for t in filter_threads(corpus.trees, k1)}
        strict = {t.thread_id for t in filter_threads(corpus.trees, k2)}
        assert strict <= loose


def test_feature_matrix_shape_and_csv(tmp_path: Path) -> None:
    """One row per thread, 38 slots plus the label, written deterministically."""
    dataset = load_dataset(THREADS, FOLLOWS)
    matrix = build_feature_matrix(dataset.trees, dataset.follows)
    assert matrix.X.shape == (9, 38)
    frame = matrix.frame()
    assert list(frame.columns) == list(SLOT_NAMES) + ["label"]
    assert frame["label"].tolist()[-1] == ""
    matrix.to_csv(tmp_path / "one.csv")
    build_feature_matrix(dataset.trees, dataset.follows).to_csv(tmp_path / "two.csv")
    assert (tmp_path / "one.csv").read_bytes() == (tmp_path / "two.csv").read_bytes()
    matrix.diagnostics_to_csv(tmp_path / "diagnostics.csv")
    header = (tmp_path / "diagnostics.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header.startswith("thread_id,label,n_users,max_cascade_depth")


def test_feature_rows_are_independent() -> None:
    """Dropping a thread changes no other row."""
    dataset = load_dataset(THREADS, FOLLOWS)
    full = build_feature_matrix(dataset.trees, dataset.follows)
    partial = build_feature_matrix(dataset.trees[1:], dataset.follows)
    assert np.array_equal(full.X[1:], partial.X)


def test_parallel_extraction_matches_serial(corpus: Dataset) -> None:
    """Worker processes produce the same matrix."""
    trees = corpus.trees[:8]
    serial = build_feature_matrix(trees, corpus.follows, jobs=1)
    parallel = build_feature_matrix(trees, corpus.follows, jobs=2)
    assert np.array_equal(serial.X, parallel.X)


def test_motif_slots_are_frequencies(corpus: Dataset) -> None:
    """Dyad and triad blocks sum to one or are all zero."""
    X = build_feature_matrix(corpus.trees, corpus.follows).X  # noqa: N806
    for block in (slice(10, 17), slice(17, 37)):
        sums = X[:, block].sum(axis=1)
        assert np.all(np.isclose(sums, 1.0) | (sums == 0.0))
    assert np.all((X[:, 37] >= 0) & (X[:, 37] <= 1))


def test_run_ablation_full_table(corpus: Dataset) -> None:
    """Four blocks by three filters, all populated."""
    matrix = build_feature_matrix(corpus.trees, corpus.follows)
    table = run_ablation(matrix, protocol=EvaluationProtocol(folds=3, rounds=20))
    assert len(table.frame) == 12
    assert not table.absent
    assert table.frame["accuracy"].notna().all()
    assert list(table.frame.columns) == [
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
    ]
    text = table.to_text()
    assert "baseline+dyadic+triadic" in text
    assert ">10 users" in text


def test_run_ablation_absent_cells() -> None:
    """Cells without enough threads per class are reported, not scored."""
    dataset = load_dataset(THREADS, FOLLOWS)
    matrix = build_feature_matrix(dataset.trees, dataset.follows)
    table = run_ablation(matrix, masks=["baseline"], ks=[2, 10])
    assert len(table.frame) == 2
    assert table.frame["accuracy"].isna().all()
    assert set(table.absent) == {("baseline", 2), ("baseline", 10)}
    assert "threads per class" in table.to_text()


def test_constant_slot_scores_majority_rate() -> None:
    """A mask holding only an always-zero slot predicts the majority class."""
    trees, fg = generate_synthetic(
        SynthParams(
            ClassParams(n_threads=30, size_median=10.0),
            ClassParams(n_threads=20, size_median=10.0),
            seed=5,
        )
    )
    matrix = build_feature_matrix(trees, fg)
    metrics = score_cell(matrix, ["triad_FO|FO|FO"], EvaluationProtocol(folds=5))
    assert metrics.accuracy == pytest.approx(0.6)


def test_holdout_protocol(corpus: Dataset) -> None:
    """A single split scores its test part."""
    matrix = build_feature_matrix(corpus.trees, corpus.follows)
    protocol = EvaluationProtocol(kind="holdout", rounds=10)
    metrics = score_cell(matrix, "baseline", protocol)
    assert metrics.tp + metrics.fp + metrics.tn + metrics.fn == 15


def test_unknown_protocol() -> None:
    """Only cross-validation and holdout exist."""
    with pytest.raises(ValueError):
        EvaluationProtocol(kind="bootstrap")


def test_subthreads_one_prediction_per_qualifying_subtree() -> None:
    """Every qualifying direct-reply subtree gets exactly one prediction."""
    params = ClassParams(n_threads=50, size_median=25.0)
    trees, fg = generate_synthetic(SynthParams(params, params, seed=8))
    report = analyze_subthreads(
        constant_model(1), trees, fg, k=2, only_non_controversial=False
    )
    expected = sum(
        count_users(sub) > 2 for tree in trees for sub in direct_reply_subtrees(tree)
    )
    assert len(report.predictions) == expected
    predictions = report.predictions
    keys = list(zip(predictions["thread_id"], predictions["subtree_root"]))
    assert len(set(keys)) == len(keys)
    assert report.fraction == 1.0


def test_subthreads_fraction_zero() -> None:
    """A model that never flags controversy gives fraction 0."""
    dataset = load_dataset(THREADS, FOLLOWS)
    report = analyze_subthreads(
        constant_model(-1),
        dataset.trees,
        dataset.follows,
        k=1,
        only_non_controversial=False,
    )
    assert len(report.predictions) > 0
    assert report.fraction == 0.0


def test_subthreads_without_qualifying_subtree() -> None:
    """Subtrees failing the user filter leave the fraction undefined."""
    tree = build_reply_tree(
        [Post("1", "a", None, 0), Post("2", "b", "1", 1), Post("3", "c", "1", 2)],
        thread_id="flat",
        label=Label.NON_CONTROVERSIAL,
    )
    report = analyze_subthreads(constant_model(1), [tree], FollowGraph(), k=2)
    assert report.predictions.empty
    assert report.fraction is None
    assert report.per_tree == {"flat": None}


def test_subthreads_selects_non_controversial() -> None:
    """Unlabeled threads predicted controversial and controversial ones are skipped."""
    dataset = load_dataset(THREADS, FOLLOWS)
    report = analyze_subthreads(constant_model(1), dataset.trees, dataset.follows)
    assert set(report.per_tree) == {"n1", "n2", "n3", "n4"}
    relaxed = analyze_subthreads(constant_model(-1), dataset.trees, dataset.follows)
    assert "u1" in relaxed.per_tree


def test_subthreads_untrained() -> None:
    """An untrained model is rejected."""
    with pytest.raises(UntrainedModel):
        analyze_subthreads(BoostModel(), [star("t", 4)], FollowGraph())


def scaled_logistic() -> Pipeline:
    """Plug-in classifier: standardised logistic regression."""
    return make_pipeline(StandardScaler(), LogisticRegression(max_iter=1000))


def test_cross_validated_cell_is_consistent(corpus: Dataset) -> None:
    """Rates of a cross-validated cell follow from its confusion counts."""
    matrix = build_feature_matrix(corpus.trees, corpus.follows)
    metrics = score_cell(matrix, "all", EvaluationProtocol(folds=5, rounds=20))
    assert metrics.tp + metrics.fp + metrics.tn + metrics.fn == 50
    assert metrics.accuracy == pytest.approx((metrics.tp + metrics.tn) / 50)
    if metrics.tp:
        assert metrics.precision == pytest.approx(
            metrics.tp / (metrics.tp + metrics.fp)
        )
        assert metrics.recall == pytest.approx(metrics.tp / (metrics.tp + metrics.fn))
        harmonic = 2 * metrics.precision * metrics.recall
        harmonic /= metrics.precision + metrics.recall
        assert metrics.f_measure == pytest.approx(harmonic)
        assert "f_measure" not in metrics.undefined


def test_run_ablation_plugin_classifier(corpus: Dataset) -> None:
    """Every cell can be scored by another estimator."""
    matrix = build_feature_matrix(corpus.trees, corpus.follows)
    table = run_ablation(
        matrix, protocol=EvaluationProtocol(folds=3), classifier=scaled_logistic
    )
    assert len(table.frame) == 12
    assert not table.absent
    assert table.frame["accuracy"].notna().all()


def test_holdout_plugin_classifier(corpus: Dataset) -> None:
    """The holdout split also accepts another estimator."""
    matrix = build_feature_matrix(corpus.trees, corpus.follows)
    protocol = EvaluationProtocol(kind="holdout")
    metrics = score_cell(matrix, "baseline", protocol, classifier=scaled_logistic)
    assert metrics.tp + metrics.fp + metrics.tn + metrics.fn == 15


def test_non_utf8_thread_line(tmp_path: Path) -> None:
    """An undecodable line is a parse error in strict mode and skipped otherwise."""
    path = tmp_path / "threads.jsonl"
    good = THREADS.read_bytes().splitlines()[0]
    path.write_bytes(good + b'\n{"thread_id": "t\xff2"}\n')
    assert [t.thread_id for t in read_threads(path)] == ["c1"]
    with pytest.raises(ParseError) as info:
        read_threads(path, strict=True)
    assert info.value.line == 2


def test_non_utf8_follow_line(tmp_path: Path) -> None:
    """Follow lines are decoded one at a time."""
    path = tmp_path / "follows.tsv"
    path.write_bytes(b"a\tb\n\xff\tc\n")
    assert read_follows(path).edges == frozenset({("a", "b")})
    with pytest.raises(ParseError) as info:
        read_follows(path, strict=True)
    assert info.value.line == 2


def test_zero_jobs_rejected() -> None:
    """Zero workers is neither every core nor a count."""
    dataset = load_dataset(THREADS, None)
    with pytest.raises(ValueError):
        build_feature_matrix(dataset.trees, dataset.follows, jobs=0)
