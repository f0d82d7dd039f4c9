"""Stratified annotation sessions: sampling, recording, export, persistence."""

import json
import random

import pytest

from conftest import make_corpus
from oracles import reference_kappa
from slangtriage.annotation import (
    DEFAULT_TAKE_ALL,
    SKIP,
    AnnotationSession,
    SamplingPolicy,
    build_session,
    load_session,
    save_session,
)
from slangtriage.corpus import Corpus, Post
from slangtriage.labels import Label, Prediction, PredictionSet, read_gold


def make_predicted_corpus(counts: dict[Label, int], *, shadow_style: bool = False):
    """A corpus plus one prediction per post, with the given label histogram.

    With shadow_style=True error labels are stored post-resolution (semantic
    negative with the error kept as shadow); stratification must not care.
    """
    posts = []
    preds = PredictionSet(predictor_id="fixture")
    i = 0
    for label, n in counts.items():
        for _ in range(n):
            pid = f"p{i:05d}"
            posts.append(Post(id=pid, text=f"post number {i}"))
            if shadow_style and label not in (
                Label.OPIOID_RELATED,
                Label.NOT_OPIOID_RELATED,
                Label.UNSURE,
            ):
                preds.add(Prediction(post_id=pid, label=Label.NOT_OPIOID_RELATED, shadow_label=label))
            else:
                preds.add(Prediction(post_id=pid, label=label))
            i += 1
    return Corpus(posts), preds


LARGE_COUNTS = {
    Label.OPIOID_RELATED: 395,
    Label.UNSURE: 865,
    Label.CONTENT_RESTRICTION_ERROR: 987,
    Label.API_ERROR: 52,
    Label.NOT_OPIOID_RELATED: 57067,
}


@pytest.fixture(scope="module")
def large_fixture():
    return make_predicted_corpus(LARGE_COUNTS)


class TestSamplingPolicy:
    def test_exactly_one_sampling_knob(self):
        with pytest.raises(ValueError):
            SamplingPolicy()
        with pytest.raises(ValueError):
            SamplingPolicy(negative_fraction=0.5, negative_count=10)
        with pytest.raises(ValueError):
            SamplingPolicy(negative_fraction=1.5)
        with pytest.raises(ValueError):
            SamplingPolicy(negative_count=-1)

    def test_dict_roundtrip(self):
        policy = SamplingPolicy(
            take_all_of=frozenset({Label.OPIOID_RELATED}), negative_fraction=0.25, seed=9
        )
        assert SamplingPolicy.from_dict(policy.as_dict()) == policy


class TestBuildSession:
    def test_fixture_session_size_exact(self, large_fixture):
        corpus, preds = large_fixture
        policy = SamplingPolicy(negative_fraction=0.0225, seed=7)
        session = build_session(preds, corpus, policy)
        # 395 + 865 + 987 + 52 kept whole, plus floor(57067 * 0.0225) = 1284
        assert len(session.items) == 3583

    def test_shadow_style_stratifies_identically(self, large_fixture):
        corpus, _ = large_fixture
        _, shadow_preds = make_predicted_corpus(LARGE_COUNTS, shadow_style=True)
        policy = SamplingPolicy(negative_fraction=0.0225, seed=7)
        a = build_session(large_fixture[1], corpus, policy)
        b = build_session(shadow_preds, corpus, policy)
        assert [it.post_id for it in a.items] == [it.post_id for it in b.items]
        assert a.session_id == b.session_id

    def test_take_all_strata_fully_included(self):
        corpus, preds = make_predicted_corpus(
            {
                Label.OPIOID_RELATED: 5,
                Label.UNSURE: 3,
                Label.CONTENT_RESTRICTION_ERROR: 2,
                Label.API_ERROR: 1,
                Label.NOT_OPIOID_RELATED: 200,
            }
        )
        session = build_session(preds, corpus, SamplingPolicy(negative_fraction=0.0, seed=1))
        chosen = {it.post_id for it in session.items}
        for post in corpus:
            if preds.get(post.id).raw_label in DEFAULT_TAKE_ALL:
                assert post.id in chosen
        assert len(session.items) == 11

    def test_fraction_floor_is_float_safe(self):
        # 100 * 0.29 is 28.999999999999996 in binary floating point; the
        # sampler must still take 29.
        corpus, preds = make_predicted_corpus({Label.NOT_OPIOID_RELATED: 100})
        policy = SamplingPolicy(take_all_of=frozenset(), negative_fraction=0.29, seed=0)
        assert len(build_session(preds, corpus, policy).items) == 29

    def test_fraction_one_is_shuffled_permutation(self):
        corpus, preds = make_predicted_corpus({Label.NOT_OPIOID_RELATED: 300})
        policy = SamplingPolicy(take_all_of=frozenset(), negative_fraction=1.0, seed=3)
        session = build_session(preds, corpus, policy)
        ids = [it.post_id for it in session.items]
        assert sorted(ids) == sorted(p.id for p in corpus)
        assert ids != [p.id for p in corpus]  # vanishingly unlikely for n=300

    def test_negative_count_mode(self):
        corpus, preds = make_predicted_corpus(
            {Label.OPIOID_RELATED: 4, Label.NOT_OPIOID_RELATED: 50}
        )
        session = build_session(preds, corpus, SamplingPolicy(negative_count=10, seed=0))
        assert len(session.items) == 14

    def test_negative_count_overflow(self):
        corpus, preds = make_predicted_corpus({Label.NOT_OPIOID_RELATED: 5})
        with pytest.raises(ValueError):
            build_session(preds, corpus, SamplingPolicy(negative_count=6, seed=0))

    def test_missing_prediction_rejected(self):
        corpus, preds = make_predicted_corpus({Label.OPIOID_RELATED: 3})
        bigger = Corpus(list(corpus) + [Post(id="extra", text="no prediction")])
        with pytest.raises(ValueError) as err:
            build_session(preds, bigger, SamplingPolicy(negative_fraction=0.5, seed=0))
        assert "extra" in str(err.value)

    def test_byte_identical_rebuild(self, large_fixture):
        corpus, preds = large_fixture
        policy = SamplingPolicy(negative_fraction=0.0225, seed=42)
        doc_a = json.dumps(build_session(preds, corpus, policy).to_document(), sort_keys=True)
        doc_b = json.dumps(build_session(preds, corpus, policy).to_document(), sort_keys=True)
        assert doc_a == doc_b

    def test_seed_changes_selection(self, large_fixture):
        corpus, preds = large_fixture
        a = build_session(preds, corpus, SamplingPolicy(negative_fraction=0.0225, seed=1))
        b = build_session(preds, corpus, SamplingPolicy(negative_fraction=0.0225, seed=2))
        assert [it.post_id for it in a.items] != [it.post_id for it in b.items]
        assert a.session_id != b.session_id

    def test_serialized_session_carries_no_machine_labels(self):
        corpus, preds = make_predicted_corpus(
            {Label.OPIOID_RELATED: 10, Label.NOT_OPIOID_RELATED: 40}
        )
        session = build_session(preds, corpus, SamplingPolicy(negative_fraction=0.5, seed=0))
        doc = session.to_document()
        # the policy block may name label strata; the items and (empty)
        # responses must not reveal what the machine predicted for any post
        serialized = json.dumps([doc["items"], doc["responses"]])
        for label in Label:
            assert label.value not in serialized
        assert all(set(it.keys()) == {"post_id", "text"} for it in doc["items"])


def small_session(n=6) -> AnnotationSession:
    corpus, preds = make_predicted_corpus({Label.OPIOID_RELATED: n})
    return build_session(preds, corpus, SamplingPolicy(negative_fraction=0.0, seed=0))


class TestRecording:
    def test_label_then_relabel_keeps_audit(self):
        session = small_session()
        pid = session.items[0].post_id
        session.record_label(pid, "ann1", Label.OPIOID_RELATED, now=1.0)
        response = session.record_label(pid, "ann1", "not-opioid-related", now=2.0)
        assert response.label is Label.NOT_OPIOID_RELATED
        assert response.audit == ["opioid-related", "not-opioid-related"]
        assert response.recorded_at == 2.0
        assert len([r for r in session.responses.values() if r.post_id == pid]) == 1

    def test_two_annotators_independent(self):
        session = small_session()
        pid = session.items[0].post_id
        session.record_label(pid, "a", Label.OPIOID_RELATED, now=1.0)
        session.record_label(pid, "b", Label.UNSURE, now=1.0)
        assert session.responses[(pid, "a")].label is Label.OPIOID_RELATED
        assert session.responses[(pid, "b")].label is Label.UNSURE
        assert session.annotators() == ["a", "b"]

    def test_skip(self):
        session = small_session()
        pid = session.items[0].post_id
        response = session.record_label(pid, "a", SKIP, now=1.0)
        assert response.status == "skipped"
        assert response.label is None
        assert response.audit == ["skip"]

    def test_error_labels_rejected(self):
        session = small_session()
        pid = session.items[0].post_id
        with pytest.raises(ValueError):
            session.record_label(pid, "a", Label.API_ERROR)
        with pytest.raises(ValueError):
            session.record_label(pid, "a", "banana")

    def test_unknown_post_rejected(self):
        session = small_session()
        with pytest.raises(ValueError):
            session.record_label("nope", "a", Label.UNSURE)

    def test_next_pending_walks_in_order(self):
        session = small_session(3)
        order = [it.post_id for it in session.items]
        assert session.next_pending("a").post_id == order[0]
        session.record_label(order[0], "a", Label.UNSURE, now=1.0)
        assert session.next_pending("a").post_id == order[1]
        session.record_label(order[1], "a", SKIP, now=1.0)  # skips count as answered
        assert session.next_pending("a").post_id == order[2]
        session.record_label(order[2], "a", Label.OPIOID_RELATED, now=1.0)
        assert session.next_pending("a") is None
        assert session.progress("a") == (3, 3)
        assert session.progress("b") == (0, 3)


class TestExportAndAgreement:
    def test_export_in_session_order_excludes_skips(self):
        session = small_session(4)
        ids = [it.post_id for it in session.items]
        session.record_label(ids[2], "a", Label.UNSURE, now=1.0)
        session.record_label(ids[0], "a", Label.OPIOID_RELATED, now=1.0)
        session.record_label(ids[1], "a", SKIP, now=1.0)
        rows = session.export_gold("a")
        assert rows == [(ids[0], Label.OPIOID_RELATED), (ids[2], Label.UNSURE)]

    def test_export_requires_labels(self):
        session = small_session(2)
        with pytest.raises(ValueError):
            session.export_gold("a")

    def test_export_roundtrips_through_gold_csv(self, tmp_path):
        session = small_session(3)
        for it in session.items:
            session.record_label(it.post_id, "a", Label.NOT_OPIOID_RELATED, now=1.0)
        path = tmp_path / "gold.csv"
        from slangtriage.annotation import write_gold_csv

        with open(path, "w", encoding="utf-8", newline="") as fh:
            write_gold_csv(session.export_gold("a"), fh)
        with open(path, "r", encoding="utf-8", newline="") as fh:
            back = read_gold(fh)
        assert back == {it.post_id: Label.NOT_OPIOID_RELATED for it in session.items}

    def test_agreement_between_matches_reference(self):
        session = small_session(6)
        ids = [it.post_id for it in session.items]
        seq_a = [Label.OPIOID_RELATED, Label.OPIOID_RELATED, Label.NOT_OPIOID_RELATED, Label.UNSURE]
        seq_b = [Label.OPIOID_RELATED, Label.NOT_OPIOID_RELATED, Label.NOT_OPIOID_RELATED, Label.UNSURE]
        for pid, la, lb in zip(ids, seq_a, seq_b):
            session.record_label(pid, "a", la, now=1.0)
            session.record_label(pid, "b", lb, now=1.0)
        # one item labeled by only one annotator must be ignored
        session.record_label(ids[4], "a", Label.UNSURE, now=1.0)
        report = session.agreement_between("a", "b")
        assert report.n_items == 4
        expected = reference_kappa([l.value for l in seq_a], [l.value for l in seq_b])
        assert report.kappa_3class == pytest.approx(expected, abs=1e-12)


class TestPersistence:
    def test_save_load_roundtrip(self, tmp_path):
        session = small_session(4)
        ids = [it.post_id for it in session.items]
        session.record_label(ids[0], "a", Label.OPIOID_RELATED, now=10.0)
        session.record_label(ids[0], "a", Label.UNSURE, now=11.0)
        session.record_label(ids[1], "b", SKIP, now=12.0)
        path = str(tmp_path / "session.json")
        save_session(session, path)
        back = load_session(path)
        assert back.session_id == session.session_id
        assert back.items == session.items
        assert back.policy == session.policy
        assert back.responses.keys() == session.responses.keys()
        restored = back.responses[(ids[0], "a")]
        assert restored.label is Label.UNSURE
        assert restored.audit == ["opioid-related", "unsure"]
        assert restored.recorded_at == 11.0
        assert back.responses[(ids[1], "b")].status == "skipped"

    def test_saved_file_is_stable(self, tmp_path):
        session = small_session(3)
        p1, p2 = str(tmp_path / "one.json"), str(tmp_path / "two.json")
        save_session(session, p1)
        save_session(session, p2)
        assert open(p1, "rb").read() == open(p2, "rb").read()
        assert not [name for name in tmp_path.iterdir() if ".tmp." in name.name]

    def test_summary(self):
        session = small_session(5)
        ids = [it.post_id for it in session.items]
        session.record_label(ids[0], "a", Label.UNSURE, now=1.0)
        session.record_label(ids[1], "a", Label.UNSURE, now=1.0)
        session.record_label(ids[0], "b", SKIP, now=1.0)
        assert session.summary() == {
            "session_id": session.session_id,
            "n_items": 5,
            "annotators": {"a": 2, "b": 1},
        }

    def test_duplicate_items_rejected(self):
        from slangtriage.annotation import SessionItem

        with pytest.raises(ValueError):
            AnnotationSession(
                session_id="x",
                items=[SessionItem("a", "t"), SessionItem("a", "t")],
                policy=SamplingPolicy(negative_fraction=0.5),
            )
