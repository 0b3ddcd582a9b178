import math
import random

import pytest

from journeykit.concepts import (
    ConceptVector,
    InvalidVectorError,
    Item,
    aggregate,
    cosine,
    tfidf_extract,
    top_terms,
)


def cv(entries):
    return ConceptVector(entries)


def random_vector(rng, vocab, max_terms=6):
    n = rng.randint(0, max_terms)
    terms = rng.sample(vocab, min(n, len(vocab)))
    return ConceptVector({t: rng.uniform(0.05, 1.0) for t in terms})


class TestConceptVector:
    def test_canonical_order_is_sorted(self):
        vec = cv({"zeta": 0.5, "alpha": 0.2, "mid": 0.9})
        assert [t for t, _ in vec.items()] == ["alpha", "mid", "zeta"]

    def test_zero_weights_dropped(self):
        vec = cv({"a": 0.0, "b": 0.5, "c": 1e-15})
        assert vec.to_dict() == {"b": 0.5}

    def test_negative_weight_rejected(self):
        with pytest.raises(InvalidVectorError):
            cv({"a": -0.1})

    def test_non_finite_weight_rejected(self):
        with pytest.raises(InvalidVectorError):
            cv({"a": float("nan")})
        with pytest.raises(InvalidVectorError):
            cv({"a": float("inf")})

    def test_empty_term_rejected(self):
        with pytest.raises(InvalidVectorError):
            cv({"": 0.5})

    def test_item_level_weights_capped_at_one(self):
        with pytest.raises(InvalidVectorError):
            Item(id="x", title="t", timestamp=0, concepts=cv({"a": 1.5}))
        # aggregated vectors may exceed 1
        assert aggregate([cv({"a": 0.9}), cv({"a": 0.9})]).get("a") == pytest.approx(1.8)


class TestCosine:
    def test_identical_nonzero_vectors(self):
        assert cosine(cv({"surf": 1.0}), cv({"surf": 1.0})) == 1.0

    def test_disjoint_supports(self):
        assert cosine(cv({"surf": 1.0}), cv({"chess": 1.0})) == 0.0

    def test_hand_computed_partial_overlap(self):
        # dot = 1, norms = sqrt(2) and 1 -> 1/sqrt(2)
        expected = 1.0 / math.sqrt(2.0)
        assert cosine(cv({"a": 1.0, "b": 1.0}), cv({"a": 1.0})) == pytest.approx(
            expected, abs=1e-9
        )

    def test_zero_or_empty_vector_gives_zero(self):
        assert cosine(cv({}), cv({"a": 1.0})) == 0.0
        assert cosine(cv({}), cv({})) == 0.0

    def test_properties_on_random_vectors(self):
        rng = random.Random(7)
        vocab = [f"t{i}" for i in range(12)]
        for _ in range(300):
            a = random_vector(rng, vocab)
            b = random_vector(rng, vocab)
            sim = cosine(a, b)
            assert 0.0 <= sim <= 1.0
            assert sim == cosine(b, a)
            if a:
                assert cosine(a, a) == pytest.approx(1.0, abs=1e-12)
                scale = rng.uniform(0.1, 3.0)
                scaled = ConceptVector({t: w * scale for t, w in a.items()})
                assert cosine(scaled, b) == pytest.approx(sim, abs=1e-12)


class TestAggregate:
    def test_hand_computed_sum(self):
        out = aggregate([cv({"a": 0.5}), cv({"a": 0.3, "b": 0.6})])
        assert out.to_dict() == pytest.approx({"a": 0.8, "b": 0.6})

    def test_empty_input(self):
        assert aggregate([]).to_dict() == {}

    def test_singleton_identity(self):
        assert aggregate([cv({"a": 1.0})]).to_dict() == {"a": 1.0}

    def test_order_independent_and_associative(self):
        rng = random.Random(11)
        vocab = [f"t{i}" for i in range(8)]
        vecs = [random_vector(rng, vocab) for _ in range(6)]
        forward = aggregate(vecs)
        backward = aggregate(reversed(vecs))
        nested = aggregate([aggregate(vecs[:3]), aggregate(vecs[3:])])
        for other in (backward, nested):
            assert set(other.to_dict()) == set(forward.to_dict())
            for term, weight in forward.items():
                assert other.get(term) == pytest.approx(weight, abs=1e-9)


class TestTopTerms:
    def test_tie_broken_lexicographically(self):
        assert top_terms(cv({"a": 0.2, "b": 0.9, "c": 0.9}), 2) == [("b", 0.9), ("c", 0.9)]

    def test_empty_vector(self):
        assert top_terms(cv({}), 3) == []

    def test_k_exceeds_size(self):
        assert top_terms(cv({"x": 0.5}), 5) == [("x", 0.5)]

    def test_k_zero_rejected(self):
        with pytest.raises(ValueError):
            top_terms(cv({"x": 0.5}), 0)

    def test_deterministic(self):
        vec = cv({f"t{i}": (i * 7919 % 13) / 13 + 0.01 for i in range(20)})
        assert top_terms(vec, 5) == top_terms(vec, 5)


class TestTfidfExtract:
    def test_single_doc_hand_computed(self):
        # "cat cat dog": counts cat=2 dog=1 "cat cat"=1 "cat dog"=1, idf=ln2
        # for every term, so max-normalizing by cat's 2*ln2 freezes:
        out = tfidf_extract([("d1", "cat cat dog")])
        vec = out["d1"].to_dict()
        assert vec["cat"] == pytest.approx(1.0)
        assert vec["dog"] == pytest.approx(0.5)
        assert vec["cat cat"] == pytest.approx(0.5)
        assert vec["cat dog"] == pytest.approx(0.5)
        assert vec["cat"] > vec["dog"]
        assert all(0.0 < w <= 1.0 for w in vec.values())

    def test_identical_docs_identical_vectors(self):
        out = tfidf_extract([("a", "ukulele strumming basics"), ("b", "ukulele strumming basics")])
        assert out["a"] == out["b"]

    def test_empty_doc_gives_empty_vector(self):
        out = tfidf_extract([("a", ""), ("b", "real words here")])
        assert out["a"].to_dict() == {}

    def test_tokenization_rules(self):
        # lowercase, split on non-alphanumeric runs, tokens < 2 chars dropped
        out = tfidf_extract([("a", "Cat-DOG! x 42 ok")])
        terms = set(out["a"].to_dict())
        assert "cat" in terms and "dog" in terms and "42" in terms and "ok" in terms
        assert "x" not in terms
        assert "cat dog" in terms  # bigram over surviving tokens

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            tfidf_extract([])
