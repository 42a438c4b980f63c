import numpy as np
import numpy.testing as npt
import pytest

from relqa import model
from relqa.checks import check_model_gradients, random_tiny_case
from relqa.encoder import build_sentence_matrix
from relqa.errors import DimensionError
from relqa.model import BLOCK_NAMES, Hyperparams, StaleCacheError, init_params
from relqa.numeric import softmax_nll
from relqa.text import AnnotatedSentence

MODES = ["none", "fvec", "emb", "both"]


def sentence(idx, flags=None):
    idx = list(idx)
    return AnnotatedSentence([f"t{i}" for i in idx], flags or [0] * len(idx), idx)


class TestHyperparams:
    def test_join_size_none(self):
        assert Hyperparams(vocab_size=10, n=100, mode="none").join_size == 201

    def test_join_size_fvec(self):
        hp = Hyperparams(vocab_size=10, n=100, mode="fvec")
        assert hp.n_feat == 4 and hp.join_size == 205

    def test_defaults(self):
        hp = Hyperparams(vocab_size=10)
        assert (hp.d_w, hp.d_o, hp.n, hp.m, hp.conv, hp.mode) == (50, 5, 100, 5, "wide", "emb")
        assert hp.depth == 55

    @pytest.mark.parametrize("kwargs", [{"n": 0}, {"d_w": 0}, {"mode": "bogus"}, {"conv": "same"},
                                        {"mode": "emb", "n_feat": 4}])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            Hyperparams(vocab_size=10, **kwargs)


class TestInit:
    def test_seed_determinism(self):
        hp = Hyperparams(vocab_size=20, d_w=6, n=8, m=3)
        a, b = init_params(hp, seed=4), init_params(hp, seed=4)
        assert a.equals(b)
        assert not a.equals(init_params(hp, seed=5))

    def test_shapes_and_ranges(self):
        hp = Hyperparams(vocab_size=20, d_w=6, d_o=3, n=8, m=3, mode="both")
        p = init_params(hp, seed=0)
        J = 2 * 8 + 1 + 4
        assert p.Wh.shape == (J, J) and p.Ws.shape == (2, J) and p.M.shape == (8, 8)
        assert p.Fq.shape == (8, 9, 3) and p.Fa.shape == (8, 9, 3)
        assert np.all(np.abs(p.Wo) <= 0.25)
        bound = np.sqrt(6.0 / (9 * 3 + 8 * 3))
        assert np.all(np.abs(p.Fq) <= bound)
        for b in ("bq", "ba", "bh", "bs"):
            assert not np.any(getattr(p, b))

    def test_embeddings_are_copied(self):
        hp = Hyperparams(vocab_size=4, d_w=3, n=2, m=2)
        emb = np.arange(12.0).reshape(4, 3)
        p = init_params(hp, embeddings=emb)
        npt.assert_array_equal(p.W, emb)
        p.W[0, 0] = 99
        assert emb[0, 0] == 0

    def test_trainable_names(self):
        hp = Hyperparams(vocab_size=4, d_w=3, n=2, m=2, mode="none")
        assert "W" not in init_params(hp).trainable_names()
        assert "Wo" not in init_params(hp).trainable_names()
        hp = Hyperparams(vocab_size=4, d_w=3, n=2, m=2, mode="emb")
        assert set(init_params(hp, freeze_W=False).trainable_names()) == set(BLOCK_NAMES)


class TestForward:
    def setup_method(self):
        self.params, self.q, self.a, self.x_feat, _ = random_tiny_case("both", seed=3)

    def test_probs(self):
        c = model.forward(self.q, self.a, self.params, self.x_feat)
        assert c.probs.shape == (2,)
        assert abs(c.probs.sum() - 1) <= 1e-9
        assert 0 < model.score(self.q, self.a, self.params, self.x_feat) < 1

    def test_join_layout(self):
        c = model.forward(self.q, self.a, self.params, self.x_feat)
        n = self.params.hp.n
        npt.assert_array_equal(c.x_join[:n], c.enc_q.x)
        assert c.x_join[n] == c.x_sim
        npt.assert_array_equal(c.x_join[n + 1:2 * n + 1], c.enc_a.x)
        npt.assert_array_equal(c.x_join[2 * n + 1:], self.x_feat)

    def test_zero_similarity_matrix(self):
        self.params.M[:] = 0
        assert model.forward(self.q, self.a, self.params, self.x_feat).x_sim == 0.0

    def test_deterministic(self):
        c1 = model.forward(self.q, self.a, self.params, self.x_feat)
        c2 = model.forward(self.q, self.a, self.params, self.x_feat)
        npt.assert_array_equal(c1.x_join, c2.x_join)
        npt.assert_array_equal(c1.probs, c2.probs)

    def test_feature_length_checked(self):
        with pytest.raises(DimensionError):
            model.forward(self.q, self.a, self.params, np.ones(3))
        with pytest.raises(DimensionError):
            model.forward(self.q, self.a, self.params, None)

    def test_no_features_in_emb_mode(self):
        params, q, a, _, _ = random_tiny_case("emb", seed=1)
        with pytest.raises(DimensionError):
            model.forward(q, a, params, np.ones(4))

    def test_unindexed_sentence_rejected(self):
        with pytest.raises(ValueError):
            model.forward(AnnotatedSentence(["x"]), self.a, self.params, self.x_feat)

    def test_identical_candidates_score_equal(self):
        s1 = model.score(self.q, self.a, self.params, self.x_feat)
        s2 = model.score(self.q, AnnotatedSentence(self.a.tokens, self.a.overlap, self.a.indices),
                         self.params, self.x_feat)
        assert s1 == s2

    def test_narrow_mode_short_sentence_padded(self):
        params, q, _, _, _ = random_tiny_case("emb", seed=2, conv="narrow", m=3)
        short = sentence([1])
        c = model.forward(q, short, params)
        assert c.enc_a.S.shape[1] == 3


class TestModeRelations:
    def test_none_and_fvec_share_sentence_vectors(self):
        p_none, q, a, _, _ = random_tiny_case("none", seed=7)
        hp = Hyperparams(**{**p_none.hp.to_dict(), "mode": "fvec", "n_feat": None})
        p_fvec = init_params(hp, seed=7, freeze_W=False)
        for name in ("W", "Wo", "Fq", "bq", "Fa", "ba"):
            getattr(p_fvec, name)[:] = getattr(p_none, name)
        c1 = model.forward(q, a, p_none)
        c2 = model.forward(q, a, p_fvec, np.ones(4))
        npt.assert_array_equal(c1.enc_q.x, c2.enc_q.x)
        npt.assert_array_equal(c1.enc_a.x, c2.enc_a.x)

    def test_none_mode_ignores_flags(self):
        params, q, a, _, _ = random_tiny_case("none", seed=8)
        flipped = q.with_overlap([1 - o for o in q.overlap])
        npt.assert_array_equal(model.forward(q, a, params).probs, model.forward(flipped, a, params).probs)

    def test_flag_flip_changes_one_column(self):
        params, q, _, _, _ = random_tiny_case("emb", seed=9)
        flags = list(q.overlap)
        S0, _, _ = build_sentence_matrix(q.indices, flags, params.W, params.Wo)
        flags[2] = 1 - flags[2]
        S1, _, _ = build_sentence_matrix(q.indices, flags, params.W, params.Wo)
        diff = np.argwhere(S0 != S1)
        assert len(diff) == params.hp.d_o
        assert set(diff[:, 1]) == {2}
        assert set(diff[:, 0]) == set(range(params.hp.d_w, params.hp.depth))


class TestBackward:
    @pytest.mark.parametrize("mode", MODES)
    @pytest.mark.parametrize("conv", ["wide", "narrow"])
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_finite_differences(self, mode, conv, seed):
        params, q, a, x_feat, label = random_tiny_case(mode, seed, conv=conv)
        report = check_model_gradients(params, q, a, x_feat, label)
        assert report.passed, report.format()
        expected = set(params.trainable_names()) | ({"x_feat"} if mode in ("fvec", "both") else set())
        assert set(report.per_block) == expected

    def test_corrupted_gradient_names_M(self):
        params, q, a, x_feat, label = random_tiny_case("emb", 0)
        report = check_model_gradients(params, q, a, x_feat, label, corrupt={"M": 2.0})
        assert not report.passed
        assert "M" in report.failing_blocks()
        assert "M" in report.format()

    def test_frozen_W_has_no_gradient(self):
        params, q, a, _, label = random_tiny_case("emb", 0)
        params.freeze_W = True
        _, grads = model.backward(model.forward(q, a, params), label, params)
        assert "W" not in grads

    def test_feature_gradient_nonzero(self):
        params, q, a, x_feat, label = random_tiny_case("fvec", 4)
        _, grads = model.backward(model.forward(q, a, params, x_feat), label, params, input_grads=True)
        assert np.any(grads["x_feat"] != 0)

    def test_stale_cache(self):
        params, q, a, _, label = random_tiny_case("emb", 0)
        cache = model.forward(q, a, params)
        params.bump()
        with pytest.raises(StaleCacheError):
            model.backward(cache, label, params)

    def test_confident_correct_prediction_gives_tiny_gradients(self):
        params, q, a, _, _ = random_tiny_case("emb", 0)
        params.bs[:] = [-40.0, 40.0]
        loss, grads = model.backward(model.forward(q, a, params), 1, params)
        assert loss < 1e-30
        assert max(float(np.abs(g).max()) for g in grads.values()) < 1e-30

    def test_loss_matches_softmax_nll(self):
        params, q, a, _, label = random_tiny_case("emb", 5)
        cache = model.forward(q, a, params)
        loss, _ = model.backward(cache, label, params)
        assert loss == softmax_nll(cache.logits, label)[1]

    def test_accumulate_with_scale(self):
        params, q, a, _, label = random_tiny_case("emb", 6)
        cache = model.forward(q, a, params)
        _, g1 = model.backward(cache, label, params)
        acc = {k: np.zeros_like(v) for k, v in g1.items()}
        model.backward(cache, label, params, into=acc, scale=0.5)
        model.backward(cache, label, params, into=acc, scale=0.5)
        for k in g1:
            npt.assert_allclose(acc[k], g1[k], rtol=1e-12, atol=1e-15)


class TestScore:
    def test_log_odds_is_monotone_in_score(self):
        params, q, _, _, _ = random_tiny_case("emb", 10)
        rng = np.random.default_rng(0)
        cands = [sentence(rng.integers(1, 12, int(rng.integers(4, 9)))) for _ in range(12)]
        by_prob = sorted(range(12), key=lambda i: -model.score(q, cands[i], params))
        by_margin = sorted(range(12), key=lambda i: -model.log_odds(q, cands[i], params))
        assert by_prob == by_margin
