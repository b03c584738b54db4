import numpy as np
import pytest

from mvrank.discourse import DiscourseState, IntentMatrix
from mvrank.encoder import UtteranceRep
from mvrank.ranker import RankingConfig, RankingError, rank_candidates, score_response


def state_with(columns):
    cols = np.asarray(columns, dtype=np.float64).T
    state = DiscourseState(width=cols.shape[0], dedup_threshold=1.0)
    state.add_intents(IntentMatrix(cols, ("a", "b")), step=0)
    return state


def rep(rows):
    m = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    return UtteranceRep(m, "d", "r0", m.shape[1])


class TestScoreResponse:
    def test_scaled_parallel_response_scores_one(self):
        state = state_with([[1.0, 0.0, 0.0]])
        assert score_response(state, rep([3.0, 0.0, 0.0])) == pytest.approx(1.0, abs=1e-9)

    def test_orthogonal_scores_zero(self):
        state = state_with([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        assert score_response(state, rep([0.0, 0.0, 2.0])) == pytest.approx(0.0, abs=1e-9)

    def test_mean_vs_max_aggregation(self):
        state = state_with([[1.0, 0.0], [0.0, 1.0]])
        response = rep([1.0, 0.0])
        assert score_response(state, response, RankingConfig("mean")) == pytest.approx(0.5)
        assert score_response(state, response, RankingConfig("max")) == pytest.approx(1.0)

    def test_scale_invariance(self):
        rng = np.random.default_rng(0)
        state = state_with(rng.standard_normal((3, 5)))
        rows = rng.standard_normal((4, 5))
        a = score_response(state, rep(rows))
        b = score_response(state, rep(rows * 17.0))
        assert a == pytest.approx(b, abs=1e-12)

    def test_empty_state_rejected(self):
        state = DiscourseState(width=3)
        with pytest.raises(RankingError):
            score_response(state, rep([1.0, 0.0, 0.0]))

    def test_width_mismatch(self):
        state = state_with([[1.0, 0.0, 0.0]])
        with pytest.raises(RankingError):
            score_response(state, rep([1.0, 0.0]))

    def test_invalid_aggregation(self):
        with pytest.raises(RankingError):
            RankingConfig("median")


class TestRankCandidates:
    def test_single_candidate(self):
        state = state_with([[1.0, 0.0]])
        out = rank_candidates(state, [rep([1.0, 0.0])])
        assert [sc.candidate_index for sc in out] == [0]

    def test_ties_keep_input_order(self):
        state = state_with([[1.0, 0.0]])
        identical = [rep([0.5, 0.5]) for _ in range(4)]
        out = rank_candidates(state, identical)
        assert [sc.candidate_index for sc in out] == [0, 1, 2, 3]

    def test_scores_non_increasing_and_permutation(self):
        rng = np.random.default_rng(1)
        state = state_with(rng.standard_normal((4, 6)))
        cands = [rep(rng.standard_normal((3, 6))) for _ in range(8)]
        out = rank_candidates(state, cands)
        scores = [sc.score for sc in out]
        assert all(a >= b for a, b in zip(scores, scores[1:]))
        assert sorted(sc.candidate_index for sc in out) == list(range(8))

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(2)
        state = state_with(rng.standard_normal((3, 5)))
        cands = [rep(rng.standard_normal((2, 5))) for _ in range(5)]
        base = rank_candidates(state, cands)
        shuffled = rank_candidates(state, cands[::-1])
        assert sorted(round(sc.score, 12) for sc in base) == sorted(
            round(sc.score, 12) for sc in shuffled
        )

    def test_empty_candidates_rejected(self):
        state = state_with([[1.0, 0.0]])
        with pytest.raises(RankingError):
            rank_candidates(state, [])

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        state = state_with(rng.standard_normal((3, 5)))
        cands = [rep(rng.standard_normal((2, 5))) for _ in range(6)]
        a = rank_candidates(state, cands)
        b = rank_candidates(state, cands)
        assert [(sc.candidate_index, sc.score) for sc in a] == [
            (sc.candidate_index, sc.score) for sc in b
        ]
