from __future__ import annotations

import math
import re
import shlex
import sys
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csmc import (
    ExternalRewardClient,
    GatedBracketReward,
    PatternReward,
    RewardEvaluationError,
    RewardFn,
    RewardTransportError,
    Sequence,
    TokenCountReward,
    Vocabulary,
    evaluate_reward,
)

SERVER = Path(__file__).parent / "data" / "reward_server.py"


def seq(*tokens: int) -> Sequence:
    return Sequence(tuple(tokens))


def server_command(mode: str) -> list[str]:
    return [sys.executable, str(SERVER), mode]


def test_token_count_fraction():
    reward = TokenCountReward(1)
    assert reward(seq(1, 1, 1, 1)) == 1.0
    assert reward(seq(0, 0, 0, 0)) == 0.0
    assert reward(seq(1, 0, 1, 0)) == 0.5


def test_token_count_batch_maps_each_sequence():
    reward = TokenCountReward(0)
    assert reward.batch([seq(0, 0), seq(0, 1)]) == [1.0, 0.5]


def test_gated_bracket_scores_depth_over_length():
    reward = GatedBracketReward(0, 1)
    assert reward(seq(0, 0, 1, 1)) == 0.5
    assert reward(seq(0, 1, 0, 1)) == 0.25
    assert reward(seq(0, 1)) == 0.5


def test_gated_bracket_ignores_other_tokens():
    reward = GatedBracketReward(0, 1)
    assert reward(seq(0, 2, 1)) == pytest.approx(1 / 3)
    assert reward(seq(2, 2, 2)) == 0.0


def test_gated_bracket_gates_unbalanced_to_zero():
    reward = GatedBracketReward(0, 1)
    assert reward(seq(0, 0, 1, 0)) == 0.0
    assert reward(seq(1, 1, 0, 0)) == 0.0
    assert reward(seq(1, 0)) == 0.0


def test_gated_bracket_is_brittle_to_one_token():
    reward = GatedBracketReward(0, 1)
    best = seq(0, 0, 1, 1)
    assert reward(best) == 0.5
    for pos in range(4):
        tokens = list(best.tokens)
        tokens[pos] = 2
        assert reward(seq(*tokens)) < 0.5


def test_gated_bracket_rejects_equal_tokens():
    with pytest.raises(ValueError, match="differ"):
        GatedBracketReward(1, 1)


def test_pattern_reward_counts_non_overlapping_matches():
    reward = PatternReward((0, 1, 2))
    assert reward(seq(0, 1, 2, 0, 1, 2, 0, 1, 2)) == 1.0
    assert reward(seq(0, 1, 2, 3, 3, 3, 3, 3, 3)) == pytest.approx(1 / 3)
    assert reward(seq(3, 3, 3)) == 0.0


def test_pattern_reward_consumes_matches_greedily():
    reward = PatternReward((0, 0))
    assert reward(seq(0, 0, 0)) == 1.0
    assert reward(seq(0, 0, 0, 0)) == 1.0
    assert reward(seq(1, 0, 0, 0)) == 0.5


def test_pattern_reward_shorter_sequence_scores_zero():
    assert PatternReward((0, 0, 0))(seq(0, 0)) == 0.0


def test_pattern_reward_rejects_empty_pattern():
    with pytest.raises(ValueError, match="nonempty"):
        PatternReward(())


@given(
    st.lists(st.integers(min_value=0, max_value=2), min_size=1, max_size=3),
    st.lists(st.integers(min_value=0, max_value=2), min_size=1, max_size=12),
)
@settings(max_examples=200)
def test_pattern_reward_matches_regex_oracle(pattern, tokens):
    glyphs = "abc"
    reward = PatternReward(tuple(pattern))(Sequence(tuple(tokens)))
    pattern_text = "".join(glyphs[t] for t in pattern)
    text = "".join(glyphs[t] for t in tokens)
    count = len(re.findall(re.escape(pattern_text), text))
    capacity = len(tokens) // len(pattern)
    expected = 0.0 if capacity == 0 else count / capacity
    assert reward == pytest.approx(expected)


def test_builtin_rewards_satisfy_the_protocol():
    assert isinstance(TokenCountReward(0), RewardFn)
    assert isinstance(GatedBracketReward(0, 1), RewardFn)
    assert isinstance(PatternReward((0,)), RewardFn)


def test_evaluate_reward_passes_finite_values():
    assert evaluate_reward(TokenCountReward(1), seq(1, 0)) == 0.5


def test_evaluate_reward_wraps_exceptions():
    def broken(x):
        raise KeyError("boom")

    broken.batch = lambda xs: []
    with pytest.raises(RewardEvaluationError, match=r"\(1, 0\)"):
        evaluate_reward(broken, seq(1, 0))


def test_evaluate_reward_rejects_non_finite():
    def nan_reward(x):
        return math.nan

    nan_reward.batch = lambda xs: []
    with pytest.raises(RewardEvaluationError, match="non-finite"):
        evaluate_reward(nan_reward, seq(0,))


def test_evaluate_reward_propagates_transport_errors():
    def dead(x):
        raise RewardTransportError("gone")

    dead.batch = lambda xs: []
    with pytest.raises(RewardTransportError, match="gone"):
        evaluate_reward(dead, seq(0,))


@pytest.fixture
def text_vocab():
    return Vocabulary(size=2, glyphs=("a", "b"))


def test_external_client_scores_decoded_text(text_vocab):
    with ExternalRewardClient(server_command("count_a"), text_vocab) as client:
        assert client(seq(0, 0, 1)) == 2.0
        assert client(seq(1, 1, 1)) == 0.0
        assert client.batch([seq(0, 1), seq(0, 0)]) == [1.0, 2.0]
        assert client.batch([]) == []


def test_external_client_satisfies_the_protocol(text_vocab):
    with ExternalRewardClient(server_command("count_a"), text_vocab) as client:
        assert isinstance(client, RewardFn)


def test_external_client_matches_out_of_order_replies(text_vocab):
    with ExternalRewardClient(server_command("shuffle"), text_vocab) as client:
        batch = client.batch([seq(0, 0, 0), seq(0, 1, 1), seq(1, 1, 1)])
    assert batch == [3.0, 1.0, 0.0]


def test_external_client_zeroes_invalid_items(text_vocab):
    with ExternalRewardClient(server_command("invalid"), text_vocab) as client:
        assert client(seq(0, 0)) == 0.0


def test_external_client_times_out_on_silence(text_vocab):
    with ExternalRewardClient(server_command("silent"), text_vocab, timeout_secs=0.5) as client:
        with pytest.raises(RewardTransportError, match="timed out"):
            client(seq(0,))


def test_external_client_rejects_malformed_replies(text_vocab):
    with ExternalRewardClient(server_command("malformed"), text_vocab) as client:
        with pytest.raises(RewardTransportError, match="malformed"):
            client(seq(0,))


def test_external_client_rejects_unknown_ids(text_vocab):
    with ExternalRewardClient(server_command("badid"), text_vocab) as client:
        with pytest.raises(RewardTransportError, match="unknown"):
            client(seq(0,))


def test_external_client_detects_server_death(text_vocab):
    with ExternalRewardClient(server_command("die"), text_vocab, timeout_secs=5.0) as client:
        with pytest.raises(RewardTransportError, match="closed its stdout"):
            client(seq(0,))


def test_external_client_accepts_shell_style_command(text_vocab):
    command = " ".join(shlex.quote(part) for part in server_command("count_a"))
    with ExternalRewardClient(command, text_vocab) as client:
        assert client(seq(0, 1)) == 1.0


def test_external_client_rejects_missing_binary(text_vocab):
    with pytest.raises(RewardTransportError, match="could not start"):
        ExternalRewardClient(["definitely-not-a-real-binary-xyz"], text_vocab)


def test_external_client_validates_arguments(text_vocab):
    with pytest.raises(ValueError, match="timeout"):
        ExternalRewardClient(server_command("count_a"), text_vocab, timeout_secs=0.0)
    with pytest.raises(ValueError, match="empty"):
        ExternalRewardClient([], text_vocab)
