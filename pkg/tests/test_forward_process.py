from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csmc import (
    ModelKind,
    Sequence,
    TransitionModel,
    Vocabulary,
    chain_rng,
    corrupt,
    cumulative_matrix,
    linear_schedule,
    marginal,
    marginal_matrix,
    posterior,
    posterior_window,
    posterior_window_tensor,
    transition_matrix,
    transition_matrix_window,
)

from helpers import make_model, masked_marginal_row, uniform_marginal_row


def test_masked_model_requires_mask_token():
    vocab = Vocabulary(size=2)
    with pytest.raises(ValueError, match="mask token"):
        TransitionModel(ModelKind.MASKED, linear_schedule(4), vocab)


def test_uniform_model_rejects_mask_token():
    vocab = Vocabulary(size=2, mask_index=2)
    with pytest.raises(ValueError, match="drop the mask"):
        TransitionModel(ModelKind.UNIFORM, linear_schedule(4), vocab)


def test_uniform_single_step_half_mix():
    # One step with survival 0.5 over V=2: 0.5*I + 0.25 everywhere.
    model = make_model("uniform", num_steps=2)
    step = transition_matrix(model, 1)
    np.testing.assert_allclose(step, [[0.75, 0.25], [0.25, 0.75]], atol=1e-15)


def test_masked_single_step_rows():
    model = make_model("masked", num_steps=2)
    step = transition_matrix(model, 1)
    np.testing.assert_allclose(step, [[0.5, 0.0, 0.5], [0.0, 0.5, 0.5], [0.0, 0.0, 1.0]], atol=1e-15)


def test_rows_are_stochastic_both_kinds():
    for kind in ("masked", "uniform"):
        model = make_model(kind, vocab_size=3, num_steps=5)
        for t in range(1, 6):
            np.testing.assert_allclose(transition_matrix(model, t).sum(axis=1), 1.0, atol=1e-12)


def test_cumulative_product_identity():
    # Acceptance bound: cumulative products agree with stepwise products to 1e-10.
    for kind in ("masked", "uniform"):
        model = make_model(kind, vocab_size=3, num_steps=6)
        n = model.num_states
        running = np.eye(n)
        for t in range(1, 7):
            running = running @ transition_matrix(model, t)
            assert np.abs(cumulative_matrix(model, t) - running).max() < 1e-10


def test_uniform_marginal_closed_form():
    # alpha_bar 0.5 at t=2 of a 4-step linear schedule: [0.75, 0.25] from token 0.
    model = make_model("uniform", num_steps=4)
    np.testing.assert_allclose(marginal(model, 0, 2).probs, [0.75, 0.25], atol=1e-12)


def test_marginals_match_matrix_products():
    for kind in ("masked", "uniform"):
        model = make_model(kind, vocab_size=3, num_steps=6)
        closed = {
            "masked": masked_marginal_row,
            "uniform": uniform_marginal_row,
        }[kind]
        for t in range(7):
            ab = float(model.schedule.alpha_bar[t])
            for x0 in range(3):
                expect = closed(ab, 3, x0)
                np.testing.assert_allclose(marginal_matrix(model, t)[x0], expect, atol=1e-9)


def test_window_matrix_composes():
    for kind in ("masked", "uniform"):
        model = make_model(kind, num_steps=6)
        left = transition_matrix_window(model, 1, 3)
        right = transition_matrix_window(model, 3, 5)
        both = transition_matrix_window(model, 1, 5)
        np.testing.assert_allclose(left @ right, both, atol=1e-12)


def test_window_matrix_identity_at_equal_times():
    model = make_model("uniform", num_steps=4)
    np.testing.assert_allclose(transition_matrix_window(model, 2, 2), np.eye(2), atol=1e-15)


def test_corrupt_at_time_zero_returns_input():
    model = make_model("masked")
    x0 = Sequence((0, 1, 1))
    assert corrupt(model, x0, 0, chain_rng(0)) is x0


def test_corrupt_fully_masks_at_final_time():
    model = make_model("masked", num_steps=4)
    out = corrupt(model, Sequence((0, 1, 0, 1)), 4, chain_rng(0))
    assert out.tokens == (2, 2, 2, 2)


def test_corrupt_rejects_mask_tokens_in_input():
    model = make_model("masked")
    with pytest.raises(ValueError, match="clean sequence"):
        corrupt(model, Sequence((0, 2)), 1, chain_rng(0))


def test_corrupt_same_token_fraction():
    # Uniform, alpha_bar 0.5: same-token probability 0.5 + 0.5/2 = 0.75.
    # Binomial 3 sigma at 1e5 draws is about 0.004, the bound is 0.005.
    model = make_model("uniform", num_steps=4)
    rng = chain_rng(5)
    x0 = Sequence((0,))
    same = sum(corrupt(model, x0, 2, rng).tokens[0] == 0 for _ in range(100_000))
    assert abs(same / 100_000 - 0.75) < 0.005


def test_masked_unmask_probability_closed_form():
    # alpha_bar (s, t) = (0.5, 0.25): unmask probability (0.5 - 0.25) / (1 - 0.25) = 1/3.
    model = make_model("masked", num_steps=4)
    dist = posterior(model, xt_token=2, x0_token=0, t=3)
    assert abs(dist.probs[0] - 1.0 / 3.0) < 1e-12
    assert abs(dist.probs[2] - 2.0 / 3.0) < 1e-12
    assert dist.probs[1] == 0.0


def test_posterior_of_unmasked_token_is_point_mass():
    model = make_model("masked", num_steps=4)
    dist = posterior(model, xt_token=0, x0_token=0, t=3)
    np.testing.assert_allclose(dist.probs, [1.0, 0.0, 0.0], atol=1e-15)


def test_posterior_rejects_impossible_pair():
    # A masked model can never move token 0 to token 1.
    model = make_model("masked", num_steps=4)
    with pytest.raises(ValueError, match="zero forward probability"):
        posterior_window(model, xt_token=1, x0_token=0, s=1, t=3)


def test_posterior_window_matches_bayes_arithmetic():
    # Uniform V=2, s=1, t=3 of a 4-step schedule: weights written out by hand
    # from survival ratios 0.25/0.75 (window) and 0.75 (prefix).
    model = make_model("uniform", num_steps=4)
    back = (0.25 / 0.75) * np.eye(2) + (1 - 0.25 / 0.75) / 2 * np.ones((2, 2))
    fwd = 0.75 * np.eye(2) + 0.125 * np.ones((2, 2))
    weights = back[:, 1] * fwd[0]
    expect = weights / weights.sum()
    got = posterior_window(model, xt_token=1, x0_token=0, s=1, t=3).probs
    np.testing.assert_allclose(got, expect, atol=1e-12)


def test_posterior_window_tensor_matches_scalar_route():
    for kind in ("masked", "uniform"):
        model = make_model(kind, vocab_size=2, num_steps=4)
        tensor = posterior_window_tensor(model, 1, 3)
        for x0 in range(2):
            for xt in range(model.num_states):
                try:
                    expect = posterior_window(model, xt, x0, 1, 3).probs
                except ValueError:
                    assert tensor[x0, xt].sum() == 0.0
                    continue
                np.testing.assert_allclose(tensor[x0, xt], expect, atol=1e-12)


def test_window_bounds_validated():
    model = make_model("masked", num_steps=4)
    with pytest.raises(ValueError):
        transition_matrix_window(model, 3, 2)
    with pytest.raises(ValueError):
        transition_matrix_window(model, 0, 5)
    with pytest.raises(ValueError):
        posterior_window_tensor(model, 2, 2)


@given(
    st.sampled_from(["masked", "uniform"]),
    st.integers(min_value=2, max_value=8),
    st.integers(min_value=0, max_value=8),
)
@settings(max_examples=40)
def test_marginal_rows_are_distributions(kind, num_steps, t):
    t = min(t, num_steps)
    model = make_model(kind, vocab_size=3, num_steps=num_steps)
    rows = marginal_matrix(model, t)
    assert rows.shape[0] == 3
    np.testing.assert_allclose(rows.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(rows >= 0)
