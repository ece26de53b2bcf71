import numpy as np
import pytest

from uqaudit.errors import MissingGroup, NoiseTooLarge, SingleGroupOnly, UncorrectedMetric, UndefinedConditional
from uqaudit.fairness import (
    GroupRates,
    GroupStats,
    NoiseRates,
    audit,
    contaminate,
    contaminate_groups,
    corrected_dp,
    disparity,
    dp_scaling_factor,
    group_rates,
    rates_from_arrays,
    representation_gap,
)
from uqaudit.lab import predict, synth_group_shift, train_ensemble
from uqaudit.lab.mlp import TrainConfig
from uqaudit.metrics_classification import entropy_decomposition
from uqaudit.rng import CounterRng

from conftest import point_dataset


def hard(preds):
    return [[1.0 - p, float(p)] for p in preds]


def test_all_positive():
    ds = point_dataset(hard([1, 1, 1, 1]), [0, 1, 0, 1], groups=[0, 0, 1, 1])
    r = group_rates(ds)
    assert r.group0.positive_rate == 1.0 and r.group1.positive_rate == 1.0


def test_hand_counted_dp():
    ds = point_dataset(hard([1, 1, 0, 0, 1, 0, 0, 0]), [1, 0] * 4, groups=[0] * 4 + [1] * 4)
    r = group_rates(ds)
    assert (r.group0.positive_rate, r.group1.positive_rate) == (0.5, 0.25)
    assert disparity(r).dp_gap == 0.25


def test_threshold_is_inclusive():
    ds = point_dataset([[0.5, 0.5], [0.6, 0.4]], [1, 1], groups=[0, 1])
    r = group_rates(ds)
    assert r.group0.positive_rate == 1.0 and r.group1.positive_rate == 0.0


def test_single_group_warns():
    ds = point_dataset(hard([1, 0]), [1, 0], groups=[0, 0])
    with pytest.warns(SingleGroupOnly):
        r = group_rates(ds)
    with pytest.warns(UndefinedConditional):
        assert disparity(r).dp_gap is None


def test_missing_group_raises():
    ds = point_dataset(hard([1, 0]), [1, 0], groups=[0, -1])
    with pytest.raises(MissingGroup):
        group_rates(ds)


def stats(tpr, fpr, rate=0.5):
    return GroupStats(10, rate, tpr, fpr, 5, 5)


def test_identical_groups_zero_gaps():
    d = disparity(GroupRates(stats(0.7, 0.2), stats(0.7, 0.2), 0.5))
    assert (d.dp_gap, d.eq_gap, d.eo_gap) == (0.0, 0.0, 0.0)


def test_equalized_odds_sums_gaps():
    d = disparity(GroupRates(stats(0.6, 0.1), stats(0.5, 0.3), 0.5))
    assert abs(d.eo_gap - 0.3) < 1e-15


def test_equal_opportunity_needs_positives():
    g0 = GroupStats(3, 0.3, None, 0.3, 0, 3)
    with pytest.warns(UndefinedConditional):
        d = disparity(GroupRates(g0, stats(0.5, 0.3), 0.5))
    assert d.eq_gap is None and d.eo_gap is None and d.dp_gap is not None


def test_contaminate_identity_and_determinism():
    ds = point_dataset(hard([1, 0, 1]), [1, 0, 1], groups=[0, 1, 0])
    assert np.array_equal(contaminate(ds, NoiseRates(0, 0), 1).groups, ds.groups)
    groups = np.arange(1000) % 2
    a = contaminate_groups(groups, NoiseRates(0.2, 0.3), 9)
    assert np.array_equal(a, contaminate_groups(groups, NoiseRates(0.2, 0.3), 9))
    assert not np.array_equal(a, contaminate_groups(groups, NoiseRates(0.2, 0.3), 10))


def population(n, gap, seed):
    """Balanced groups with positive rates 0.5 + gap/2 and 0.5 - gap/2, exactly."""
    groups = np.arange(n) % 2
    rng = CounterRng(seed)
    yhat = np.zeros(n, dtype=bool)
    for g, rate in ((0, 0.5 + gap / 2), (1, 0.5 - gap / 2)):
        idx = np.flatnonzero(groups == g)
        yhat[idx[rng.permutation(idx.size)[: round(rate * idx.size)]]] = True
    return yhat, groups


def test_half_noise_erases_gap():
    yhat, groups = population(10**5, 0.3, 0)
    noisy = contaminate_groups(groups, NoiseRates(0.5, 0.4999), 1)
    r = rates_from_arrays(yhat, yhat.astype(int), noisy)
    assert abs(disparity(r).dp_gap) < 0.01


def test_corrected_dp_examples():
    assert abs(corrected_dp(0.12, NoiseRates(0.2, 0.2)) - 0.2) < 1e-15
    assert corrected_dp(0.17, NoiseRates(0, 0)) == 0.17
    assert corrected_dp(0.0, NoiseRates(0.3, 0.1)) == 0.0


def test_exact_expectation_on_finite_population():
    # expected observed rates under flips, computed from counts directly
    yhat, groups = population(1000, 0.2, 3)
    noise = NoiseRates(0.2, 0.2)
    pos = np.array([yhat[groups == g].sum() for g in (0, 1)], dtype=float)
    cnt = np.array([(groups == g).sum() for g in (0, 1)], dtype=float)
    stay = 1 - np.array([noise.rho0, noise.rho1])
    obs_pos0 = stay[0] * pos[0] + (1 - stay[1]) * pos[1]
    obs_cnt0 = stay[0] * cnt[0] + (1 - stay[1]) * cnt[1]
    obs_pos1 = (1 - stay[0]) * pos[0] + stay[1] * pos[1]
    obs_cnt1 = (1 - stay[0]) * cnt[0] + stay[1] * cnt[1]
    observed = obs_pos0 / obs_cnt0 - obs_pos1 / obs_cnt1
    assert abs(observed - 0.12) < 1e-12
    assert abs(corrected_dp(observed, noise) - 0.2) < 1e-12


def test_share_adjusted_factor_is_exact_for_unbalanced_groups():
    noise = NoiseRates(0.1, 0.25)
    pi0 = 0.3  # true share of group 0
    q0 = pi0 * (1 - noise.rho0) + (1 - pi0) * noise.rho1
    # true rates 0.8 and 0.4, observed rates are mixtures weighted by posterior group membership
    w00 = pi0 * (1 - noise.rho0) / q0
    w11 = (1 - pi0) * (1 - noise.rho1) / (1 - q0)
    obs = (w00 * 0.8 + (1 - w00) * 0.4) - ((1 - w11) * 0.8 + w11 * 0.4)
    assert abs(corrected_dp(obs, noise, q0) - 0.4) < 1e-12


def test_share_adjusted_factor_reduces_for_balanced_symmetric_noise():
    noise = NoiseRates(0.15, 0.15)
    assert abs(dp_scaling_factor(noise, 0.5) - dp_scaling_factor(noise)) < 1e-15


def test_noise_validation():
    with pytest.raises(NoiseTooLarge):
        NoiseRates(0.6, 0.5)
    with pytest.raises(ValueError):
        NoiseRates(-0.1, 0.0)


def test_audit_report_shape():
    ds = point_dataset(hard([1, 1, 0, 0, 1, 0, 0, 0]), [1, 0, 1, 0] * 2, groups=[0] * 4 + [1] * 4)
    rep = audit(ds)
    assert rep["gaps"]["dp_gap"] == 0.25 and rep["corrected_dp"] is None
    with pytest.warns(UncorrectedMetric):
        rep = audit(ds, noise=NoiseRates(0.1, 0.1))
    assert abs(rep["corrected_dp"]["dp_gap"] - 0.25 / 0.8) < 1e-15
    assert rep["noise_assumption"]["model"] == "mutually_contaminated"


def test_representation_gap_flags_under_represented_group():
    train = synth_group_shift(200, 8, seed=1)
    cfg = TrainConfig(epochs=800, seed=3)
    ens = train_ensemble(train.x, train.y, n_members=5, config=cfg, head="softmax", n_classes=2)
    test = synth_group_shift(300, 300, seed=2)
    mi = entropy_decomposition(predict(ens, test.x)).mutual_information
    rep = representation_gap(mi, test.groups)
    assert rep["group1_mean"] > 2 * rep["group0_mean"]
