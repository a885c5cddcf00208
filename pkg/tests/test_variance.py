import numpy as np
import pytest

from paircluster import (
    cluster_robust_covariance,
    diff_in_means,
    dof_adjust,
    fe_estimate,
    fe_variance_ratio,
    pair_clustered_variance,
    pair_effects,
    pair_sample_variance,
    unit_clustered_variance,
    validate_dataset,
    variance_set,
)
from paircluster.errors import (
    DegenerateDOF,
    NotPaired,
    RankDeficient,
    ShapeMismatch,
    ZeroResiduals,
)
from helpers import dense_designs, paired_rows, random_paired, rel_err

MINIMAL_ROWS = [
    ("p1", "a", 1, 2.0),
    ("p1", "b", 0, 0.0),
    ("p2", "c", 0, 1.0),
    ("p2", "d", 1, 1.0),
]


@pytest.fixture(scope="module")
def minimal():
    return validate_dataset(MINIMAL_ROWS)


def test_closed_form_examples(minimal):
    data, assignment = minimal
    fit = diff_in_means(data, assignment)
    fe = fe_estimate(data, assignment)
    assert pair_clustered_variance(data, assignment, fit) == pytest.approx(0.5, abs=1e-15)
    assert unit_clustered_variance(data, assignment, fit) == pytest.approx(0.25, abs=1e-15)
    assert pair_clustered_variance(data, assignment, fe) == pytest.approx(0.5, abs=1e-15)
    assert unit_clustered_variance(data, assignment, fe) == pytest.approx(0.25, abs=1e-15)


def test_zero_residuals_give_zero_variance():
    rows = [(p, u, w, 7.0) for (p, u, w, _) in MINIMAL_ROWS]
    data, assignment = validate_dataset(rows)
    fit = diff_in_means(data, assignment)
    fe = fe_estimate(data, assignment)
    assert pair_clustered_variance(data, assignment, fit) == 0.0
    assert unit_clustered_variance(data, assignment, fit) == 0.0
    assert pair_clustered_variance(data, assignment, fe) == 0.0
    assert unit_clustered_variance(data, assignment, fe) == 0.0


def test_sandwich_zero_residuals():
    X = np.column_stack([np.ones(6), np.arange(6.0)])
    V = cluster_robust_covariance(X, np.zeros(6), np.repeat([0, 1, 2], 2))
    assert np.all(V == 0.0)


def test_sandwich_singleton_reduction():
    rng = np.random.default_rng(2)
    x = rng.normal(size=12)
    e = rng.normal(size=12)
    V = cluster_robust_covariance(x, e, np.arange(12))
    expected = np.sum(e**2 * x**2) / np.sum(x**2) ** 2
    assert V[0, 0] == pytest.approx(expected, rel=1e-12)


def test_sandwich_demeaned_regressor_example(minimal):
    data, assignment = minimal
    lay = data.layout()
    fit = diff_in_means(data, assignment)
    w = assignment.observation_vector(data).astype(float)
    x = w - w.mean()
    V = cluster_robust_covariance(x, fit.residuals, lay.obs_pair)
    assert V[0, 0] == pytest.approx(0.5, rel=1e-12)


def test_sandwich_errors():
    X = np.ones((4, 2))
    with pytest.raises(RankDeficient):
        cluster_robust_covariance(X, np.zeros(4), np.arange(4))
    with pytest.raises(ShapeMismatch):
        cluster_robust_covariance(np.ones((4, 1)), np.zeros(3), np.arange(4))
    with pytest.raises(ShapeMismatch):
        cluster_robust_covariance(np.ones((4, 1)), np.zeros(4), np.arange(3))


@pytest.mark.parametrize("seed", range(12))
def test_closed_forms_match_sandwich(seed):
    rng = np.random.default_rng(3000 + seed)
    P = int(rng.integers(2, 9))
    data, assignment = random_paired(rng, P=P, max_size=5)
    x_nofe, x_fe, obs_pair, obs_unit = dense_designs(data, assignment)
    fit = diff_in_means(data, assignment)
    fe = fe_estimate(data, assignment)

    v = pair_clustered_variance(data, assignment, fit)
    oracle = cluster_robust_covariance(x_nofe, fit.residuals, obs_pair)[1, 1]
    assert rel_err(v, oracle) <= 1e-10

    v = unit_clustered_variance(data, assignment, fit)
    oracle = cluster_robust_covariance(x_nofe, fit.residuals, obs_unit)[1, 1]
    assert rel_err(v, oracle) <= 1e-10

    v = pair_clustered_variance(data, assignment, fe)
    oracle = cluster_robust_covariance(x_fe, fe.residuals, obs_pair)[0, 0]
    assert rel_err(v, oracle) <= 1e-10

    v = unit_clustered_variance(data, assignment, fe)
    oracle = cluster_robust_covariance(x_fe, fe.residuals, obs_unit)[0, 0]
    assert rel_err(v, oracle) <= 1e-10


def test_balanced_identities():
    rng = np.random.default_rng(9)
    for _ in range(15):
        data, assignment = random_paired(rng, P=int(rng.integers(2, 12)), balanced=True)
        fit = diff_in_means(data, assignment)
        fe = fe_estimate(data, assignment)
        p_nofe = pair_clustered_variance(data, assignment, fit)
        p_fe = pair_clustered_variance(data, assignment, fe)
        u_fe = unit_clustered_variance(data, assignment, fe)
        assert rel_err(p_nofe, p_fe) <= 1e-12
        assert rel_err(p_nofe, 2 * u_fe) <= 1e-12


def test_pair_sample_variance_identity_uniform_sizes():
    rng = np.random.default_rng(10)
    for _ in range(10):
        data, assignment = random_paired(rng, P=9, uniform_size=int(rng.integers(1, 6)))
        fit = diff_in_means(data, assignment)
        effects = pair_effects(data, assignment)
        assert rel_err(
            pair_clustered_variance(data, assignment, fit), pair_sample_variance(effects)
        ) <= 1e-10


def test_pair_sample_variance_examples():
    class FakeEffects:
        tau_p = np.array([2.0, 0.0])
        omega_p = np.array([0.5, 0.5])
        P = 2

    assert pair_sample_variance(FakeEffects()) == pytest.approx(0.5, abs=1e-15)
    FakeEffects.tau_p = np.array([1.5, 1.5, 1.5])
    FakeEffects.P = 3
    assert pair_sample_variance(FakeEffects()) == 0.0


def test_dof_adjust():
    assert dof_adjust(1.0, 100, 2) == pytest.approx(100 / 98, rel=1e-15)
    # one observation per unit with pair fixed effects: n=2P, K=P+1
    P = 13
    assert dof_adjust(1.0, 2 * P, P + 1) == pytest.approx(2 * P / (P - 1), rel=1e-15)
    # the pair-level small-sample factor, P/(P-1), doubles the variance at P=2
    assert dof_adjust(0.5, 2, 1) == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(DegenerateDOF):
        dof_adjust(1.0, 5, 5)


def test_ratio_balanced_is_half():
    rng = np.random.default_rng(12)
    data, assignment = random_paired(rng, P=6, balanced=True)
    fe = fe_estimate(data, assignment)
    dec = fe_variance_ratio(data, fe)
    assert dec.m_p == pytest.approx(np.full(6, 0.5), abs=1e-15)
    assert dec.ratio == pytest.approx(0.5, rel=1e-12)


def test_ratio_two_to_one_is_five_ninths():
    rng = np.random.default_rng(13)
    sizes = np.column_stack([np.full(8, 4), np.full(8, 2)])
    data, assignment = validate_dataset(paired_rows(rng, sizes))
    fe = fe_estimate(data, assignment)
    dec = fe_variance_ratio(data, fe)
    assert dec.m_p == pytest.approx(np.full(8, 5.0 / 9.0), rel=1e-14)
    assert dec.ratio == pytest.approx(5.0 / 9.0, rel=1e-12)
    assert rel_err(
        dec.ratio,
        unit_clustered_variance(data, assignment, fe)
        / pair_clustered_variance(data, assignment, fe),
    ) <= 1e-10


def test_ratio_matches_variances_and_bounds():
    rng = np.random.default_rng(14)
    for _ in range(25):
        data, assignment = random_paired(rng, P=int(rng.integers(2, 10)))
        fe = fe_estimate(data, assignment)
        dec = fe_variance_ratio(data, fe)
        direct = unit_clustered_variance(data, assignment, fe) / pair_clustered_variance(
            data, assignment, fe
        )
        assert rel_err(dec.ratio, direct) <= 1e-10
        assert 0.5 - 1e-12 <= dec.ratio <= 1.0 + 1e-12
        assert dec.zeta_p.sum() == pytest.approx(1.0, rel=1e-12)
        assert np.all(dec.zeta_p >= 0)


def test_ratio_bound_with_capped_imbalance():
    rng = np.random.default_rng(15)
    for _ in range(20):
        data, assignment = random_paired(rng, P=7, max_size=5, max_ratio=2)
        fe = fe_estimate(data, assignment)
        dec = fe_variance_ratio(data, fe)
        assert 0.5 - 1e-12 <= dec.ratio <= 5.0 / 9.0 + 1e-12


def test_ratio_zero_residuals():
    rows = [(p, u, w, 1.0) for (p, u, w, _) in MINIMAL_ROWS]
    data, assignment = validate_dataset(rows)
    fe = fe_estimate(data, assignment)
    with pytest.raises(ZeroResiduals):
        fe_variance_ratio(data, fe)


def test_one_obs_per_unit_dof_equivalence():
    # one observation per unit: the DOF-adjusted singleton-cluster variance
    # of the FE fit equals P/(P-1) times the pair-clustered variance
    rng = np.random.default_rng(16)
    for _ in range(20):
        P = int(rng.integers(2, 20))
        data, assignment = random_paired(rng, P=P, uniform_size=1)
        fe = fe_estimate(data, assignment)
        lay = data.layout()
        w = assignment.observation_vector(data).astype(float)
        t_p, _ = assignment.per_pair_counts(data)
        x = w - (t_p / lay.pair_sizes)[lay.obs_pair]
        v_singleton = cluster_robust_covariance(x, fe.residuals, np.arange(lay.n))[0, 0]
        adjusted = dof_adjust(v_singleton, 2 * P, P + 1)
        target = (P / (P - 1)) * pair_clustered_variance(data, assignment, fe)
        assert rel_err(adjusted, target) <= 1e-10


def test_variances_nonnegative():
    rng = np.random.default_rng(17)
    for _ in range(10):
        data, assignment = random_paired(rng, P=int(rng.integers(2, 8)))
        vs = variance_set(data, assignment)
        assert vs.pair_nofe >= 0 and vs.unit_nofe >= 0
        assert vs.pair_fe >= 0 and vs.unit_fe >= 0


def test_variance_set_contents(minimal):
    data, assignment = minimal
    vs = variance_set(data, assignment)
    assert vs.pair_nofe == pytest.approx(0.5)
    assert vs.unit_fe == pytest.approx(0.25)
    assert vs.cluster_counts == {"pair": 2, "unit": 4, "observation": 4}
    assert vs.pair_small_sample_factor == pytest.approx(2.0)
    assert vs.dof_factors["pair_nofe"] == pytest.approx(4 / 2)
    assert vs.value("unit", "fe") == vs.unit_fe


def test_model_mismatch_rejected(minimal):
    data, assignment = minimal
    fit = diff_in_means(data, assignment)
    with pytest.raises(ShapeMismatch):
        pair_clustered_variance(data, assignment, type(fit)(
            tau_hat=fit.tau_hat,
            intercepts=fit.intercepts,
            residuals=fit.residuals[:-1],
            model_kind="nofe",
            K=2,
        ))


def test_closed_forms_require_paired():
    rows = [
        ("s1", "a", 1, 1.0),
        ("s1", "b", 0, 2.0),
        ("s1", "c", 0, 3.0),
        ("s2", "d", 1, 4.0),
        ("s2", "e", 0, 5.0),
    ]
    data, assignment = validate_dataset(rows)
    fit = diff_in_means(data, assignment)
    with pytest.raises(NotPaired):
        pair_clustered_variance(data, assignment, fit)


def test_stratified_sandwich_path():
    # with more than two units per stratum the sandwich is the variance path;
    # the stratum-clustered no-FE form still matches the closed-form algebra
    rng = np.random.default_rng(18)
    rows = []
    for s in range(5):
        for g in range(4):
            w = int(g < 2)
            for _ in range(int(rng.integers(1, 4))):
                rows.append((f"s{s}", f"u{g}", w, float(rng.normal())))
    data, assignment = validate_dataset(rows)
    lay = data.layout()
    fit = diff_in_means(data, assignment)
    x_nofe, x_fe, obs_pair, obs_unit = dense_designs(data, assignment)
    v_strat = cluster_robust_covariance(x_nofe, fit.residuals, obs_pair)[1, 1]
    T, C = assignment.totals(data)
    w_obs = assignment.observation_vector(data)
    set_p = np.bincount(lay.obs_pair, weights=fit.residuals * w_obs)
    seu_p = np.bincount(lay.obs_pair, weights=fit.residuals * ~w_obs)
    assert rel_err(v_strat, np.sum((set_p / T - seu_p / C) ** 2)) <= 1e-10
