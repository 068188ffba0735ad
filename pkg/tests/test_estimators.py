import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from mstfactor import CorrelationMST, MultiFactorModel, VarimaxFactorAnalysis, extract_factors
from mstfactor.synth import MarketSpec, generate


@pytest.fixture(scope="module")
def market():
    return generate(MarketSpec(n_assets=12, n_obs=500, n_factors=3, sigma=0.6, seed=4))[0]


def test_params_round_trip():
    fa = VarimaxFactorAnalysis(n_factors=3, score_method="projection")
    assert fa.get_params()["n_factors"] == 3
    twin = clone(fa)
    assert twin.get_params() == fa.get_params()
    twin.set_params(n_factors="kaiser")
    assert fa.n_factors == 3 and twin.n_factors == "kaiser"
    assert clone(CorrelationMST(threshold=2)).threshold == 2


def test_fit_transform_matches_functional_api(market):
    fa = VarimaxFactorAnalysis(n_factors=3)
    scores = fa.fit_transform(market.returns)
    _, fs, _ = extract_factors(market, 3)
    assert np.allclose(scores, fs.scores, atol=1e-10)
    assert fa.n_factors_ == 3 and fa.loadings_.shape == (12, 3)
    assert fa.components_.shape == (3, 12)
    assert list(fa.get_feature_names_out()) == ["factor_1", "factor_2", "factor_3"]


def test_kaiser_default(market):
    assert VarimaxFactorAnalysis().fit(market.returns).n_factors_ == 3


def test_transform_requires_fit_and_matching_width(market):
    fa = VarimaxFactorAnalysis(n_factors=2)
    with pytest.raises(NotFittedError):
        fa.transform(market.returns)
    fa.fit(market.returns)
    with pytest.raises(ValueError):
        fa.transform(market.returns[:, :5])


def test_dataframe_input_records_feature_names(market):
    pd = pytest.importorskip("pandas")
    df = pd.DataFrame(market.returns, columns=market.assets)
    fa = VarimaxFactorAnalysis(n_factors=2).fit(df)
    assert list(fa.feature_names_in_) == list(market.assets)


def test_multifactor_model(market):
    f = VarimaxFactorAnalysis(n_factors=3).fit_transform(market.returns)
    m = MultiFactorModel().fit(f, market.returns)
    assert m.coef_.shape == (12, 3) and m.intercept_.shape == (12,)
    pred = m.predict(f)
    assert np.allclose(pred + m.residuals_, market.returns, atol=1e-12)
    assert np.all((m.r_squared_ > 0) & (m.r_squared_ < 1))
    with pytest.raises(NotFittedError):
        MultiFactorModel().predict(f)


def test_pipeline_composition(market):
    pipe = make_pipeline(VarimaxFactorAnalysis(n_factors=3))
    assert pipe.fit_transform(market.returns).shape == (500, 3)


def test_correlation_mst(market):
    est = CorrelationMST().fit(market.returns)
    a = est.adjacency_matrix()
    assert a.sum() == 2 * 11 and np.array_equal(a, a.T)
    assert np.array_equal(a.sum(axis=0), est.degree_)
    assert est.correlation_.shape == est.distance_.shape == (12, 12)
    assert est.score(market.returns) == 1.0
    noise = np.random.default_rng(0).standard_normal(market.returns.shape)
    assert 0.0 <= est.score(noise) < 1.0
    with pytest.raises(NotFittedError):
        CorrelationMST().adjacency_matrix()
