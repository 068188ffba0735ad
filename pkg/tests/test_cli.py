import csv
import itertools
import json

import numpy as np
import pytest
from scipy.linalg import hadamard

from mstfactor.cli import main
from mstfactor.market_data import write_returns_csv, write_wide_csv
from mstfactor.synth import MarketSpec, generate


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture
def prices_csv(tmp_path):
    rng = np.random.default_rng(0)
    steps = 0.01 * rng.standard_normal((120, 6))
    steps[:, 1:] += steps[:, :1]
    prices = 100 * np.exp(np.cumsum(steps, axis=0))
    path = tmp_path / "prices.csv"
    write_wide_csv(path, tuple("ABCDEF"), tuple(f"d{t:03d}" for t in range(120)), prices)
    return path


@pytest.fixture
def synth_returns(tmp_path):
    spec = MarketSpec(n_assets=15, n_obs=400, n_factors=3, sigma=0.6, seed=3)
    panel, _ = generate(spec)
    path = tmp_path / "returns.csv"
    write_returns_csv(path, panel)
    return path


def test_network_writes_tree(tmp_path, prices_csv):
    out = tmp_path / "net"
    assert main(["network", str(prices_csv), "--out", str(out), "--dump-matrix"]) == 0
    edges = read_rows(out / "mst_edges.csv")
    assert edges[0] == ["asset_a", "asset_b", "distance"]
    assert len(edges) - 1 == 5
    degrees = read_rows(out / "degrees.csv")[1:]
    assert sum(int(d) for _, d in degrees) == 2 * 5
    assert len(read_rows(out / "correlation.csv")) == 7
    data = json.loads((out / "manifest.json").read_text())
    assert data["command"] == "network" and len(data["input_sha256"]) == 64
    assert data["n_obs"] == 119


def test_zero_price_is_a_data_error(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("date,A,B\n1,1,2\n2,0,3\n3,2,4\n")
    assert main(["network", str(path), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "line 3 (2): non-positive price 0 for asset 'A'" in err


def test_returns_flag_matches_precomputed_returns(tmp_path, prices_csv):
    from mstfactor.market_data import load_prices, to_log_returns

    r = to_log_returns(load_prices(prices_csv))
    rpath = tmp_path / "r.csv"
    write_returns_csv(rpath, r)
    assert main(["network", str(prices_csv), "--out", str(tmp_path / "a")]) == 0
    assert main(["network", str(rpath), "--returns", "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "mst_edges.csv").read_bytes()
    assert a == (tmp_path / "b" / "mst_edges.csv").read_bytes()


def test_factors_outputs(tmp_path, synth_returns):
    out = tmp_path / "f"
    assert main(["factors", str(synth_returns), "--returns", "--out", str(out)]) == 0
    loadings = read_rows(out / "loadings.csv")
    assert loadings[0] == ["asset", "factor_1", "factor_2", "factor_3"]
    assert len(loadings) == 16
    assert len(read_rows(out / "scores.csv")) == 401
    assert len(read_rows(out / "eigenvalues.csv")) == 16


def test_kaiser_with_no_factors_is_a_model_error(tmp_path, capsys):
    h = hadamard(16)[:, 1:6].astype(float)
    path = tmp_path / "h.csv"
    write_wide_csv(path, tuple("ABCDE"), tuple(str(t) for t in range(16)), h)
    assert main(["factors", str(path), "--returns", "--k", "kaiser", "--out", str(tmp_path)]) == 3
    assert "no significant factors" in capsys.readouterr().err


def test_usage_errors_exit_1(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["factors", "x.csv", "--k", "zero"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "x.csv", "--replicates", "0"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1


def test_missing_input_is_a_data_error(tmp_path):
    assert main(["network", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 2


def test_fit_and_derive(tmp_path, synth_returns):
    out = tmp_path / "fit"
    args = ["fit", str(synth_returns), "--returns", "--k", "3", "--derive", "--out", str(out)]
    assert main(args) == 0
    rows = read_rows(out / "fit.csv")
    assert rows[0] == ["asset", "alpha", "beta_1", "beta_2", "beta_3", "r_squared"]
    est = read_rows(out / "estimated_returns.csv")
    assert len(est) == 401 and len(est[0]) == 16
    first = (out / "estimated_returns.csv").read_bytes()
    assert main(args) == 0
    assert (out / "estimated_returns.csv").read_bytes() == first
    assert main(args + ["--seed", "7"]) == 0
    assert (out / "estimated_returns.csv").read_bytes() != first


def test_sweep_is_bitwise_reproducible(tmp_path, synth_returns):
    outputs = []
    for name, jobs in (("a", "1"), ("b", "1"), ("c", "3")):
        out = tmp_path / name
        args = ["sweep", str(synth_returns), "--returns", "--replicates", "3",
                "--jobs", jobs, "--out", str(out)]
        assert main(args) == 0
        outputs.append({f: (out / f).read_bytes()
                        for f in ("grid.csv", "marginal_by_k.csv", "marginal_by_threshold.csv")})
    assert outputs[0] == outputs[1] == outputs[2]
    data = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert data["parameters"]["seed"] == 42
    assert data["parameters"]["noise_mode"] == "residual"
    assert data["factor_counts"] == [1, 2, 3]


def test_synth_round_trip_and_seed(tmp_path):
    spec = tmp_path / "m.spec"
    spec.write_text("n_assets = 12\nn_obs = 300\nn_factors = 2\nsigma = 0.2\n"
                    "dominant_beta = 0.8, 1.2\noff_beta = 0.0, 0.1\n")
    assert main(["synth", "--spec", str(spec), "--out", str(tmp_path / "a")]) == 0
    assert main(["synth", "--spec", str(spec), "--out", str(tmp_path / "b")]) == 0
    assert main(["synth", "--spec", str(spec), "--seed", "9", "--out", str(tmp_path / "c")]) == 0
    a = (tmp_path / "a" / "returns.csv").read_bytes()
    assert a == (tmp_path / "b" / "returns.csv").read_bytes()
    assert a != (tmp_path / "c" / "returns.csv").read_bytes()
    truth = json.loads((tmp_path / "a" / "ground_truth.json").read_text())
    assert truth["spec"]["seed"] == 42

    out = tmp_path / "fit"
    assert main(["fit", str(tmp_path / "a" / "returns.csv"), "--returns", "--k", "2",
                 "--out", str(out)]) == 0
    rows = read_rows(out / "fit.csv")[1:]
    est = np.array([[float(v) for v in row[2:4]] for row in rows])
    true = np.array([truth["betas"][row[0]] for row in rows])
    # factors are identified up to a signed permutation
    err = min(
        np.abs(est[:, list(p)] * s - true).max()
        for p in itertools.permutations(range(2))
        for s in itertools.product((1, -1), repeat=2)
    )
    assert err < 0.1


def test_survivor_subcommand(tmp_path):
    ref = tmp_path / "ref.csv"
    cand = tmp_path / "cand.csv"
    ref.write_text("asset_a,asset_b,distance\nA,B,1\nA,C,1\nA,D,1\n")
    cand.write_text("asset_a,asset_b,distance\nA,B,1\nB,C,1\nC,D,1\n")
    assert main(["survivor", str(ref), str(cand), "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "survivor.csv")
    assert rows[0] == ["threshold", "ratio", "eligible_count"]
    assert float(rows[1][1]) == pytest.approx(1 / 3)
    assert [r[2] for r in rows[1:]] == ["4", "1", "1"]
