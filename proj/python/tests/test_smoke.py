import os
import subprocess

import numpy as np
import pytest

import mtaf


def test_af_matches_hand_worked_example():
    p = np.array([[0.01, 0.5], [0.2, 0.3], [0.6, 0.9]])
    out = mtaf.af_operator(p)
    assert out.shape == (3,)
    assert out[0] == pytest.approx(1 / 3)
    assert np.all(out > 0) and np.all(out <= 1)


def test_minp_ranks_row_minimum():
    p = np.array([[0.01, 0.5], [0.2, 0.3], [0.6, 0.9]])
    assert list(mtaf.minp_operator(p)) == pytest.approx([1 / 3, 2 / 3, 1.0])


def test_one_sided_combination_shape():
    rng = np.random.default_rng(0)
    lower = rng.uniform(size=(21, 4))
    out = mtaf.combine_one_sided(lower, 1 - lower)
    assert out.shape == (21,)


def test_score_test_detects_association():
    rng = np.random.default_rng(1)
    n = 500
    g = rng.binomial(2, 0.3, size=n).astype(float)
    z = rng.normal(size=(n, 2))
    y = 0.5 * g + z @ np.array([0.3, -0.2]) + rng.normal(size=n)
    r = mtaf.score_test(y, g, "continuous", z)
    assert r["z"] > 5
    assert r["p_two"] < 1e-6
    assert r["p_lower"] + r["p_upper"] == pytest.approx(1.0)


def test_binary_score_test_runs():
    rng = np.random.default_rng(2)
    n = 400
    g = rng.binomial(2, 0.3, size=n).astype(float)
    y = (rng.uniform(size=n) < 0.4).astype(float)
    r = mtaf.score_test(y, g, "binary")
    assert 0 < r["p_two"] <= 1


def test_principal_components_orders_variance():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(300, 4)) * np.array([3.0, 2.0, 1.0, 0.5])
    x -= x.mean(axis=0)
    pc = mtaf.principal_components(x)
    ev = pc["explained_variance"]
    assert np.all(np.diff(ev) <= 0)
    assert pc["rank"] == 4


def test_association_scan_finds_signal_and_keeps_order():
    rng = np.random.default_rng(4)
    n, snps = 400, 6
    geno = rng.binomial(2, 0.3, size=(n, snps)).astype(float)
    geno[:, 3] = 1.0  # constant, reported as degenerate
    y = rng.normal(size=(n, 3))
    y[:, 0] += 0.6 * geno[:, 0]
    kinds = ["continuous", "continuous", "binary"]
    y[:, 2] = (rng.uniform(size=n) < 0.3).astype(float)
    with pytest.warns(UserWarning):
        res = mtaf.association_scan(geno, y, kinds, seed=7, b_max=10_000, threads=1)
    assert [r["snp_id"] for r in res] == [f"snp{i + 1}" for i in range(snps)]
    assert res[0]["p_value"] < 0.01
    assert res[3]["status"] == "degenerate"
    assert np.isnan(res[3]["p_value"])
    with pytest.warns(UserWarning):
        again = mtaf.association_scan(geno, y, kinds, seed=7, b_max=10_000, threads=2)
    assert [r["p_value"] for r in res if r["status"] != "degenerate"] == [
        r["p_value"] for r in again if r["status"] != "degenerate"
    ]


def test_errors_surface_as_mtaf_error():
    with pytest.raises(mtaf.MtafError):
        mtaf.af_operator(np.array([[0.5, -0.1]]))
    with pytest.raises(mtaf.MtafError):
        mtaf.score_test(np.zeros(5), np.ones(4))


def test_simulate_power_null_is_small():
    rows = mtaf.simulate_power(n=200, k=4, replicates=20, b_perm=99, seed=3, threads=1)
    methods = {r["method"] for r in rows}
    assert methods == {"MTAF", "MTAF_original", "MTAF_PCA", "minP"}
    for r in rows:
        assert 0 <= r["rejection_rate"] <= 0.3


@pytest.mark.skipif("MTAF_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_help_runs():
    out = subprocess.run([os.environ["MTAF_CLI"], "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    assert "test" in out.stdout and "simulate" in out.stdout
