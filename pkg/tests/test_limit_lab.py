import json
import math

import numpy as np
import pytest

from stablelab.limit_lab import (
    ConfigError,
    Criterion,
    ExperimentConfig,
    ExperimentReport,
    default_config,
    directional_tail_check,
    run_experiment,
)


def small(exp, **kw):
    base = dict(n=200, N=60, reference_size=2000, permutations=20, block=20, seed=3)
    base.update(kw)
    return default_config(exp, **base)


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "nope"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "fdd", "n": 0})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "fdd", "N": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "fdd", "times": [1.0, 0.5]})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "fdd", "times": [0.0, 1.0]})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "fdd", "colour": "red"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"n": 10})


def test_defaults_are_merged():
    cfg = ExperimentConfig.from_dict({"experiment": "fdd", "tolerances": {"ks": 0.1}})
    assert cfg.tol("ks") == 0.1 and cfg.tol("dcor") == 0.05
    assert cfg.times == [0.5, 1.0] and cfg.n == 10_000
    assert "out_dir" not in cfg.to_dict()


def test_from_json_errors(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json(str(bad))


def test_criterion_ops():
    assert Criterion("a", 0.01, 0.03).passed
    assert not Criterion("a", 0.03, 0.03).passed
    assert Criterion("a", 0.03, 0.03, "<=").passed
    assert not Criterion("a", float("nan"), 1.0).passed
    assert Criterion("a", 0, 0, "==").line().startswith("PASS a:")


def test_single_time_fdd_equals_marginal():
    m = run_experiment(small("marginal"))
    f = run_experiment(small("fdd", times=[1.0]))
    assert m.statistics["marginals"][0]["ks"] == f.statistics["marginals"][0]["ks"]
    assert np.array_equal(m.table["S_t=1"], f.table["S_t=1"])


@pytest.mark.parametrize("exp", ["marginal", "arcsine", "tightness", "maxineq"])
def test_workers_do_not_change_results(exp):
    kw = {"n": 1000, "N": 30, "block": 7} if exp == "arcsine" else {}
    if exp == "maxineq":
        kw = {"options": {"ns": [50, 100]}}
    a = run_experiment(small(exp, **kw), workers=1)
    b = run_experiment(small(exp, **kw), workers=3)
    assert a.to_json() == b.to_json()
    assert a.to_csv() == b.to_csv()


def test_seed_changes_results():
    a = run_experiment(small("marginal", seed=1))
    b = run_experiment(small("marginal", seed=2))
    assert a.to_json() != b.to_json()


def test_constant_observable_rejected():
    cfg = small("marginal", system={"name": "heavy_bernoulli", "alpha": 0.75},
                observable={"name": "constant", "value": 1.0})
    with pytest.raises(ConfigError):
        run_experiment(cfg)


def test_asymmetric_alpha_one_rejected():
    cfg = small("marginal", system={"name": "heavy_bernoulli", "alpha": 1.0, "symmetric": False},
                observable={"name": "symbol"})
    with pytest.raises(ConfigError):
        run_experiment(cfg)


def test_uncentered_arcsine_rejected():
    cfg = small("arcsine", system={"name": "heavy_bernoulli", "alpha": 1.5, "symmetric": False})
    with pytest.raises(ConfigError):
        run_experiment(cfg)


def test_weighted_tail_single_step_ratio():
    # G_1 = rho f(x) with P(f > t) = t^-alpha, so P(G_1 > s) / s^-alpha = rho^alpha
    cfg = small("weighted_tail", N=40_000, block=5000,
                options={"ns": [1], "g": "f", "rho": 0.5, "s_grid": [1.0, 2.0, 4.0]})
    rep = run_experiment(cfg)
    ratio = np.asarray(rep.statistics["per_n"][0]["ratio"])
    assert np.allclose(ratio, 0.5 ** 0.8, rtol=0.05)


def test_weighted_tail_zero_input():
    cfg = small("weighted_tail", options={"ns": [1, 10], "g": "zero"})
    rep = run_experiment(cfg)
    assert rep.statistics["zeta_hat"] == 0.0


def test_independence_rejects_small_p():
    with pytest.raises(ConfigError):
        run_experiment(small("independence", system={"name": "lsv2", "p": 1.5}))


def test_directional_tail_check():
    rng = np.random.default_rng(0)
    axis = np.zeros((20_000, 2))
    side = rng.integers(0, 2, 20_000)
    axis[np.arange(20_000), side] = rng.pareto(1.0, 20_000) + 1
    out = directional_tail_check(axis, [5.0], min_exceedances=10)["per_threshold"][0]
    assert out["off_axis"] == 0.0 and sum(out["weights"]) == pytest.approx(1.0)
    diag = np.abs(rng.standard_cauchy((20_000, 2)))
    assert directional_tail_check(diag, [5.0], min_exceedances=10)["per_threshold"][0]["off_axis"] > 0


def test_report_roundtrip(tmp_path):
    rep = run_experiment(small("marginal"))
    paths = rep.write(str(tmp_path))
    d = json.loads(open(paths["json"]).read())
    assert d["experiment"] == "marginal" and "wall_clock" not in d
    assert all(set(c) >= {"name", "value", "tolerance", "passed"} for c in d["criteria"])
    header = open(paths["csv"]).readline().strip().split(",")
    assert "S_t=1" in header
    compile(open(paths["plot"]).read(), "plot", "exec")
    assert isinstance(rep, ExperimentReport) and len(rep.lines()) == len(rep.criteria)


def test_nan_becomes_null():
    rep = ExperimentReport("marginal", 0, {}, {"x": math.nan}, [])
    assert json.loads(rep.to_json())["statistics"]["x"] is None


def test_embedded_config_reproduces_report():
    rep = run_experiment(small("arcsine", n=800, N=20))
    again = run_experiment(ExperimentConfig.from_dict(json.loads(rep.to_json())["config"]))
    assert again.to_json() == rep.to_json()
    d = json.loads(rep.to_json())
    assert d["seed"] == 3 and "version" in d
