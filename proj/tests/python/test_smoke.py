import json
import os
from pathlib import Path

import numpy as np
import pytest

import dflab

SOURCE = Path(os.environ.get("DFLAB_SOURCE_DIR", Path(__file__).resolve().parents[2]))
FIXTURE = json.loads((SOURCE / "data" / "w2_fixture.json").read_text())


def test_auto_truncation():
    assert dflab.auto_truncation(1.0) == 34


def test_stick_break_sums_to_one():
    w, tail = dflab.stick_break([0.5, 0.25, 1.0 / 3.0])
    assert w.sum() + tail == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(w, [0.5, 0.125, 0.125])


def test_sample_df_shape():
    eta = dflab.sample_df(beta=1.0, seed=3)
    n = dflab.auto_truncation(1.0)
    assert eta["locations"].shape == (n, 2)
    assert eta["weights"].sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all((eta["locations"] >= 0) & (eta["locations"] < 1))


def test_heat_kernel_symmetric_positive():
    a = dflab.heat_kernel([0.1, 0.2], [0.7, 0.9], 0.05)
    b = dflab.heat_kernel([0.7, 0.9], [0.1, 0.2], 0.05)
    assert a > 0
    assert a == pytest.approx(b, rel=1e-14)


def test_w2_fixture_cost():
    mu, nu = FIXTURE["mu"], FIXTURE["nu"]
    plan = dflab.w2(mu["weights"], mu["locations"], nu["weights"], nu["locations"])
    assert plan["cost"] == pytest.approx(FIXTURE["expected_cost"], abs=1e-9)
    assert plan["edges"][:, 2].sum() == pytest.approx(1.0, abs=1e-12)


def test_simulate_shapes():
    out = dflab.simulate(beta=1.0, dim=2, t_grid=[0.0, 0.01, 0.02], n_paths=2, n_atoms=5, seed=1)
    assert out["t"].shape == (3,)
    assert out["weights"].shape == (2, 5)
    assert out["locations"].shape == (2, 3, 5, 2)


def test_run_w2_task(tmp_path):
    code, reports = dflab.run("w2", {"tasks": {"w2": FIXTURE}}, out_dir=tmp_path)
    assert code == 0
    assert reports["w2"]["data"]["cost"] == pytest.approx(FIXTURE["expected_cost"], abs=1e-9)
    assert (tmp_path / "w2" / "plan.csv").exists()


def test_empty_basket_is_a_schema_error():
    with pytest.raises(dflab.SchemaError, match="/baskets/mecke"):
        dflab.run("verify-mecke", {"baskets": {"mecke": []}})


def test_default_config_round_trips():
    cfg = dflab.default_config()
    assert "verify-mecke" in cfg["tasks"]
    assert "all" in dflab.subcommands
