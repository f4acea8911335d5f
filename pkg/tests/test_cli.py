import filecmp
import json
import math
import os

import numpy as np
import pytest

from coldspin.cli import instance_hash, log_temperature_grid, main, resolve_config
from coldspin.exact import enumerate_boltzmann, transfer_matrix
from coldspin.hamiltonian import (
    gen_ising_chain,
    indices_to_packed,
    load_instance,
    save_instance,
)
from coldspin.pool import SamplePool


def write_chain(tmp_path, n=6, seed=5, name="chain.json"):
    h = gen_ising_chain(n, seed)
    path = tmp_path / name
    save_instance(h, path)
    return h, str(path)


def write_config(tmp_path, doc, name="exp.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def base_config(methods, temperatures=(0.5, 1.0), **extra):
    doc = {
        "label": "test",
        "instance": {"generator": {"kind": "chain", "n": 6, "seed": 5}},
        "temperatures": list(temperatures),
        "seed": 11,
        "methods": methods,
    }
    doc.update(extra)
    return doc


def report_body(path):
    with open(path, encoding="utf-8") as fh:
        rep = json.load(fh)
    rep.pop("meta")
    return rep


# ----------------------------------------------------------------------
# generate / exact


def test_generate_writes_loadable_instance(tmp_path, capsys):
    out = str(tmp_path / "inst.json")
    rc = main(["generate", "--kind", "glass", "--n", "7", "--seed", "42", "--out", out])
    assert rc == 0
    summary = json.loads(capsys.readouterr().out)
    h = load_instance(out)
    assert h.n_qubits == 7
    assert h.metadata["seed"] == 42
    assert summary["sha256"] == instance_hash(h)
    assert summary["n_terms"] == h.n_terms


def test_generate_three_body_requires_counts(tmp_path, capsys):
    out = str(tmp_path / "inst.json")
    rc = main(["generate", "--kind", "three-body", "--n", "9", "--seed", "1", "--out", out])
    assert rc == 2
    assert "--pairs" in capsys.readouterr().err
    rc = main(
        ["generate", "--kind", "three-body", "--n", "9", "--seed", "1",
         "--out", out, "--pairs", "8", "--triples", "6"]
    )
    assert rc == 0
    assert load_instance(out).order_counts() == {1: 9, 2: 8, 3: 6}


def test_exact_csv_matches_oracle(tmp_path):
    h, inst = write_chain(tmp_path, n=6, seed=5)
    out = tmp_path / "exact"
    rc = main(["exact", "--instance", inst, "--betas", "0,1.0", "--out", str(out)])
    assert rc == 0
    lines = (out / "exact_reference.csv").read_text().splitlines()
    assert lines[0] == "temperature,beta,ln_z,mean_energy,magnetization,connected_correlation"
    assert len(lines) == 3
    row0 = lines[1].split(",")
    assert float(row0[1]) == 0.0
    assert abs(float(row0[2]) - 6 * math.log(2)) < 1e-12
    ref = transfer_matrix(h, 1.0)
    row1 = lines[2].split(",")
    assert abs(float(row1[2]) - ref.ln_z) < 1e-12
    assert abs(float(row1[3]) - ref.mean_energy) < 1e-12


def test_exact_refuses_oversize_enumeration(tmp_path, capsys):
    out = str(tmp_path / "big.json")
    assert main(["generate", "--kind", "glass", "--n", "30", "--seed", "1", "--out", out]) == 0
    capsys.readouterr()
    rc = main(["exact", "--instance", out, "--temperatures", "0.5", "--out", str(tmp_path)])
    assert rc == 2
    err = capsys.readouterr().err
    assert "enumeration cap" in err


def test_exact_needs_exactly_one_grid(tmp_path, capsys):
    _, inst = write_chain(tmp_path)
    rc = main(["exact", "--instance", inst, "--out", str(tmp_path)])
    assert rc == 2
    rc = main(
        ["exact", "--instance", inst, "--betas", "1", "--temperatures", "1",
         "--out", str(tmp_path)]
    )
    assert rc == 2


# ----------------------------------------------------------------------
# run


def run_config(tmp_path, doc, out="run", extra_args=()):
    cfg = write_config(tmp_path, doc)
    out_dir = str(tmp_path / out)
    rc = main(["run", "--config", cfg, "--out", out_dir, *extra_args])
    return rc, out_dir


def test_run_report_structure(tmp_path):
    doc = base_config(
        [
            {"name": "mh1", "kind": "mh", "temperature": 0.5, "n_steps": 120},
            {"name": "pt", "kind": "pt", "betas": [0.5, 1.0, 2.0], "n_sweeps": 10,
             "pp": {"n_pp": 3, "n_sweeps": 2}},
        ]
    )
    rc, out = run_config(tmp_path, doc)
    assert rc == 0
    rep = json.load(open(os.path.join(out, "report.json")))
    assert rep["schema"] == "coldspin-report/1"
    assert rep["scale"] == "analogue"
    assert rep["label"] == "test"
    assert rep["instance"]["n_qubits"] == 6

    # every default materialized into the echo
    echo = rep["config"]
    assert echo["require_equal_budget"] is False
    assert echo["exact_reference"] == "auto"
    assert echo["seed"] == 11
    mh = echo["methods"][0]
    assert mh["n_walkers"] == 1 and mh["beta"] == 2.0
    pp = echo["methods"][1]["pp"]
    assert pp["t_pp"] == 0.02

    # budgets: mh 120, pt 3 betas * 10 sweeps * 6 spins + 3*2*6 pp adds
    mh_d, pt_d = rep["methods"]
    assert mh_d["budget"] == mh_d["total_samples"] == 120
    assert pt_d["budget"] == pt_d["total_samples"] == 180 + 36
    assert pt_d["pp"]["added_samples"] == 36
    assert pt_d["swap_attempts"] == [5, 5]

    # chain instance has an exact oracle, so divergences are filled in
    assert rep["tables"]["exact_ln_z"] is not None
    obs = open(os.path.join(out, "observables.csv")).read().splitlines()
    assert obs[0].startswith("method,temperature,beta,ln_z_tilde")
    assert len(obs) == 1 + 2 * 2
    last = obs[-1].split(",")
    assert last[7] != "" and float(last[7]) >= -1e-9

    for name in ("pool_mh1.csv", "trace_pt.csv", "exact_reference.csv"):
        assert os.path.exists(os.path.join(out, name))
    assert sorted(rep["files"]) == rep["files"]


def test_run_cd_method_details(tmp_path):
    doc = base_config(
        [{"name": "cd", "kind": "cd", "n_iter": 2, "n_shots": 60, "n_cvar": 8}]
    )
    rc, out = run_config(tmp_path, doc)
    assert rc == 0
    rep = json.load(open(os.path.join(out, "report.json")))
    d = rep["methods"][0]
    assert d["budget"] == d["total_samples"] == 120
    assert [it["iteration"] for it in d["iterations"]] == [1, 2]
    assert d["iterations"][0]["bias_max_abs"] == 0.0
    assert len(d["final_bias"]) == 6
    echo_cd = rep["config"]["methods"][0]
    assert echo_cd["schedule"] == "sin2" and echo_cd["w"] == 0.5


def test_run_deterministic_and_echo_closes(tmp_path):
    doc = base_config(
        [
            {"name": "mh1", "kind": "mh", "beta": 2.0, "n_steps": 90},
            {"name": "cd", "kind": "cd", "n_iter": 1, "n_shots": 50, "n_cvar": 5},
        ]
    )
    rc1, out1 = run_config(tmp_path, doc, out="a")
    rc2, out2 = run_config(tmp_path, doc, out="b")
    assert rc1 == 0 and rc2 == 0
    for name in sorted(os.listdir(out1)):
        if name == "report.json":
            continue
        assert filecmp.cmp(os.path.join(out1, name), os.path.join(out2, name), shallow=False)
    body1, body2 = report_body(os.path.join(out1, "report.json")), report_body(
        os.path.join(out2, "report.json")
    )
    assert body1 == body2

    echo_cfg = write_config(tmp_path, body1["config"], name="echo.json")
    out3 = str(tmp_path / "c")
    assert main(["run", "--config", echo_cfg, "--out", out3]) == 0
    assert report_body(os.path.join(out3, "report.json")) == body1
    assert filecmp.cmp(
        os.path.join(out1, "pool_mh1.csv"), os.path.join(out3, "pool_mh1.csv"), shallow=False
    )


def test_run_seed_override_lands_in_echo(tmp_path):
    doc = base_config([{"name": "mh1", "kind": "mh", "beta": 2.0, "n_steps": 80}])
    rc1, out1 = run_config(tmp_path, doc, out="a")
    rc2, out2 = run_config(tmp_path, doc, out="b", extra_args=("--seed", "99"))
    assert rc1 == 0 and rc2 == 0
    assert report_body(os.path.join(out2, "report.json"))["config"]["seed"] == 99
    assert not filecmp.cmp(
        os.path.join(out1, "pool_mh1.csv"), os.path.join(out2, "pool_mh1.csv"), shallow=False
    )


def test_run_empty_methods_rejected(tmp_path, capsys):
    doc = base_config([])
    rc, _ = run_config(tmp_path, doc)
    assert rc == 2
    assert "non-empty" in capsys.readouterr().err


def test_run_unequal_budget_rejected(tmp_path, capsys):
    doc = base_config(
        [
            {"name": "a", "kind": "mh", "beta": 1.0, "n_steps": 100},
            {"name": "b", "kind": "mh", "beta": 1.0, "n_steps": 200},
        ],
        require_equal_budget=True,
    )
    rc, _ = run_config(tmp_path, doc)
    assert rc == 2
    err = capsys.readouterr().err
    assert "a=100" in err and "b=200" in err


def test_run_equal_budget_counts_pp(tmp_path):
    # 2*50 cd shots + 2*1*6 greedy adds == 112 == mh steps
    doc = base_config(
        [
            {"name": "cd", "kind": "cd", "n_iter": 2, "n_shots": 50, "n_cvar": 5,
             "pp": {"n_pp": 2, "n_sweeps": 1}},
            {"name": "mh1", "kind": "mh", "beta": 2.0, "n_steps": 112},
        ],
        require_equal_budget=True,
    )
    rc, out = run_config(tmp_path, doc)
    assert rc == 0
    rep = json.load(open(os.path.join(out, "report.json")))
    assert [m["total_samples"] for m in rep["methods"]] == [112, 112]


def test_run_adaptive_ladder_blocks_equal_budget(tmp_path, capsys):
    doc = base_config(
        [
            {"name": "pt", "kind": "pt", "n_sweeps": 5,
             "adapt": {"beta_min": 0.5, "beta_max": 5.0, "target_ratio": 0.2,
                       "n_pt_steps": 60}},
        ],
        require_equal_budget=True,
    )
    rc, _ = run_config(tmp_path, doc)
    assert rc == 2
    assert "adaptive" in capsys.readouterr().err


def test_run_adaptive_ladder_executes(tmp_path):
    doc = base_config(
        [
            {"name": "pt", "kind": "pt", "n_sweeps": 5,
             "adapt": {"beta_min": 0.5, "beta_max": 5.0, "target_ratio": 0.2,
                       "n_pt_steps": 60}},
        ]
    )
    rc, out = run_config(tmp_path, doc)
    assert rc == 0
    rep = json.load(open(os.path.join(out, "report.json")))
    d = rep["methods"][0]
    assert d["adapted"] is True
    assert d["betas"][0] == 0.5 and d["betas"][-1] == 5.0
    assert d["budget"] == len(d["betas"]) * 5 * 6 == d["total_samples"]


def test_run_failing_block_is_named(tmp_path, capsys):
    doc = base_config(
        [{"name": "tiny", "kind": "mh", "beta": 5.0, "n_steps": 4,
          "pp": {"n_pp": 50000, "n_sweeps": 1}}]
    )
    rc, _ = run_config(tmp_path, doc)
    assert rc == 2
    assert "method 'tiny'" in capsys.readouterr().err


def test_run_adaptation_failure_exits_3(tmp_path, capsys):
    doc = base_config(
        [
            {"name": "pt", "kind": "pt", "n_sweeps": 5,
             "adapt": {"beta_min": 0.1, "beta_max": 50.0, "target_ratio": 0.999,
                       "n_pt_steps": 30, "max_iters": 1}},
        ]
    )
    rc, _ = run_config(tmp_path, doc)
    assert rc == 3
    err = capsys.readouterr().err
    assert "method 'pt'" in err


def test_run_unknown_keys_rejected(tmp_path, capsys):
    doc = base_config([{"name": "m", "kind": "mh", "beta": 1.0, "n_steps": 10}])
    doc["mystery"] = 1
    rc, _ = run_config(tmp_path, doc)
    assert rc == 2
    assert "mystery" in capsys.readouterr().err

    doc = base_config([{"name": "m", "kind": "mh", "beta": 1.0, "n_steps": 10, "wat": 3}])
    rc, _ = run_config(tmp_path, doc)
    assert rc == 2
    assert "wat" in capsys.readouterr().err


def test_run_malformed_json_reports_position(tmp_path, capsys):
    cfg = tmp_path / "broken.json"
    cfg.write_text('{"label": "x",\n  "oops\n}', encoding="utf-8")
    rc = main(["run", "--config", str(cfg), "--out", str(tmp_path / "out")])
    assert rc == 2
    assert "line 2" in capsys.readouterr().err


def test_run_threads_flag_validated(tmp_path, capsys):
    doc = base_config([{"name": "m", "kind": "mh", "beta": 1.0, "n_steps": 10}])
    rc, _ = run_config(tmp_path, doc, extra_args=("--threads", "0"))
    assert rc == 2
    rc, out = run_config(tmp_path, doc, out="t4", extra_args=("--threads", "4"))
    assert rc == 0
    rep = json.load(open(os.path.join(out, "report.json")))
    assert rep["meta"]["threads_requested"] == 4
    assert rep["meta"]["threads_used"] == 1


def test_run_betas_grid_echo(tmp_path):
    doc = base_config([{"name": "m", "kind": "mh", "beta": 1.0, "n_steps": 30}])
    del doc["temperatures"]
    doc["betas"] = [0.0, 1.5]
    rc, out = run_config(tmp_path, doc)
    assert rc == 0
    rep = json.load(open(os.path.join(out, "report.json")))
    assert rep["config"]["betas"] == [0.0, 1.5]
    assert "temperatures" not in rep["config"]
    assert rep["grid"]["betas"] == [0.0, 1.5]
    assert rep["grid"]["temperatures"][0] == math.inf or rep["grid"]["temperatures"][0] is None


def test_run_log_grid_materialized(tmp_path):
    doc = base_config([{"name": "m", "kind": "mh", "beta": 1.0, "n_steps": 30}])
    doc["temperatures"] = {"log": [0.1, 1.0, 4]}
    rc, out = run_config(tmp_path, doc)
    assert rc == 0
    temps = json.load(open(os.path.join(out, "report.json")))["config"]["temperatures"]
    assert temps == log_temperature_grid(0.1, 1.0, 4)
    assert temps[0] == pytest.approx(0.1) and temps[-1] == pytest.approx(1.0)


def test_resolve_config_is_idempotent(tmp_path):
    doc = base_config(
        [
            {"kind": "mh", "temperature": 0.25, "n_steps": 40},
            {"name": "pt", "kind": "pt", "betas": [1.0, 2.0], "n_sweeps": 3},
        ]
    )
    first = resolve_config(doc, str(tmp_path))
    first.pop("_betas")
    again = resolve_config(json.loads(json.dumps(first)), str(tmp_path))
    again.pop("_betas")
    assert first == again
    assert first["methods"][0]["name"] == "mh"  # defaulted from kind


# ----------------------------------------------------------------------
# fit-temp / throughput


def test_fit_temp_recovers_boltzmann_beta(tmp_path, capsys):
    h, inst = write_chain(tmp_path, n=8, seed=2)
    beta = 1.3
    ex = enumerate_boltzmann(h, beta)
    rng = np.random.Generator(np.random.PCG64(7))
    idx = rng.choice(1 << 8, size=20000, p=ex.probabilities)
    pool = SamplePool(h)
    pool.record_batch(indices_to_packed(idx, 8))
    csv_path = str(tmp_path / "pool.csv")
    pool.to_csv(csv_path)

    out = tmp_path / "fit"
    rc = main(
        ["fit-temp", "--samples", csv_path, "--instance", inst,
         "--bracket", "0.1,10", "--out", str(out)]
    )
    assert rc == 0
    record = json.loads(capsys.readouterr().out)
    assert record["schema"] == "coldspin-fit/1"
    assert record["beta_eff"] == pytest.approx(beta, abs=0.05)
    assert not record["saturated"]
    on_disk = json.load(open(out / "fit.json"))
    assert on_disk == record


def test_fit_temp_temperature_bracket(tmp_path, capsys):
    h, inst = write_chain(tmp_path, n=6, seed=9)
    ex = enumerate_boltzmann(h, 1.0)
    rng = np.random.Generator(np.random.PCG64(3))
    idx = rng.choice(64, size=10000, p=ex.probabilities)
    pool = SamplePool(h)
    pool.record_batch(indices_to_packed(idx, 6))
    csv_path = str(tmp_path / "pool.csv")
    pool.to_csv(csv_path)
    rc = main(
        ["fit-temp", "--samples", csv_path, "--instance", inst,
         "--bracket", "0.05,100", "--unit", "temperature"]
    )
    assert rc == 0
    record = json.loads(capsys.readouterr().out)
    assert record["bracket_beta"] == [pytest.approx(0.01), pytest.approx(20.0)]
    assert record["beta_eff"] == pytest.approx(1.0, abs=0.1)
    assert record["t_eff"] == pytest.approx(1.0 / record["beta_eff"])


def test_fit_temp_malformed_csv(tmp_path, capsys):
    _, inst = write_chain(tmp_path)
    bad = tmp_path / "bad.csv"
    bad.write_text("bitstring,energy\n000000,1.0\n", encoding="utf-8")
    rc = main(["fit-temp", "--samples", str(bad), "--instance", inst, "--bracket", "0.1,10"])
    assert rc == 2
    assert "header" in capsys.readouterr().err


def test_throughput_reports_rate(tmp_path, capsys):
    _, inst = write_chain(tmp_path)
    out = tmp_path / "tp"
    rc = main(
        ["throughput", "--instance", inst, "--seconds", "0.05", "--out", str(out)]
    )
    assert rc == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["n_qubits"] == 6
    assert rep["updates"] > 0
    assert rep["updates_per_second"] == pytest.approx(
        rep["updates"] / rep["seconds"]
    )
    assert json.load(open(out / "throughput.json"))["updates"] == rep["updates"]


# ----------------------------------------------------------------------
# odds and ends


def test_log_temperature_grid_shape():
    grid = log_temperature_grid(0.02, 1.0, 9)
    assert len(grid) == 9
    assert grid[0] == pytest.approx(0.02) and grid[-1] == pytest.approx(1.0)
    ratios = [b / a for a, b in zip(grid, grid[1:])]
    assert max(ratios) - min(ratios) < 1e-9
    with pytest.raises(ValueError):
        log_temperature_grid(1.0, 0.5, 4)
    with pytest.raises(ValueError):
        log_temperature_grid(0.1, 1.0, 1)


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == 2


def test_duplicate_method_names_rejected(tmp_path, capsys):
    doc = base_config(
        [
            {"name": "m", "kind": "mh", "beta": 1.0, "n_steps": 10},
            {"name": "m", "kind": "mh", "beta": 2.0, "n_steps": 10},
        ]
    )
    rc, _ = run_config(tmp_path, doc)
    assert rc == 2
    assert "duplicate" in capsys.readouterr().err


def test_method_name_must_be_filename_safe(tmp_path):
    doc = base_config([{"name": "a/b", "kind": "mh", "beta": 1.0, "n_steps": 10}])
    rc, _ = run_config(tmp_path, doc)
    assert rc == 2
