import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from varspace import cli, lab
from varspace.errors import ConfigError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="grid.resolutoin"):
        lab.ExperimentConfig.from_dict({"grid": {"resolutoin": 3}})


def test_bad_components_are_config_errors():
    with pytest.raises(ConfigError):
        lab.ExperimentConfig.from_dict({"p": {"name": "nope"}})
    with pytest.raises(ConfigError):
        lab.ExperimentConfig.from_dict({"trials": 0})
    with pytest.raises(ConfigError):
        lab.ExperimentConfig.from_dict({"domain": {"name": "blob"}})


def test_hash_ignores_key_order():
    a = lab.ExperimentConfig.from_dict({"seed": 3, "trials": 4})
    b = lab.ExperimentConfig.from_dict({"trials": 4, "seed": 3})
    assert a.hash == b.hash
    assert a.hash != lab.ExperimentConfig.from_dict({"seed": 4, "trials": 4}).hash


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.json")))
def test_shipped_configs_parse(name):
    lab.ExperimentConfig.load(str(CONFIGS / name))


def test_qe_control_ratio_is_one():
    cfg = lab.ExperimentConfig.from_dict({"qe": {"subset": "Q", "epsilon": 1.0}, "trials": 5,
                                          "lattice": {"nu_max_values": [0, 2]}})
    rep = lab.run_qe_experiment(cfg)
    assert all(t["ratio"] == 1.0 for g in rep.groups for t in g["trials"])
    assert rep.verdict


def test_qe_left_half_single_level_is_sqrt2():
    cfg = lab.ExperimentConfig.from_dict({"trials": 5, "lattice": {"nu_max_values": [0]},
                                          "coefficients": {"sparsity": 1.0}})
    rep = lab.run_qe_experiment(cfg)
    for g in rep.groups:
        for t in g["trials"]:
            assert t["ratio"] == pytest.approx(math.sqrt(2), rel=1e-8)


def test_qe_epsilon_too_large_for_left_half():
    cfg = lab.ExperimentConfig.from_dict({"qe": {"subset": "left_half", "epsilon": 0.75}})
    with pytest.raises(ConfigError):
        lab.run_qe_experiment(cfg)


def test_qe_random_box_meets_volume():
    cfg = lab.ExperimentConfig.from_dict({"qe": {"subset": "random_box", "epsilon": 0.3}, "trials": 3,
                                          "lattice": {"nu_max_values": [2]}})
    rep = lab.run_qe_experiment(cfg)
    assert rep.all_finite
    assert all(t["ratio"] >= 1 - 1e-12 for g in rep.groups for t in g["trials"])


def test_synthesis_hypothesis_violation_quotes_inequality():
    cfg = lab.ExperimentConfig.from_dict({"weight": {"name": "classical", "s": 2.0}, "atoms": {"K": 1.0, "L": 1.0}})
    with pytest.raises(ConfigError, match="K > alpha2"):
        lab.run_synthesis_experiment(cfg)


def test_synthesis_moment_hypothesis():
    cfg = lab.ExperimentConfig.from_dict({"p": {"name": "constant", "value": 0.5}, "scales": ["B"],
                                          "atoms": {"K": 1.0, "L": 0.0}})
    with pytest.raises(ConfigError, match="L > sigma_p"):
        lab.synthesis_hypotheses(cfg, False)


def test_synthesis_refuses_non_mr_domain():
    cfg = lab.ExperimentConfig.from_dict({"grid": {"n": 2, "resolution": 6}, "domain": {"name": "slit_square"}})
    with pytest.raises(ConfigError, match="MR"):
        lab.run_synthesis_experiment(cfg)


def test_single_atom_synthesis_ratio_reproducible():
    data = {"grid": {"resolution": 9, "half_width": 2.0}, "atoms": {"K": 1.0, "L": 1.0},
            "coefficients": {"explicit": [[1, [0], 1.0]]}, "lattice": {"nu_max": 1}}
    cfg = lab.ExperimentConfig.from_dict(data)
    a, _ = lab.run_synthesize(cfg)
    b, _ = lab.run_synthesize(cfg)
    assert a == b
    for sc in ("B", "F"):
        r = a["norms"][sc]["function"] / a["norms"][sc]["sequence"]
        assert math.isfinite(r) and r > 0


def test_convolution_hypotheses():
    cfg = lab.ExperimentConfig.from_dict({"convolution": {"R": 1.0, "type": "F"}})
    with pytest.raises(ConfigError, match="R > n"):
        lab.convolution_R(cfg, "F")
    cfg = lab.ExperimentConfig.from_dict({"p": {"name": "constant", "value": 1.0}, "convolution": {"type": "F"}})
    with pytest.raises(ConfigError, match="1 < p-"):
        lab.convolution_R(cfg, "F")
    cfg = lab.ExperimentConfig.from_dict({"convolution": {"R": 1.0, "type": "B"}})
    with pytest.raises(ConfigError, match="c_log"):
        lab.convolution_R(cfg, "B")


def test_convolution_near_and_far_threshold_bounded():
    maxima = []
    for R in (1.05, 6.0):
        cfg = lab.ExperimentConfig.from_dict({"convolution": {"R": R, "type": "F", "resolutions": [8]},
                                              "trials": 4, "lattice": {"nu_max": 3}})
        rep = lab.run_convolution_experiment(cfg)
        assert rep.all_finite
        maxima.append(rep.groups[0]["stats"]["max"])
    assert maxima[0] >= maxima[1]


def test_spike_is_contracted_in_sup():
    from varspace.analysis import eta_convolve
    from varspace.grid import Grid, GridFunction, GridSequence
    from varspace.exponents import constant
    from varspace.norms import norm_lp_lq

    g = Grid(1, 9, 1.0)
    spike = np.zeros(g.shape)
    spike[g.size // 2] = 1.0
    seq = GridSequence([GridFunction(spike, g)])
    out = eta_convolve(seq, 20.0)
    assert norm_lp_lq(out, constant(math.inf), constant(2.0)) < norm_lp_lq(seq, constant(math.inf), constant(2.0))


def test_report_csv_and_json_shape():
    cfg = lab.ExperimentConfig.from_dict({"qe": {"subset": "Q", "epsilon": 1.0}, "trials": 2,
                                          "lattice": {"nu_max_values": [1]}})
    rep = lab.run_qe_experiment(cfg)
    lines = rep.to_csv().strip().splitlines()
    assert lines[0] == "group,scale,trial,norm_a,norm_b,ratio"
    assert len(lines) == 1 + 2 * 2
    d = json.loads(rep.to_json())
    assert d["provenance"]["config_hash"] == cfg.hash
    assert d["hypotheses"]["subset"] == "Q"


def test_threads_do_not_change_results(monkeypatch):
    cfg = lab.ExperimentConfig.from_dict({"trials": 6, "lattice": {"nu_max_values": [2]}})
    monkeypatch.setenv("VARSPACE_THREADS", "1")
    a = lab.run_qe_experiment(cfg).to_json()
    monkeypatch.setenv("VARSPACE_THREADS", "3")
    assert lab.run_qe_experiment(cfg).to_json() == a


# CLI

def test_cli_exit_codes(tmp_path, capsys):
    assert cli.main(["audit-domain", "--config", str(CONFIGS / "domain_square.json"),
                     "--out", str(tmp_path / "a.json")]) == 0
    assert cli.main(["audit-domain", "--config", str(CONFIGS / "domain_slit.json"),
                     "--out", str(tmp_path / "b.json")]) == 1
    assert cli.main(["audit-weights", "--config", str(CONFIGS / "weights_factorial.json"),
                     "--out", str(tmp_path / "c.json")]) == 1
    bad = write(tmp_path, {"grid": {"nope": 1}})
    assert cli.main(["norm", "--config", bad]) == 2
    (tmp_path / "broken.json").write_text("{")
    assert cli.main(["norm", "--config", str(tmp_path / "broken.json")]) == 2
    assert cli.main(["norm", "--config", str(tmp_path / "missing.json")]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_norm_value(tmp_path):
    out = tmp_path / "n.json"
    assert cli.main(["norm", "--config", str(CONFIGS / "norm_lp.json"), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["value"] == pytest.approx(1.0, rel=1e-9)


def test_cli_verify_writes_csv(tmp_path):
    cfg = write(tmp_path, {"qe": {"subset": "Q", "epsilon": 1.0}, "lattice": {"nu_max_values": [1]}})
    out, csv = tmp_path / "r.json", tmp_path / "r.csv"
    assert cli.main(["verify-qe", "--config", cfg, "--trials", "3", "--seed", "9",
                     "--out", str(out), "--csv", str(csv)]) == 0
    assert json.loads(out.read_text())["verdict"] is True
    assert len(csv.read_text().splitlines()) == 1 + 3 * 2


def test_cli_synthesize_values(tmp_path):
    vals = tmp_path / "f.npy"
    assert cli.main(["synthesize", "--config", str(CONFIGS / "synthesize.json"), "--values", str(vals),
                     "--out", str(tmp_path / "s.json")]) == 0
    assert np.load(vals).shape == (2 ** 10,)


def test_cli_module_entry(tmp_path):
    res = subprocess.run([sys.executable, "-m", "varspace.cli", "audit-domain", "--config",
                          str(CONFIGS / "domain_slit.json"), "--out", str(tmp_path / "x.json")],
                         capture_output=True, text=True)
    assert res.returncode == 1
