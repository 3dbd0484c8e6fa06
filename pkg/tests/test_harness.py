from __future__ import annotations

import copy
import json

import numpy as np
import pytest

from hyperlab.harness import cli
from hyperlab.harness.claims import CLAIMS, EXPERIMENT_CLAIMS, claims_for_criterion
from hyperlab.harness.config import ConfigError, config_hash, load_config, validate
from hyperlab.harness.experiments import EXPERIMENTS, Table, experiment_rng, table_bytes


@pytest.fixture(scope="module")
def cfg():
    return load_config()


@pytest.fixture(scope="module")
def lemma_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("lemma")
    code = cli.main(["run", "lemma", "--out", str(out)])
    return code, out


# -- configuration ------------------------------------------------------------

def test_default_config_valid(cfg):
    assert cfg["seed"] == 20240611
    assert set(EXPERIMENTS) <= set(cfg)


def test_unknown_and_missing_keys_reported(cfg):
    bad = copy.deepcopy(cfg)
    bad["grid"]["colour"] = "red"
    del bad["lemma"]["samples"]
    bad["expand"]["profiles"][0]["radius"] = "wide"
    with pytest.raises(ConfigError) as info:
        validate(bad)
    text = "\n".join(info.value.problems)
    assert "grid.colour: unknown key" in text
    assert "lemma.samples: missing" in text
    assert "expand.profiles[0].radius" in text


def test_range_checks(cfg):
    bad = copy.deepcopy(cfg)
    bad["rates"]["etas"] = [0.0, 1.0]
    bad["mass"] = -1.0
    with pytest.raises(ConfigError) as info:
        validate(bad)
    assert any("mass" in p for p in info.value.problems)
    assert any("eta" in p for p in info.value.problems)


def test_booleans_are_not_numbers(cfg):
    bad = copy.deepcopy(cfg)
    bad["seed"] = True
    with pytest.raises(ConfigError):
        validate(bad)


def test_config_hash(cfg):
    other = copy.deepcopy(cfg)
    other["output"]["dir"] = "elsewhere"
    assert config_hash(other) == config_hash(cfg)
    other["seed"] += 1
    assert config_hash(other) != config_hash(cfg)
    assert load_config(seed=5)["seed"] == 5


def test_toml_errors(tmp_path):
    p = tmp_path / "broken.toml"
    p.write_text("seed = [", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(p)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")


# -- claim registry -------------------------------------------------------------

def test_registry_complete():
    produced = [c for ids in EXPERIMENT_CLAIMS.values() for c in ids]
    assert sorted(produced) == sorted(CLAIMS)
    assert len(produced) == len(set(produced))
    assert all(c.ref.strip() for c in CLAIMS.values())
    for n in range(1, 12):
        assert claims_for_criterion(n), f"criterion {n} has no claim"


def test_experiment_rng_streams(cfg):
    a = experiment_rng(cfg, "lemma").random(3)
    assert np.array_equal(a, experiment_rng(cfg, "lemma").random(3))
    assert not np.array_equal(a, experiment_rng(cfg, "geom").random(3))


def test_table_bytes_format():
    rows = [[0.1, True, 1 + 2j, np.int64(3), "a"], [1e-300, False, complex(0.0, -0.5), 4, "b"]]
    t = Table("t", ["x", "ok", "z", "n", "s"], rows)
    assert table_bytes(t) == (b"x,ok,z_re,z_im,n,s\n"
                              b"0.1,1,1.0,2.0,3,a\n"
                              b"1e-300,0,0.0,-0.5,4,b\n")


# -- run / report ---------------------------------------------------------------

def test_run_lemma_writes_outputs(lemma_run, cfg):
    code, out = lemma_run
    assert code == 0
    data = json.loads((out / "verdicts.json").read_text())
    assert data["config_hash"] == config_hash(cfg) and data["passed"]
    assert [r["claim"] for r in data["verdicts"]] == EXPERIMENT_CLAIMS["lemma"]
    for r in data["verdicts"]:
        assert r["ref"] == CLAIMS[r["claim"]].ref
    text = (out / "verdicts.json").read_text()
    assert text == json.dumps(data, indent=2, sort_keys=True) + "\n"
    header = (out / "lemma.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header == "sample,dim,n,kernel_dim,lhs1,rhs1,lhs2,rhs2,satisfied"


def test_claims_subset(tmp_path):
    assert cli.main(["run", "all", "--claims", "lemma.jordan_equality", "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "verdicts.json").read_text())
    assert data["experiments"] == ["lemma"]
    assert [r["claim"] for r in data["verdicts"]] == ["lemma.jordan_equality"]


def test_usage_errors(tmp_path):
    empty = tmp_path / "empty.toml"
    empty.write_text("", encoding="utf-8")
    assert cli.main(["run", "geom", "--config", str(empty)]) == 2
    assert cli.main(["run", "nonsense"]) == 2
    assert cli.main(["run", "geom", "--claims", "no.such.claim"]) == 2
    assert cli.main(["run", "geom", "--claims", "lemma.jordan_equality"]) == 2
    assert cli.main(["run", "geom", "--jobs", "0"]) == 2
    assert cli.main([]) == 2


def test_numerical_failure_exit_code(monkeypatch, tmp_path, capsys):
    def broken(cfg, rng):
        raise FloatingPointError("overflow in test double")

    monkeypatch.setitem(cli.EXPERIMENTS, "lemma", broken)
    assert cli.main(["run", "lemma", "--out", str(tmp_path)]) == 3
    err = capsys.readouterr().err
    assert "lemma.random_matrices" in err and "overflow" in err
    assert not (tmp_path / "verdicts.json").exists()


def test_report_exit_codes(lemma_run, tmp_path, capsys):
    _, out = lemma_run
    good = out / "verdicts.json"
    assert cli.main(["report", str(good)]) == 0
    assert "0 FAIL" in capsys.readouterr().out

    data = json.loads(good.read_text())
    data["verdicts"][0]["passed"] = False
    failing = tmp_path / "failing.json"
    failing.write_text(json.dumps(data))
    assert cli.main(["report", str(failing)]) == 1
    assert "FAIL" in capsys.readouterr().out.splitlines()[2]

    data["config_hash"] = "0" * 16
    other = tmp_path / "other.json"
    other.write_text(json.dumps(data))
    assert cli.main(["report", str(good), str(other)]) == 2

    corrupt = tmp_path / "corrupt.json"
    corrupt.write_text("{not json")
    assert cli.main(["report", str(corrupt)]) == 2
    assert cli.main(["report", str(tmp_path / "absent.json")]) == 2
    corrupt.write_text(json.dumps({"config_hash": "x", "verdicts": [{"claim": "a"}]}))
    assert cli.main(["report", str(corrupt)]) == 2


def test_geom_reproducible(cfg):
    a = EXPERIMENTS["geom"](cfg, None)
    b = EXPERIMENTS["geom"](cfg, None)
    assert [table_bytes(t) for t in a.tables] == [table_bytes(t) for t in b.tables]
    assert all(r.passed for r in a.records)
