import json
import os

import numpy as np
import pytest

from entangled_ergodic.cli import (
    TRAJECTORY_HEADER,
    ResultManifest,
    export_results,
    main,
    read_manifest,
    run,
    verify_manifest,
)
from entangled_ergodic.config import config_hash, load_config, parse_config
from entangled_ergodic.errors import NotDunfordSchwartzError, ValidationError
from entangled_ergodic.operators import volterra_discrete

MINIMAL = {"space": {"d": 3}, "operators": {"T": [{"kind": "identity"}]}, "alpha": [1]}

SPLIT = {
    "space": {"d": 8},
    "operators": {
        "T": [
            {"kind": "koopman", "shift": 1},
            {"kind": "combination", "terms": [
                {"coef": 0.5, "op": {"kind": "koopman", "shift": 1}},
                {"coef": 0.5, "op": {"kind": "koopman", "shift": -1}},
            ]},
            {"kind": "koopman", "shift": 1},
        ],
        "A": [{"kind": "volterra"}, {"kind": "volterra", "d": 8}],
    },
    "alpha": [1, 2, 1],
    "f": {"kind": "random", "seed": 11},
    "checkpoints": [2, 4, 8],
    "splitting": {"eps": 0.1, "horizons": [16]},
    "weights": [{"name": "ones", "sequence": {"kind": "trig_poly", "b": [1], "rho": [1]}, "p": 1}],
}


def _write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_minimal_config_loads(tmp_path):
    cfg = load_config(_write(tmp_path, MINIMAL))
    assert cfg.problem.m == 1 and len(cfg.problem.T) == 1


def test_alpha_out_of_range_names_entry():
    doc = dict(MINIMAL, alpha=[2], k=1)
    with pytest.raises(ValidationError, match=r"alpha\[1\] = 2"):
        parse_config(doc)


def test_schema_violation_names_field():
    doc = dict(MINIMAL, checkpoints=[0, 3])
    with pytest.raises(ValidationError, match="checkpoints/0"):
        parse_config(doc)
    with pytest.raises(ValidationError, match="'space'"):
        parse_config({"operators": {"T": [{"kind": "identity"}]}, "alpha": [1]})


def test_non_ds_operator_named_with_norms():
    doc = dict(MINIMAL, operators={"T": [{"kind": "identity", "scale": 2}]})
    with pytest.raises(NotDunfordSchwartzError, match="T1.*2"):
        parse_config(doc)


def test_non_measure_preserving_map_named():
    doc = dict(MINIMAL, space={"d": 4}, operators={"T": [{"kind": "koopman", "map": [0, 0, 1, 1]}]})
    with pytest.raises(ValidationError, match=r"operators\.T\[0\]"):
        parse_config(doc)


def test_unsorted_checkpoints_rejected():
    with pytest.raises(ValidationError, match="strictly increasing"):
        parse_config(dict(MINIMAL, checkpoints=[4, 4]))


def test_volterra_descriptor_matches_constructor():
    doc = {
        "space": {"d": 64},
        "operators": {"T": [{"kind": "identity"}, {"kind": "identity"}], "A": [{"kind": "volterra", "d": 64}]},
        "alpha": [1, 1],
    }
    A = parse_config(doc).problem.A[0]
    assert json.dumps(A.to_json()) == json.dumps(volterra_discrete(64).to_json())


def test_matrix_descriptor():
    doc = dict(MINIMAL, space={"d": 2}, operators={"T": [{"kind": "matrix", "entries": [0, 1, [1, 0], 0]}]})
    assert np.array_equal(parse_config(doc).problem.T[0].entries, [[0, 1], [1, 0]])


def test_config_hash_ignores_key_order():
    a = {"space": {"d": 2}, "alpha": [1], "operators": {"T": [{"kind": "identity"}]}}
    b = {"operators": {"T": [{"kind": "identity"}]}, "alpha": [1], "space": {"d": 2}}
    assert config_hash(a) == config_hash(b)
    ca, cb = parse_config(a), parse_config(b)
    assert config_hash(ca.run_document("simulate")) == config_hash(cb.run_document("simulate"))
    assert config_hash(ca.run_document("simulate")) != config_hash(parse_config(a, seed=1).run_document("simulate"))


def test_simulate_identity_has_zero_gaps(tmp_path):
    cfg = parse_config(dict(MINIMAL, checkpoints=[1, 2, 4]))
    m = run(cfg, "simulate", str(tmp_path))
    lines = (tmp_path / m.config_hash / "trajectory.csv").read_text().splitlines()
    assert lines[0] == ",".join(TRAJECTORY_HEADER)
    rows = [l.split(",") for l in lines[1:]]
    assert len(rows) == 9
    assert all(r[5] == "nan" for r in rows[:3])
    assert all(float(r[5]) == 0 for r in rows[3:])


def test_float_format_has_17_significant_digits(tmp_path):
    cfg = parse_config(dict(MINIMAL, f={"kind": "values", "values": [1 / 3, 2, 0]}, checkpoints=[1]))
    m = run(cfg, "simulate", str(tmp_path))
    row = (tmp_path / m.config_hash / "trajectory.csv").read_text().splitlines()[1].split(",")
    assert row[2] == "0.33333333333333331"


def test_empty_run_writes_header_only(tmp_path):
    cfg = parse_config(dict(MINIMAL, checkpoints=[]))
    m = run(cfg, "simulate", str(tmp_path))
    assert (tmp_path / m.config_hash / "trajectory.csv").read_text() == ",".join(TRAJECTORY_HEADER) + "\n"


def test_decompose_swap(tmp_path):
    doc = dict(MINIMAL, space={"d": 2}, operators={"T": [{"kind": "koopman", "map": [1, 0]}]})
    m = run(parse_config(doc), "decompose", str(tmp_path))
    out = json.loads((tmp_path / m.config_hash / "decompose.json").read_text())
    assert out["operators"][0]["dim_r"] == 2 and out["operators"][0]["dim_s"] == 0


def test_same_seed_identical_bytes(tmp_path):
    doc = dict(SPLIT, f={"kind": "random"}, operators=dict(SPLIT["operators"], T=[{"kind": "random_ds", "variant": "signed_contraction"}] * 3))
    outs = []
    for sub in ("a", "b"):
        m = run(parse_config(doc, seed=42), "simulate", str(tmp_path / sub))
        outs.append((tmp_path / sub / m.config_hash / "trajectory.csv").read_bytes())
        outs.append((tmp_path / sub / m.config_hash / "summary.json").read_bytes())
    assert outs[0] == outs[2] and outs[1] == outs[3]
    other = run(parse_config(doc, seed=43), "simulate", str(tmp_path / "c"))
    assert (tmp_path / "c" / other.config_hash / "trajectory.csv").read_bytes() != outs[0]


def test_refuses_overwrite_without_force(tmp_path):
    cfg = parse_config(MINIMAL)
    run(cfg, "simulate", str(tmp_path))
    with pytest.raises(ValidationError, match="--force"):
        run(cfg, "simulate", str(tmp_path))
    run(cfg, "simulate", str(tmp_path), force=True)


@pytest.mark.parametrize("sub", ["simulate", "decompose", "split", "weights", "check"])
def test_every_subcommand_produces_valid_manifest(tmp_path, sub):
    m = run(parse_config(SPLIT), sub, str(tmp_path))
    d = tmp_path / m.config_hash
    assert verify_manifest(str(d)) == []
    assert read_manifest(str(d)) == m
    assert all(m.flags.values())


def test_manifest_round_trip():
    m = ResultManifest("abc", "0.1.0", "check", 7, {"config.json": "config.json"}, 0.25, {"engine": True})
    assert ResultManifest.from_json(json.loads(json.dumps(m.to_json()))) == m


def test_manifest_detects_tampered_config(tmp_path):
    m = run(parse_config(MINIMAL), "simulate", str(tmp_path))
    d = tmp_path / m.config_hash
    doc = json.loads((d / "config.json").read_text())
    doc["seed"] = 99
    (d / "config.json").write_text(json.dumps(doc))
    assert "stored config does not match the config hash" in verify_manifest(str(d))


def test_export_rejects_unknown_format(tmp_path):
    m = run(parse_config(MINIMAL), "simulate")
    with pytest.raises(ValidationError):
        export_results(m, "xml", str(tmp_path))


def test_split_without_section_is_validation_error():
    with pytest.raises(ValidationError, match="splitting"):
        run(parse_config(MINIMAL), "split")


def test_main_exit_codes(tmp_path, capsys):
    good = _write(tmp_path, MINIMAL)
    out = str(tmp_path / "res")
    assert main(["simulate", "--config", good, "--out", out, "--seed", "3"]) == 0
    assert main(["simulate", "--config", good, "--out", out, "--seed", "3"]) == 1
    assert main(["simulate", "--config", good, "--out", out, "--seed", "3", "--force"]) == 0
    bad = _write(tmp_path, dict(MINIMAL, alpha=[2], k=1), "bad.json")
    assert main(["simulate", "--config", bad, "--out", out]) == 1
    assert main(["simulate", "--config", str(tmp_path / "missing.json"), "--out", out]) == 1
    wide = {
        "space": {"d": 4},
        "operators": {"T": [{"kind": "identity"}] * 3, "A": [{"kind": "identity"}] * 2},
        "alpha": [1, 2, 1],
        "checkpoints": [1000],
        "budget": {"memory_cap": 1000},
    }
    assert main(["simulate", "--config", _write(tmp_path, wide, "wide.json"), "--out", out]) == 2
    absolute = dict(wide, variant="absolute", budget={"naive": 1000})
    assert main(["simulate", "--config", _write(tmp_path, absolute, "abs.json"), "--out", out]) == 2
    err = capsys.readouterr().err
    assert "budget error" in err and "validation error" in err


def test_seed_must_be_u64(tmp_path):
    good = _write(tmp_path, MINIMAL)
    assert main(["simulate", "--config", good, "--out", str(tmp_path), "--seed", "-1"]) == 1
    assert main(["simulate", "--config", good, "--out", str(tmp_path), "--seed", str(2**64 - 1)]) == 0


def test_console_entry_point_runs_check(tmp_path):
    path = _write(tmp_path, SPLIT)
    assert main(["check", "--config", path, "--out", str(tmp_path / "r")]) == 0
    (d,) = os.listdir(tmp_path / "r")
    suites = json.loads((tmp_path / "r" / d / "check.json").read_text())
    assert set(suites) == {"operators", "jdlg", "engine", "splitting", "weights"}
