import json
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from localizable import io
from localizable.bipartite import Povm, ValidationError
from localizable.error_basis import gen_pauli, gen_weyl_heisenberg, random_me_basis
from localizable.ideal import random_block_spec
from localizable.localizability import construct_localization
from localizable.two_qubit import bb84_basis, computational_basis, pbsm_basis


def fixtures():
    rng = np.random.default_rng(7)
    out = [gen_pauli().to_measurement_basis(), computational_basis(2), computational_basis(3),
           bb84_basis("L", 0.3), bb84_basis("R"), pbsm_basis(), random_me_basis(3, rng),
           random_block_spec(2, 2, 1, rng)[1]]
    out += [gen_weyl_heisenberg(d).to_measurement_basis() for d in (2, 3, 4)]
    return out


@pytest.mark.parametrize("rep", ["operators", "vectors"])
def test_round_trip_is_bit_exact(rep):
    for b in fixtures():
        text = io.dumps(io.emit_basis(b, {"k": 1}, rep))
        back = io.parse_basis(text)
        assert back.ops.shape == b.ops.shape
        assert back.ops.tobytes() == b.ops.tobytes()


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=2, max_size=2))
def test_complex_encoding_lossless(pair):
    z = np.array([complex(*pair)])
    back = io.decode_complex(json.loads(json.dumps(io.encode_complex(z))), "$", 1)
    assert back.tobytes() == z.tobytes()


def test_bell_vectors_document():
    s = 2 ** -0.5
    doc = {"format_version": "1.0", "dim_a": 2, "dim_b": 2, "representation": "vectors",
           "elements": [[[s, 0], [0, 0], [0, 0], [s, 0]], [[s, 0], [0, 0], [0, 0], [-s, 0]],
                        [[0, 0], [s, 0], [s, 0], [0, 0]], [[0, 0], [s, 0], [-s, 0], [0, 0]]]}
    b = io.parse_basis(json.dumps(doc))
    assert len(b) == 4 and b.dim == 2
    assert b.ops[2][0, 1] == pytest.approx(s)


def test_non_orthogonal_document_names_pair():
    doc = io.emit_basis(computational_basis(2))
    doc["elements"][3] = doc["elements"][1]
    with pytest.raises(ValidationError) as exc:
        io.parse_basis(doc)
    assert exc.value.detail["pair"] == (1, 3)


@pytest.mark.parametrize(
    "mutate, path",
    [
        (lambda d: d.pop("dim_b"), "$.dim_b"),
        (lambda d: d.__setitem__("representation", "tensor"), "$.representation"),
        (lambda d: d["elements"][0][0].__setitem__(0, [1.0]), "$.elements[0][0][0]"),
        (lambda d: d["elements"][0][0].__setitem__(0, [1.0, "x"]), "$.elements[0][0][0]"),
        (lambda d: d.__setitem__("format_version", "9.0"), "$.format_version"),
        (lambda d: d.__setitem__("dim_a", 3), "$.elements"),
    ],
)
def test_schema_errors_are_path_addressed(mutate, path):
    doc = io.emit_basis(computational_basis(2))
    mutate(doc)
    with pytest.raises(io.SchemaError) as exc:
        io.parse_basis(doc)
    assert exc.value.path == path


def test_invalid_json():
    with pytest.raises(io.SchemaError):
        io.parse_basis("{not json")


def test_povm_document():
    p = Povm([np.eye(2) / 2, np.eye(2) / 2])
    back = io.parse_basis(io.dumps(io.emit_basis(p)))
    assert isinstance(back, Povm) and len(back.elements) == 2


def test_protocol_round_trip():
    b = gen_weyl_heisenberg(3).to_measurement_basis()
    loc = construct_localization(b, 2)
    basis, back, method, j = io.parse_protocol(io.dumps(io.emit_protocol(b, loc, "nice-bell", 2)))
    assert (method, j) == ("nice-bell", 2)
    assert np.array_equal(back.pattern.table, loc.pattern.table)
    assert back.alice.kets.tobytes() == loc.alice.kets.tobytes()


def test_state_document():
    rho = io.parse_state(io.dumps(io.emit_state(np.eye(4) / 4)))
    assert np.allclose(rho, np.eye(4) / 4)
    rho = io.parse_state({"format_version": "1.0", "dim": 2, "vector": [[3, 0], [0, 4]]})
    assert np.allclose(rho, np.array([[9, -12j], [12j, 16]]) / 25)


def run(args, stdin=None, env=None):
    full_env = dict(os.environ, **(env or {}))
    return subprocess.run([sys.executable, "-m", "localizable.cli", *args], input=stdin,
                          capture_output=True, text=True, env=full_env)


def pipe(*commands, env=None):
    out = None
    for args in commands:
        res = run(args, out, env)
        if res.returncode not in (0, 3):
            return res
        out = res.stdout
    return res


def test_cli_pbsm_two_qubit():
    res = pipe(["generate", "pbsm"], ["classify", "--mode", "two-qubit"])
    assert res.returncode == 3
    assert json.loads(res.stdout)["verdict"]["tag"] == "NotLocalizable"


def test_cli_bb84_two_qubit():
    res = pipe(["generate", "bb84"], ["classify", "--mode", "two-qubit"])
    assert res.returncode == 0
    assert json.loads(res.stdout)["verdict"]["tag"] == "BB84"


def test_cli_synthesize_simulate_pipeline():
    res = pipe(["generate", "pauli-bell"], ["synthesize", "--j", "2"], ["simulate", "--exact"])
    assert res.returncode == 0
    doc = json.loads(res.stdout)
    assert doc["verification"]["residual"] < 1e-11
    assert doc["instrument_distance"] < 1e-11
    assert doc["format_version"] == io.FORMAT_VERSION and "eps_sum" in doc["tolerance"]


def test_cli_simulate_with_input_and_shots(tmp_path):
    proto = tmp_path / "p.json"
    state = tmp_path / "s.json"
    assert run(["generate", "weyl-heisenberg-bell", "--d", "3", "-o", str(tmp_path / "b.json")]).returncode == 0
    assert run(["synthesize", str(tmp_path / "b.json"), "--j", "4", "-o", str(proto)]).returncode == 0
    rho = np.eye(9) / 9
    state.write_text(io.dumps(io.emit_state(rho)))
    args = ["simulate", str(proto), "--input", str(state), "--shots", "900", "--seed", "3", "--transcript"]
    first, second = run(args), run(args)
    assert first.returncode == 0
    doc = json.loads(first.stdout)
    assert doc["counts"] == json.loads(second.stdout)["counts"]
    assert sum(doc["counts"]) == 900 and doc["seed"] == 3
    assert doc["max_probability_error"] < 1e-10
    assert len(doc["transcript"]) == 81
    assert set(doc["branches_per_outcome"].values()) == {9}


def test_cli_two_qubit_protocol_simulation(tmp_path):
    res = pipe(["generate", "bb84", "--orientation", "R", "--theta", "0.4"], ["synthesize"])
    assert res.returncode == 0
    proto = json.loads(res.stdout)
    assert proto["method"] == "two-qubit:BB84"
    state = tmp_path / "s.json"
    state.write_text(io.dumps(io.emit_state(np.eye(4) / 4)))
    res = run(["simulate", "-", "--input", str(state), "--shots", "100", "--seed", "1"], res.stdout)
    doc = json.loads(res.stdout)
    assert doc["verification"]["residual"] < 1e-11
    assert doc["probabilities"] == pytest.approx([0.25] * 4)


def test_cli_synthesize_not_localizable():
    res = pipe(["generate", "random-me-basis", "--d", "3", "--seed", "1"], ["synthesize"])
    assert res.returncode == 3
    assert json.loads(res.stderr)["error"] == "not-localizable"


def test_cli_seed_required():
    res = run(["generate", "random-me-basis", "--d", "2"])
    assert res.returncode == 2
    assert "--seed" in json.loads(res.stderr)["message"]


def test_cli_random_family_records_seed():
    a = run(["generate", "block", "--d", "2", "--ra", "2", "--rb", "2", "--seed", "5"])
    b = run(["generate", "block", "--d", "2", "--ra", "2", "--rb", "2", "--seed", "5"])
    assert a.stdout == b.stdout
    assert json.loads(a.stdout)["metadata"]["seed"] == 5
    assert run(["validate"], a.stdout).returncode == 0


def test_cli_unknown_family_and_bad_flags():
    assert run(["generate", "nonsense"]).returncode != 0
    assert run(["classify", "--mode", "sideways"]).returncode != 0


def test_cli_validation_and_io_errors(tmp_path):
    doc = io.emit_basis(computational_basis(2))
    doc["elements"][3] = doc["elements"][1]
    res = run(["validate"], json.dumps(doc))
    assert res.returncode == 2
    err = json.loads(res.stderr)
    assert err["detail"]["pair"] == [1, 3]
    assert run(["validate", str(tmp_path / "missing.json")]).returncode == 4
    assert run(["validate"], "{}").returncode == 4


def test_cli_classify_deterministic():
    basis = run(["generate", "random-me-basis", "--d", "3", "--seed", "9"]).stdout
    outs = []
    for threads in ("1", "4"):
        res = run(["classify"], basis, env={"OMP_NUM_THREADS": threads, "OPENBLAS_NUM_THREADS": threads})
        doc = json.loads(res.stdout)
        doc.pop("timing_s")
        outs.append(doc)
    assert outs[0] == outs[1]
    assert outs[0]["verdict"]["reason"] == "NotNice"


def test_cli_out_of_hypothesis_is_not_a_rejection():
    res = pipe(["generate", "computational", "--d", "3"], ["classify"])
    assert res.returncode == 0
    assert json.loads(res.stdout)["verdict"]["reason"] == "OutOfHypothesis"


def test_cli_env_tolerance_echoed():
    res = pipe(["generate", "pauli-bell"], ["classify"], env={"LOCALIZABLE_EPS_SUM": "1e-7"})
    assert json.loads(res.stdout)["tolerance"]["eps_sum"] == 1e-7
    bad = run(["validate"], "{}", env={"LOCALIZABLE_EPS_SUM": "2"})
    assert bad.returncode == 4


def test_cli_report(tmp_path):
    b = tmp_path / "b.json"
    p = tmp_path / "p.json"
    run(["generate", "pauli-bell", "-o", str(b)])
    run(["synthesize", str(b), "-o", str(p)])
    res = run(["report", str(b), str(p)])
    doc = json.loads(res.stdout)
    assert doc["entries"][0]["equal_resource"]["reason"] == "Localizable"
    assert doc["entries"][0]["two_qubit"]["tag"] == "Bell"
    assert doc["entries"][1]["residual"] < 1e-11
    text = run(["report", str(b), str(p), "--format", "text"]).stdout
    assert "format_version" in text and "residual" in text
