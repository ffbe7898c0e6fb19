import json

import numpy as np
import pytest

from bosonic_ds.errors import ValidationError
from bosonic_ds.fock import FockSpace, gaussify, moments, validate_density
from bosonic_ds.io import (canonical_dumps, csv_text, format_float, load_matrix,
                           save_matrix)
from bosonic_ds.states import (density_from_dict, density_to_dict, fock_state,
                               golden_dir, load_density, load_golden, mixture,
                               parse_state_spec, save_density, thermal_state,
                               vacuum)


def test_fock_state_level_validation(space14):
    with pytest.raises(ValidationError):
        fock_state(space14, 14)
    with pytest.raises(ValidationError):
        fock_state(space14, (1, 2))


def test_thermal_matches_geometric_law(space14):
    rho = thermal_state(space14, 0.5)
    pops = np.real(np.diag(rho.matrix))
    ratios = pops[1:] / pops[:-1]
    np.testing.assert_allclose(ratios, 1.0 / 3.0, atol=1e-12)
    assert np.trace(rho.matrix).real == pytest.approx(1.0, abs=1e-14)


def test_mixture_weight_normalization(space14):
    mix = mixture([(2.0, vacuum(space14)), (2.0, fock_state(space14, 2))])
    gs = gaussify(mix)
    np.testing.assert_allclose(gs.gamma, 3 * np.eye(2), atol=1e-10)
    with pytest.raises(ValidationError):
        mixture([(-1.0, vacuum(space14)), (2.0, fock_state(space14, 2))])


@pytest.mark.parametrize("spec,check", [
    ("vacuum", lambda t: np.allclose(t.gamma, np.eye(2), atol=1e-8)),
    ("fock:1", lambda t: np.allclose(t.gamma, 3 * np.eye(2), atol=1e-8)),
    ("fock1", lambda t: np.allclose(t.gamma, 3 * np.eye(2), atol=1e-8)),
    ("thermal:0.5", lambda t: np.allclose(t.gamma, 2 * np.eye(2), atol=1e-4)),
    ("squeezed:0.25", lambda t: t.gamma[0, 0] > 1.5 > 0.8 > t.gamma[1, 1]),
    ("displaced:1,0", lambda t: abs(t.d[0] - 1) < 1e-6),
])
def test_parse_string_specs(space14, spec, check):
    rho = parse_state_spec(spec, space14)
    assert check(moments(rho, with_kappa=False))


def test_parse_object_specs(space14, tmp_path):
    rho = parse_state_spec({"kind": "gaussian", "d": [0.0, 0.0],
                            "gamma": [[1.5, 0.0], [0.0, 1.0]]}, space14)
    table = moments(rho, with_kappa=False)
    assert table.gamma[0, 0] == pytest.approx(1.5, abs=1e-6)

    rho = parse_state_spec({"kind": "mixture", "components": [
        {"weight": 0.5, "state": "vacuum"},
        {"weight": 0.5, "state": "fock:2"}]}, space14)
    assert np.trace(rho.matrix).real == pytest.approx(1.0)

    path = tmp_path / "state.json"
    save_density(vacuum(space14), path)
    rho = parse_state_spec({"kind": "file", "path": str(path)}, space14)
    assert rho.matrix[0, 0].real == pytest.approx(1.0)


def test_parse_unknown_specs(space14):
    with pytest.raises(ValidationError):
        parse_state_spec("coherent-cat", space14)
    with pytest.raises(ValidationError):
        parse_state_spec({"kind": "what"}, space14)
    with pytest.raises(ValidationError):
        parse_state_spec(42, space14)


def test_density_file_round_trip(tmp_path, space14):
    rho = thermal_state(space14, 0.5)
    path = tmp_path / "thermal.json"
    save_density(rho, path)
    back = load_density(path)
    assert back.space == rho.space
    np.testing.assert_allclose(back.matrix, rho.matrix, atol=1e-15)
    with pytest.raises(ValidationError):
        load_density(path, expected_space=FockSpace(1, 8))


def test_density_dict_rejects_corrupted():
    data = density_to_dict(vacuum(FockSpace(1, 4)))
    data["real"][0][0] = 0.5   # trace now 0.5
    with pytest.raises(ValidationError):
        density_from_dict(data)


def test_goldens_load_and_validate():
    names = sorted(p.stem for p in golden_dir().glob("*.json"))
    assert names == ["fock1", "fock2", "fock3", "squeezed_z025",
                     "thermal_nbar05", "vacuum"]
    for name in names:
        validate_density(load_golden(name))
    with pytest.raises(ValidationError):
        load_golden("missing")


def test_goldens_match_regenerated():
    from bosonic_ds.states import squeezed_surrogate

    space = FockSpace(1, 14)
    np.testing.assert_allclose(load_golden("fock2").matrix,
                               fock_state(space, 2).matrix, atol=1e-15)
    np.testing.assert_allclose(load_golden("thermal_nbar05").matrix,
                               thermal_state(space, 0.5).matrix, atol=1e-15)
    np.testing.assert_allclose(load_golden("squeezed_z025").matrix,
                               squeezed_surrogate(space, 0.25).matrix, atol=1e-12)


# --- serialization ---------------------------------------------------------


def test_float_formatting():
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(1.0) == "1"
    assert format_float(float("nan")) == "null"
    assert format_float(float("inf")) == "null"


def test_canonical_dumps_deterministic():
    payload = {"a": 0.1, "b": [1, 2.5, None], "c": {"nested": True},
               "arr": np.arange(3.0)}
    assert canonical_dumps(payload) == canonical_dumps(payload)
    parsed = json.loads(canonical_dumps(payload))
    assert parsed["a"] == 0.1
    assert parsed["arr"] == [0.0, 1.0, 2.0]


def test_matrix_json_round_trip(tmp_path):
    m = np.array([[1.0, 0.25], [-0.5, 2.0]])
    path = tmp_path / "m.json"
    save_matrix(m, path)
    np.testing.assert_array_equal(load_matrix(path), m)
    (tmp_path / "bad.json").write_text("[1, 2, 3]\n")
    with pytest.raises(ValueError):
        load_matrix(tmp_path / "bad.json")


def test_csv_formatting():
    text = csv_text(["a", "b"], [[0.5, "x"], [1.0, "y"]])
    lines = text.strip().splitlines()
    assert lines[0] == "a,b"
    assert lines[1] == "0.5,x"
