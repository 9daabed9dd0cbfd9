import numpy as np
import pytest

from skmtl.errors import ParseError
from skmtl.io import (
    FORMAT_VERSION,
    hyperparams_from_dict,
    hyperparams_to_dict,
    load_json,
    load_model,
    model_from_dict,
    model_to_dict,
    read_dataset_csv,
    read_matrix_csv,
    save_json,
    save_model,
    write_dataset_csv,
    write_matrix_csv,
)
from skmtl.kernels import GAUSSIAN, LINEAR, KernelSpec
from skmtl.model import Dataset, Hyperparams, MultiTaskModel, StructureMatrix


def random_dataset(seed=0, n=7, d=3, t=2):
    rng = np.random.default_rng(seed)
    return Dataset(X=rng.standard_normal((n, d)), Y=rng.standard_normal((n, t)))


def test_dataset_round_trip_exact(tmp_path):
    data = random_dataset()
    p = tmp_path / "data.csv"
    write_dataset_csv(p, data)
    back = read_dataset_csv(p)
    assert np.array_equal(back.X, data.X)
    assert np.array_equal(back.Y, data.Y)


def test_dataset_header_layout(tmp_path):
    data = random_dataset(n=2, d=3, t=2)
    p = tmp_path / "data.csv"
    write_dataset_csv(p, data)
    first = p.read_text().splitlines()[0]
    assert first == "x0,x1,x2,y0,y1"


def test_dataset_write_deterministic(tmp_path):
    data = random_dataset(seed=3)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_dataset_csv(p1, data)
    write_dataset_csv(p2, data)
    assert p1.read_bytes() == p2.read_bytes()


def test_dataset_parse_errors_carry_line_numbers(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x0,y0\n1.0,2.0\n3.0\n")
    with pytest.raises(ParseError) as err:
        read_dataset_csv(p)
    assert "line 3" in str(err.value)

    p.write_text("x0,y0\n1.0,oops\n")
    with pytest.raises(ParseError) as err:
        read_dataset_csv(p)
    assert "line 2" in str(err.value)

    p.write_text("a,b\n1.0,2.0\n")
    with pytest.raises(ParseError) as err:
        read_dataset_csv(p)
    assert "line 1" in str(err.value)

    p.write_text("x0,y0\n1.0,nan\n")
    with pytest.raises(ParseError):
        read_dataset_csv(p)


def test_matrix_round_trip(tmp_path):
    a = np.random.default_rng(1).standard_normal((4, 4)) * 1e3
    p = tmp_path / "m.csv"
    write_matrix_csv(p, a)
    assert np.array_equal(read_matrix_csv(p), a)


def test_matrix_parse_error(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1,2\n3\n")
    with pytest.raises(ParseError) as err:
        read_matrix_csv(p)
    assert "line 2" in str(err.value)


def test_json_round_trip_and_determinism(tmp_path):
    payload = {"b": [1.5, 2.25], "a": {"nested": 0.1}}
    p1, p2 = tmp_path / "x.json", tmp_path / "y.json"
    save_json(p1, payload)
    save_json(p2, payload)
    assert p1.read_bytes() == p2.read_bytes()
    assert load_json(p1) == payload


def test_load_json_parse_error(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"a": 1,\n  "b": }\n')
    with pytest.raises(ParseError) as err:
        load_json(p)
    assert "line 2" in str(err.value)


def test_hyperparams_dict_round_trip():
    hp = Hyperparams(lam=0.25, mu=0.7, epsilon=0.01, max_outer=17)
    back = hyperparams_from_dict(hyperparams_to_dict(hp))
    assert back == hp
    assert hyperparams_to_dict(hp)["lambda"] == 0.25


def test_hyperparams_dict_validation():
    with pytest.raises(ParseError):
        hyperparams_from_dict({"mu": 0.5})
    with pytest.raises(ParseError):
        hyperparams_from_dict({"lambda": 0.1, "bogus": 1})


def fitted_model(seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((6, 3))
    c = rng.standard_normal((6, 2))
    a = StructureMatrix(np.array([[2.0, 0.3], [0.3, 1.0]]))
    return MultiTaskModel(train_X=x, kernel=KernelSpec(GAUSSIAN, bandwidth=1.5), C=c, A=a)


def test_model_round_trip_predictions_exact(tmp_path):
    model = fitted_model()
    p = tmp_path / "model.json"
    save_model(p, model, Hyperparams(lam=0.1, mu=0.5, epsilon=0.1))
    back = load_model(p)
    x_new = np.random.default_rng(9).standard_normal((5, 3))
    assert np.array_equal(back.predict(x_new), model.predict(x_new))
    assert back.kernel == model.kernel


def test_model_dict_format_checks():
    model = fitted_model()
    payload = model_to_dict(model)
    assert payload["format"] == FORMAT_VERSION
    assert payload["n"] == 6 and payload["d"] == 3 and payload["T"] == 2

    bad = dict(payload)
    bad["format"] = "skmtl-v0"
    with pytest.raises(ParseError):
        model_from_dict(bad)
    missing = dict(payload)
    del missing["C"]
    with pytest.raises(ParseError):
        model_from_dict(missing)
    corrupt = dict(payload)
    corrupt["A"] = [[1.0, 2.0], [2.0, 1.0]]  # indefinite
    with pytest.raises(ParseError):
        model_from_dict(corrupt)


def test_model_json_linear_kernel(tmp_path):
    model = MultiTaskModel(
        train_X=np.eye(3),
        kernel=KernelSpec(LINEAR),
        C=np.zeros((3, 2)),
        A=StructureMatrix(np.eye(2)),
    )
    p = tmp_path / "model.json"
    save_model(p, model)
    assert load_model(p).kernel == KernelSpec(LINEAR)
