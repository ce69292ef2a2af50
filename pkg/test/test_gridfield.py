import numpy as np
import pytest

from logmodcert.errors import DimensionMismatchError, ParameterError
from logmodcert.gridfield import GF_MAGIC, GridField, from_bytes, load_field, save_field, to_bytes


def radial(p):
    return np.linalg.norm(p, axis=-1)


def test_grid_geometry():
    field = GridField.from_function(radial, [-1.0, -1.0], [1.0, 1.0], 5)
    assert field.shape == (5, 5) and field.ndim == 2
    assert field.h == pytest.approx(0.5)
    assert field.points()[4, 0].tolist() == [1.0, -1.0]
    assert field.nearest_index([0.26, -0.9]) == (3, 0)
    assert field.nearest_index([5.0, 5.0]) == (4, 4)
    assert field.sup_bound == pytest.approx(np.sqrt(2.0))


def test_grid_rejects_bad_input():
    with pytest.raises(DimensionMismatchError):
        GridField([0.0], [1.0], np.zeros((3, 3)))
    with pytest.raises(ParameterError):
        GridField([0.0, 0.0], [1.0, 2.0], np.zeros((3, 3)))
    with pytest.raises(ParameterError):
        GridField([0.0, 0.0], [1.0, 1.0], np.zeros((1, 3)))
    with pytest.raises(ParameterError):
        GridField([0.0, 0.0], [1.0, 1.0], np.full((3, 3), np.nan))
    with pytest.raises(DimensionMismatchError):
        GridField([0.0, 0.0], [1.0, 1.0], np.zeros((3, 3)), mask=np.ones((2, 2)))
    field = GridField([0.0, 0.0], [1.0, 1.0], np.zeros((3, 3)))
    with pytest.raises(DimensionMismatchError):
        field.nearest_index([0.5])


def test_masked_nodes_may_hold_nan():
    field = GridField.from_function(lambda p: np.log(radial(p)), [-1.0, -1.0], [1.0, 1.0], 5,
                                    mask_fn=lambda p: radial(p) > 0)
    assert not field.mask[2, 2]
    assert np.isneginf(field.values[2, 2])
    assert field.sup_bound == pytest.approx(np.log(2.0))


@pytest.mark.parametrize("name", ["field.csv", "field.gf"])
def test_saved_field_loads_back(tmp_path, name):
    values = np.arange(12.0).reshape(3, 4) / 7.0
    values[0, 0] = np.nan
    mask = np.ones((3, 4), dtype=bool)
    mask[0, 0] = False
    field = GridField([0.0, -1.0], [0.2, -0.7], values, mask, sup_bound=2.0)
    path = save_field(field, str(tmp_path / name))
    back = load_field(path)
    assert back.shape == field.shape
    assert back.h == pytest.approx(field.h, rel=1e-15)
    np.testing.assert_array_equal(back.mask, mask)
    np.testing.assert_array_equal(back.values[mask], values[mask])
    assert back.sup_bound == 2.0


def test_binary_layout():
    field = GridField([0.0, 0.0], [1.0, 1.0], np.zeros((2, 2)))
    payload = to_bytes(field)
    assert payload[:4] == GF_MAGIC
    assert len(payload) == 4 + 4 + 3 * 8 * 2 + 16 + 9 * 4
    assert from_bytes(payload).sup_bound is None
    with pytest.raises(ParameterError):
        from_bytes(b"XXXX" + payload[4:])
    with pytest.raises(ParameterError):
        from_bytes(payload[:-1])


def test_csv_without_header_rejected(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x1,x2,value,mask\n0,0,1,1\n")
    with pytest.raises(ParameterError):
        load_field(str(path))
