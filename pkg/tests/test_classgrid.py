import numpy as np
import pytest
from hypothesis import given, strategies as st

from colorclass.classgrid import (
    ClassMap,
    GridParams,
    ab_deviation,
    bin_table,
    class_centers,
    decode_class,
    decode_classes,
    decode_map,
    encode_ab,
    encode_class,
    encode_image,
    make_grid,
)

TABLE_II = {  # alpha: (total class points, max dev, avg dev)
    4: (2916, 2, 1),
    6: (1296, 3, 1.5),
    8: (784, 4, 2),
    10: (484, 5, 2.5),
    12: (324, 6, 3),
    14: (256, 7, 3.5),
}


@pytest.mark.parametrize(
    "alpha,beta,delta,n",
    [(6, 108, 36, 1296), (8, 112, 28, 784), (14, 112, 16, 256), (4, 108, 54, 2916), (10, 110, 22, 484), (12, 108, 18, 324)],
)
def test_make_grid(alpha, beta, delta, n):
    g = make_grid(alpha)
    assert (g.beta, g.delta, g.n_classes) == (beta, delta, n)


@pytest.mark.parametrize("alpha", [0, -6, 5, 7])
def test_make_grid_rejects(alpha):
    with pytest.raises(ValueError):
        make_grid(alpha)


def test_make_grid_warns_outside_validated_set():
    with pytest.warns(UserWarning):
        g = make_grid(2)
    assert g.delta == 108


def test_gridparams_consistency_checked():
    with pytest.raises(ValueError):
        GridParams(6, 108, 30)


@pytest.mark.parametrize("a,b,c", [(0, 0, 666), (-108, -108, 0), (107, 107, 1295), (107.999, -108, 35)])
def test_encode_class(a, b, c):
    assert encode_class(a, b, make_grid(6)) == c


def test_encode_clamps_out_of_range():
    g = make_grid(6)
    assert encode_class(-128, -128, g) == 0
    assert encode_class(127, 127, g) == 1295
    assert encode_class(108, 0, g) == 18 * 36 + 35


@pytest.mark.parametrize("c,ab", [(666, (3.0, 3.0)), (0, (-105.0, -105.0)), (1295, (105.0, 105.0))])
def test_decode_class(c, ab):
    assert decode_class(c, make_grid(6)) == ab


def test_decode_rejects_out_of_range():
    g = make_grid(6)
    with pytest.raises(ValueError):
        decode_class(1296, g)
    with pytest.raises(ValueError):
        decode_classes(np.array([-1]), g)


@pytest.mark.parametrize("alpha", sorted(TABLE_II))
def test_centers_encode_to_themselves(alpha):
    g = make_grid(alpha)
    c = np.arange(g.n_classes)
    a, b = decode_classes(c, g)
    np.testing.assert_array_equal(encode_ab(a, b, g), c)


@pytest.mark.parametrize("alpha", sorted(TABLE_II))
def test_bin_deviation_matches_table(alpha):
    assert ab_deviation(make_grid(alpha)) == (alpha / 2, alpha / 4)


def test_bin_table_rows():
    rows = bin_table()
    assert [(r.alpha, r.total_class_points, r.max_dev_ab, r.avg_dev_ab) for r in rows] == [
        (a, *TABLE_II[a]) for a in sorted(TABLE_II)
    ]
    with pytest.raises(ValueError):
        bin_table([])


@given(st.floats(-108, 107.999), st.floats(-108, 107.999))
def test_bounded_loss(a, b):
    g = make_grid(6)
    da, db = decode_class(encode_class(a, b, g), g)
    assert abs(da - a) <= 3 and abs(db - b) <= 3


@given(st.integers(0, 35), st.integers(0, 35), st.floats(0, 5.999), st.floats(0, 5.999), st.floats(0, 5.999), st.floats(0, 5.999))
def test_locality(i, j, u1, v1, u2, v2):
    g = make_grid(6)
    lo_a, lo_b = i * 6 - 108, j * 6 - 108
    assert encode_class(lo_a + u1, lo_b + v1, g) == encode_class(lo_a + u2, lo_b + v2, g)
    if i < 35:
        assert encode_class(lo_a + u1, lo_b + v1, g) != encode_class(lo_a + 6 + u2, lo_b + v2, g)


def test_distinct_classes_equals_grid_size():
    g = make_grid(8)
    v = np.arange(-g.beta, g.beta)
    a, b = np.meshgrid(v, v)
    assert np.unique(encode_ab(a, b, g)).size == g.n_classes


def test_image_lift_and_decode_map():
    g = make_grid(6)
    lab = np.zeros((2, 3, 3))
    lab[..., 1] = [[0, -108, 107], [1, 2, 3]]
    lab[..., 2] = [[0, -108, 107], [0, 0, 0]]
    m = encode_image(lab, g)
    assert m.classes.tolist() == [[666, 0, 1295], [666, 666, 666]]
    ab = decode_map(m)
    assert ab.shape == (2, 3, 2)
    assert tuple(ab[0, 0]) == (3.0, 3.0)
    assert class_centers(g).shape == (1296, 2)


def test_classmap_validation():
    g = make_grid(14)
    with pytest.raises(ValueError):
        ClassMap(np.array([[256]]), g)
    with pytest.raises(TypeError):
        ClassMap(np.array([[1.5]]), g)
    with pytest.raises(ValueError):
        ClassMap(np.array([1, 2]), g)
    m = ClassMap(np.array([[3, 1]]), g, approved_hash="x", n_dense=4)
    assert m.compacted and (m.height, m.width) == (1, 2)
    with pytest.raises(ValueError):
        decode_map(m)
