import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from coderiv.derivatives import (
    CoderivKind,
    coderivative_action,
    coderivative_f,
    coderivative_g,
    coderivative_matrix,
    coderivative_matrix_f,
    jacobian,
    jacobian_batch,
    jacobian_f,
    jacobian_g,
    jacobian_h,
    norm_identity_rhs_f,
    norm_identity_rhs_g,
)
from coderiv.errors import DomainError
from coderiv.mappings import MapId
from coderiv.oracles import fd_jacobian

R2 = 1 / np.sqrt(2)


def _symbolic_jacobians():
    """Row j holds the partials with respect to x_j, matching the package layout."""
    x = sp.symbols("x1:5", real=True)
    r2 = sp.sqrt(x[0] ** 2 + x[1] ** 2)
    f = [(x[0] ** 2 - x[1] ** 2) / r2, 2 * x[0] * x[1] / r2]
    n = sp.sqrt(sum(v**2 for v in x))
    h = [(x[0] ** 2 - x[1] ** 2) / n, 2 * x[0] * x[1] / n, (x[2] ** 2 - x[3] ** 2) / n, 2 * x[2] * x[3] / n]
    jf = sp.Matrix(f).jacobian(x[:2]).T
    jh = sp.Matrix(h).jacobian(x).T
    return sp.lambdify(x[:2], jf, "numpy"), sp.lambdify(x, jh, "numpy")


SYM_F, SYM_H = _symbolic_jacobians()


def random_points(dim, n, seed):
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(n, dim))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return d * rng.uniform(0.1, 10, n)[:, None]


def test_jacobian_f_examples():
    np.testing.assert_allclose(jacobian_f([1, 0]), [[1, 0], [0, 2]], atol=1e-15)
    np.testing.assert_allclose(jacobian_f([0, 1]), [[0, 2], [-1, 0]], atol=1e-15)
    np.testing.assert_allclose(jacobian_f([1, 1]), [[np.sqrt(2), R2], [-np.sqrt(2), R2]], rtol=1e-15)
    for z in ([1, 0], [0, 1], [1, 1]):
        np.testing.assert_allclose(jacobian_f(z), fd_jacobian("f", z), atol=1e-8)


def test_jacobian_f_undefined_at_origin():
    with pytest.raises(DomainError):
        jacobian_f([0, 0])
    with pytest.raises(DomainError):
        coderivative_matrix_f([0, 0])


def test_coderivative_matrix_f_examples():
    np.testing.assert_allclose(coderivative_matrix_f([1, 0]), [[1, 0], [0, 2]], atol=1e-15)
    np.testing.assert_allclose(coderivative_matrix_f([0, 1]), [[0, -1], [2, 0]], atol=1e-15)


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_transpose_duality_is_exact(a, b):
    if a == 0 and b == 0:
        return
    np.testing.assert_array_equal(coderivative_matrix_f([a, b]), jacobian_f([a, b]).T)


def test_coderivative_f_examples():
    assert coderivative_f([0, 0], [0.3, -0.7]).kind is CoderivKind.EMPTY
    assert coderivative_f([0, 0], [0, 0]).kind is CoderivKind.SINGLETON_THETA
    res = coderivative_f([1, 0], [0, 1])
    assert res.kind is CoderivKind.UNIQUE
    np.testing.assert_allclose(res.vector, [0, 2], atol=1e-15)
    assert res.as_set(2)[0] is res.vector
    assert coderivative_f([0, 0], [1, 1]).as_set(2) == []


def test_coderivative_matches_component_formulas():
    # x1 = (y1 (z1^2 + 3 z2^2) z1 + 2 y2 z2^3) / D, x2 = (-y1 (3 z1^2 + z2^2) z2 + 2 y2 z1^3) / D
    rng = np.random.default_rng(0)
    for _ in range(50):
        z, y = rng.normal(size=2), rng.normal(size=2)
        d = (z @ z) ** 1.5
        x1 = (y[0] * (z[0] ** 2 + 3 * z[1] ** 2) * z[0] + 2 * y[1] * z[1] ** 3) / d
        x2 = (-y[0] * (3 * z[0] ** 2 + z[1] ** 2) * z[1] + 2 * y[1] * z[0] ** 3) / d
        np.testing.assert_allclose(coderivative_f(z, y).vector, [x1, x2], rtol=1e-12, atol=1e-14)


def test_jacobian_g_examples():
    expect = np.zeros((4, 4))
    expect[:2, :2] = [[1, 0], [0, 2]]
    expect[2:, 2:] = [[0, 2], [-1, 0]]
    np.testing.assert_allclose(jacobian_g([1, 0, 0, 1]), expect, atol=1e-15)
    with pytest.raises(DomainError):
        jacobian_g([1, 0, 0, 0])
    with pytest.raises(DomainError):
        jacobian_g([0, 0, 0, 0])


def test_jacobian_g_off_blocks_exactly_zero():
    for z in random_points(4, 100, 1):
        m = jacobian_g(z)
        assert np.all(m[:2, 2:] == 0) and np.all(m[2:, :2] == 0)


def test_coderivative_g_examples():
    assert coderivative_g([0, 0, 1, 0], [0.5, 0, 0, 0]).kind is CoderivKind.EMPTY
    res = coderivative_g([0, 0, 1, 0], [0, 0, 0, 1])
    assert res.kind is CoderivKind.UNIQUE
    np.testing.assert_allclose(res.vector, [0, 0, 0, 2], atol=1e-15)
    assert coderivative_g([0, 0, 0, 0], [0, 0, 0, 0]).kind is CoderivKind.SINGLETON_THETA
    assert coderivative_g([0, 0, 0, 0], [0, 0, 1, 0]).kind is CoderivKind.EMPTY


def test_coderivative_g_nondegenerate_is_transpose_action():
    rng = np.random.default_rng(2)
    for _ in range(50):
        z, y = rng.normal(size=4), rng.normal(size=4)
        np.testing.assert_allclose(coderivative_g(z, y).vector, y @ jacobian_g(z).T, rtol=1e-13, atol=1e-14)


def test_jacobian_h_examples():
    np.testing.assert_allclose(jacobian_h([1, 0, 0, 0]), np.diag([1, 2, 0, 0]), atol=1e-15)
    np.testing.assert_allclose(jacobian_h([1, 0, 0, 0]), fd_jacobian("h", [1, 0, 0, 0]), atol=1e-8)
    np.testing.assert_allclose(jacobian_h([1, 1, 1, 1]), fd_jacobian("h", [1, 1, 1, 1]), atol=1e-6)
    z = np.array([1.0, 1, 1, 1])
    # hand values with |z|^3 = 8: [0, 0] = (1 + 3 + 2 + 2) / 8, [0, 1] = 2 * 3 / 8
    assert jacobian_h(z)[0, 0] == pytest.approx(1.0)
    assert jacobian_h(z)[0, 1] == pytest.approx(0.75)
    with pytest.raises(DomainError):
        jacobian_h([0, 0, 0, 0])


def test_jacobian_h_entries_off_the_coordinate_planes():
    # the entries that depend on both blocks, at a point where that matters
    z = np.array([0.3, -1.2, 0.7, 2.0])
    n3 = np.linalg.norm(z) ** 3
    m = jacobian_h(z)
    assert m[0, 1] == pytest.approx(2 * z[1] * (z[1] ** 2 + z[2] ** 2 + z[3] ** 2) / n3, rel=1e-13)
    assert m[1, 1] == pytest.approx(2 * z[0] * (z[0] ** 2 + z[2] ** 2 + z[3] ** 2) / n3, rel=1e-13)
    assert m[2, 3] == pytest.approx(2 * z[3] * (z[0] ** 2 + z[1] ** 2 + z[3] ** 2) / n3, rel=1e-13)
    assert m[3, 3] == pytest.approx(2 * z[2] * (z[0] ** 2 + z[1] ** 2 + z[2] ** 2) / n3, rel=1e-13)


def test_analytic_jacobians_match_symbolic():
    for z in random_points(2, 200, 3):
        np.testing.assert_allclose(jacobian_f(z), np.array(SYM_F(*z), dtype=float), rtol=1e-12, atol=1e-13)
    for z in random_points(4, 200, 4):
        np.testing.assert_allclose(jacobian_h(z), np.array(SYM_H(*z), dtype=float), rtol=1e-12, atol=1e-13)


@pytest.mark.parametrize("map_id", list(MapId))
def test_analytic_jacobians_match_finite_differences(map_id):
    for z in random_points(map_id.dim, 300, 5):
        np.testing.assert_allclose(jacobian(map_id, z), fd_jacobian(map_id, z, 1e-5), atol=1e-6)


def test_jacobians_stable_at_extreme_scales():
    for s in (1e-200, 1e200):
        np.testing.assert_allclose(jacobian_f([s, s]), jacobian_f([1, 1]), rtol=1e-15)
        np.testing.assert_allclose(jacobian_h([s, 0, 0, s]), jacobian_h([1, 0, 0, 1]), rtol=1e-15)


def test_batch_matches_pointwise():
    for map_id in MapId:
        pts = random_points(map_id.dim, 20, 6)
        expect = np.array([jacobian(map_id, z) for z in pts])
        np.testing.assert_allclose(jacobian_batch(map_id, pts), expect, rtol=1e-14, atol=1e-15)
    # a zero block of g yields a zero block, not an error
    out = jacobian_batch("g", np.array([[0.0, 0, 1, 0]]))[0]
    assert np.all(out[:2] == 0)
    np.testing.assert_allclose(out[2:, 2:], np.diag([1, 2]))


def test_coderivative_action_orientation():
    z, y = np.array([0.0, 1.0]), np.array([1.0, 0.0])
    # the row-vector product y @ D*f(z) equals the column product J @ y
    np.testing.assert_allclose(coderivative_action("f", z, y), y @ coderivative_matrix("f", z))
    np.testing.assert_allclose(coderivative_action("f", z, y), [0, -1], atol=1e-15)


def test_norm_identity_rhs_f_examples():
    assert norm_identity_rhs_f([1, 0], [0, 1]) == pytest.approx(4.0)
    assert norm_identity_rhs_f([1, 0], [1, 0]) == pytest.approx(1.0)
    assert norm_identity_rhs_f([0.3, 2], [0, 0]) == 0.0
    with pytest.raises(DomainError):
        norm_identity_rhs_f([0, 0], [1, 0])


def test_norm_identity_rhs_g_examples():
    assert norm_identity_rhs_g([1, 0, 1, 0], [0, 1, 0, 1]) == pytest.approx(8.0)
    assert norm_identity_rhs_g([0, 0, 1, 0], [0, 0, 1, 0]) == pytest.approx(1.0)
    assert norm_identity_rhs_g([1, 2, 3, 4], [0, 0, 0, 0]) == 0.0
    with pytest.raises(DomainError):
        norm_identity_rhs_g([0, 0, 1, 0], [1, 0, 0, 0])
    with pytest.raises(DomainError):
        norm_identity_rhs_g([0, 0, 0, 0], [0, 0, 0, 0])


@settings(max_examples=300)
@given(st.tuples(*[st.floats(-10, 10)] * 4))
def test_norm_identity_f(v):
    z, y = np.array(v[:2]), np.array(v[2:])
    if not np.any(z) or np.linalg.norm(z) < 1e-6:
        return
    x = coderivative_f(z, y).vector
    assert x @ x == pytest.approx(norm_identity_rhs_f(z, y), rel=1e-10, abs=1e-300)
    # expansion: |x| >= |y|
    assert np.linalg.norm(x) >= np.linalg.norm(y) * (1 - 1e-12)


def test_norm_identity_g_nondegenerate():
    rng = np.random.default_rng(7)
    for _ in range(500):
        z, y = rng.normal(size=4), rng.normal(size=4)
        x = coderivative_g(z, y).vector
        assert x @ x == pytest.approx(norm_identity_rhs_g(z, y), rel=1e-10)


def test_equality_locus_preserves_norm():
    rng = np.random.default_rng(8)
    for _ in range(500):
        z = rng.normal(size=2)
        # y1 z1 z2 = y2 (z1^2 - z2^2) / 2 is solved by y proportional to ((z1^2 - z2^2) / 2, z1 z2)
        y = rng.normal() * np.array([(z[0] ** 2 - z[1] ** 2) / 2, z[0] * z[1]])
        x = coderivative_f(z, y).vector
        assert np.linalg.norm(x) == pytest.approx(np.linalg.norm(y), rel=1e-10)


def test_spectral_rigidity():
    pts = random_points(2, 1000, 9)
    sv = np.linalg.svd(jacobian_batch("f", pts), compute_uv=False)
    np.testing.assert_allclose(sv, np.tile([2.0, 1.0], (len(pts), 1)), atol=1e-9)
    pts4 = random_points(4, 1000, 10)
    sv4 = np.linalg.svd(jacobian_batch("g", pts4), compute_uv=False)
    np.testing.assert_allclose(sv4, np.tile([2.0, 2.0, 1.0, 1.0], (len(pts4), 1)), atol=1e-9)
