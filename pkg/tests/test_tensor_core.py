import numpy as np
import pytest

from toelanczos import (
    BlockStructure,
    HyperVec,
    OrientationError,
    ShapeError,
    Tensor4,
    frobenius,
    from_block_matrix,
    lift,
    lift_dual,
    read_t4f,
    scale_t,
    scale_v,
    star_identity,
    star_inner,
    star_mul_tt,
    star_mul_tv,
    star_mul_vt,
    star_pow,
    to_block_matrix,
    write_t4f,
)


def rand_t4(rng, n1, n2, m):
    return Tensor4(rng.standard_normal((n1, n2, m, m)) + 1j * rng.standard_normal((n1, n2, m, m)))


def rand_hv(rng, n, m, orientation="right"):
    return HyperVec(rng.standard_normal((n, m, m)) + 1j * rng.standard_normal((n, m, m)), orientation)


def rel_err(x, y):
    return np.linalg.norm((x - y).ravel()) / max(np.linalg.norm(y.ravel()), 1e-300)


class TestStarMulTT:
    def test_identity_is_neutral(self):
        rng = np.random.default_rng(0)
        a = rand_t4(rng, 2, 3, 4)
        out = star_mul_tt(a, star_identity(3, 4))
        assert np.allclose(out.data, a.data, rtol=0, atol=0)

    def test_degenerate_modes_reduce_to_scalars(self):
        a = Tensor4(np.array(2.0 + 1j).reshape(1, 1, 1, 1))
        b = Tensor4(np.array(3.0 - 1j).reshape(1, 1, 1, 1))
        out = star_mul_tt(a, b)
        assert out.data[0, 0, 0, 0] == (2 + 1j) * (3 - 1j)

    def test_matches_block_matrix_oracle(self):
        rng = np.random.default_rng(1)
        a = rand_t4(rng, 2, 2, 3)
        b = rand_t4(rng, 2, 2, 3)
        direct = to_block_matrix(star_mul_tt(a, b))
        oracle = to_block_matrix(a) @ to_block_matrix(b)
        assert rel_err(direct, oracle) < 1e-13

    def test_shape_error(self):
        rng = np.random.default_rng(2)
        with pytest.raises(ShapeError):
            star_mul_tt(rand_t4(rng, 2, 3, 4), rand_t4(rng, 2, 3, 4))

    def test_triangularity_closure_bit_exact(self):
        rng = np.random.default_rng(3)
        m = 5
        tri = np.tril(rng.standard_normal((2, 2, m, m)))
        flags = np.full((2, 2), BlockStructure.LOWER_TRIANGULAR, dtype=np.uint8)
        out = star_mul_tt(Tensor4(tri, flags), Tensor4(tri.copy(), flags.copy()))
        assert np.all(out.block_structure == BlockStructure.LOWER_TRIANGULAR)
        upper = np.triu(out.data, k=1)
        assert np.all(upper == 0.0)

    def test_zero_flag_skipping_matches_dense(self):
        rng = np.random.default_rng(4)
        data = rng.standard_normal((3, 3, 4, 4)) + 0j
        flags = np.zeros((3, 3), dtype=np.uint8)
        data[0, 1] = 0.0
        data[2, :] = 0.0
        flags[0, 1] = BlockStructure.ZERO
        flags[2, :] = BlockStructure.ZERO
        b = rand_t4(rng, 3, 2, 4)
        with_flags = star_mul_tt(Tensor4(data, flags), b)
        dense = star_mul_tt(Tensor4(data.copy()), b)
        assert rel_err(with_flags.data, dense.data) < 1e-15


class TestHyperVecProducts:
    def test_identity_action(self):
        rng = np.random.default_rng(5)
        v = rand_hv(rng, 3, 4)
        out = star_mul_tv(star_identity(3, 4), v)
        assert np.allclose(out.data, v.data, rtol=0, atol=0)

    def test_selector_column(self):
        rng = np.random.default_rng(6)
        a = rand_t4(rng, 3, 3, 4)
        e1 = np.zeros(3)
        e1[0] = 1.0
        out = star_mul_tv(a, lift(e1, 4))
        assert np.allclose(out.data, a.data[:, 0], atol=1e-15)

    def test_selector_row(self):
        rng = np.random.default_rng(7)
        a = rand_t4(rng, 3, 3, 4)
        e1 = np.zeros(3)
        e1[0] = 1.0
        out = star_mul_vt(lift_dual(e1, 4), a)
        assert np.allclose(out.data, a.data[0, :], atol=1e-15)

    def test_tv_block_oracle(self):
        rng = np.random.default_rng(8)
        a = rand_t4(rng, 3, 3, 4)
        v = rand_hv(rng, 3, 4)
        direct = star_mul_tv(a, v).data.reshape(12, 4)
        oracle = to_block_matrix(a) @ v.data.reshape(12, 4)
        assert rel_err(direct, oracle) < 1e-13

    def test_vt_block_oracle(self):
        rng = np.random.default_rng(9)
        a = rand_t4(rng, 3, 2, 4)
        w = rand_hv(rng, 3, 4, "dual")
        direct = star_mul_vt(w, a).data
        # dual vectors flatten to a row of blocks
        wrow = np.hstack(list(w.data))
        oracle = wrow @ to_block_matrix(a)
        assert rel_err(np.hstack(list(direct)), oracle) < 1e-13

    def test_orientation_enforced(self):
        rng = np.random.default_rng(10)
        a = rand_t4(rng, 3, 3, 4)
        with pytest.raises(OrientationError):
            star_mul_tv(a, rand_hv(rng, 3, 4, "dual"))
        with pytest.raises(OrientationError):
            star_mul_vt(rand_hv(rng, 3, 4, "right"), a)

    def test_inner_product(self):
        rng = np.random.default_rng(11)
        w = rng.standard_normal(4)
        v = rng.standard_normal(4)
        out = star_inner(lift_dual(w, 3), lift(v, 3))
        assert np.allclose(out, np.vdot(w, v) * np.eye(3), atol=1e-14)

    def test_inner_e1(self):
        e1 = np.zeros(3)
        e1[0] = 1.0
        out = star_inner(lift_dual(e1, 4), lift(e1, 4))
        assert np.array_equal(out, np.eye(4))

    def test_inner_block_oracle(self):
        rng = np.random.default_rng(12)
        w = rand_hv(rng, 3, 4, "dual")
        v = rand_hv(rng, 3, 4)
        oracle = np.hstack(list(w.data)) @ v.data.reshape(12, 4)
        assert rel_err(star_inner(w, v), oracle) < 1e-13


class TestScaling:
    def test_identity_scale(self):
        rng = np.random.default_rng(13)
        a = rand_t4(rng, 2, 2, 3)
        assert np.allclose(scale_t(a, np.eye(3), "left").data, a.data, atol=0)
        v = rand_hv(rng, 2, 3)
        assert np.allclose(scale_v(v, np.eye(3), "right").data, v.data, atol=0)

    def test_zero_scale(self):
        rng = np.random.default_rng(14)
        a = rand_t4(rng, 2, 2, 3)
        assert np.all(scale_t(a, np.zeros((3, 3)), "right").data == 0)

    def test_sides_differ(self):
        rng = np.random.default_rng(15)
        a = rand_t4(rng, 1, 1, 3)
        m = rng.standard_normal((3, 3))
        left = scale_t(a, m, "left").data[0, 0]
        right = scale_t(a, m, "right").data[0, 0]
        assert np.allclose(left, m @ a.data[0, 0])
        assert np.allclose(right, a.data[0, 0] @ m)
        assert not np.allclose(left, right)

    def test_lift_then_scale_is_per_slice(self):
        rng = np.random.default_rng(16)
        vec = rng.standard_normal(4)
        m = rng.standard_normal((3, 3))
        out = scale_v(lift(vec, 3), m, "right")
        for i in range(4):
            assert np.allclose(out.data[i], vec[i] * m, atol=1e-15)

    def test_scale_v_block_oracle(self):
        rng = np.random.default_rng(17)
        v = rand_hv(rng, 3, 4)
        m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        direct = scale_v(v, m, "right").data.reshape(12, 4)
        oracle = v.data.reshape(12, 4) @ m
        assert rel_err(direct, oracle) < 1e-13


class TestLift:
    def test_e1_slices(self):
        e1 = np.zeros(3)
        e1[0] = 1.0
        out = lift(e1, 3)
        assert np.array_equal(out.data[0], np.eye(3))
        assert np.all(out.data[1:] == 0)

    def test_ones_vector(self):
        out = lift(np.ones(5), 2)
        for i in range(5):
            assert np.array_equal(out.data[i], np.eye(2))

    def test_dual_conjugates(self):
        out = lift_dual(np.array([1j, 2.0]), 2)
        assert np.allclose(out.data[0], -1j * np.eye(2))


class TestIdentityAndPowers:
    def test_identity_products(self):
        i4 = star_identity(3, 2)
        assert np.array_equal(star_mul_tt(i4, i4).data, i4.data)
        for k in range(4):
            assert np.array_equal(star_pow(i4, k).data, i4.data)

    def test_identity_flattens_to_identity(self):
        assert np.array_equal(to_block_matrix(star_identity(3, 4)), np.eye(12))

    def test_pow_basics(self):
        rng = np.random.default_rng(18)
        a = rand_t4(rng, 2, 2, 3)
        assert np.array_equal(star_pow(a, 0).data, star_identity(2, 3).data)
        assert np.allclose(star_pow(a, 1).data, a.data, atol=0)

    def test_pow_matches_flattened_cube(self):
        rng = np.random.default_rng(19)
        a = rand_t4(rng, 2, 2, 3)
        cube = np.linalg.matrix_power(to_block_matrix(a), 3)
        assert rel_err(to_block_matrix(star_pow(a, 3)), cube) < 1e-12

    def test_pow_rejects_nonsquare(self):
        rng = np.random.default_rng(20)
        with pytest.raises(ShapeError):
            star_pow(rand_t4(rng, 2, 3, 2), 2)


class TestFrobenius:
    def test_zero(self):
        assert frobenius(Tensor4(np.zeros((2, 2, 3, 3)))) == 0.0

    def test_identity(self):
        assert frobenius(star_identity(4, 9)) == pytest.approx(6.0)

    def test_matches_flat_vector_norm(self):
        rng = np.random.default_rng(21)
        a = rand_t4(rng, 2, 3, 4)
        assert frobenius(a) == pytest.approx(np.linalg.norm(a.data.ravel()))


class TestBlockMatrixRoundTrip:
    def test_round_trip_exact(self):
        rng = np.random.default_rng(22)
        a = rand_t4(rng, 3, 2, 4)
        back = from_block_matrix(to_block_matrix(a), 3, 2, 4)
        assert np.array_equal(back.data, a.data)


class TestT4F:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(23)
        a = rand_t4(rng, 3, 2, 4)
        path = tmp_path / "a.t4f"
        write_t4f(path, a)
        back = read_t4f(path)
        assert np.array_equal(back.data, a.data)
        assert back.block_structure is None

    def test_round_trip_with_structure(self, tmp_path):
        rng = np.random.default_rng(24)
        data = np.tril(rng.standard_normal((2, 3, 4, 4))) + 0j
        flags = np.full((2, 3), BlockStructure.LOWER_TRIANGULAR, dtype=np.uint8)
        flags[0, 1] = BlockStructure.ZERO
        data[0, 1] = 0.0
        path = tmp_path / "b.t4f"
        write_t4f(path, Tensor4(data, flags))
        back = read_t4f(path)
        assert np.array_equal(back.data, data)
        assert np.array_equal(back.block_structure, flags)

    def test_rejects_bad_magic(self, tmp_path):
        path = tmp_path / "junk.t4f"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(IOError):
            read_t4f(path)


class TestAlgebraicProperties:
    """Randomized checks of associativity, distributivity, and flattening."""

    def test_associativity_tensor_hypervec(self):
        rng = np.random.default_rng(30)
        for _ in range(20):
            n, m = rng.integers(1, 5), rng.integers(1, 7)
            a = rand_t4(rng, n, n, m)
            v = rand_hv(rng, n, m)
            left = star_mul_tv(star_mul_tt(a, a), v)
            right = star_mul_tv(a, star_mul_tv(a, v))
            assert rel_err(left.data, right.data) < 1e-12

    def test_associativity_dual(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            n1, n2, m = rng.integers(1, 5), rng.integers(1, 5), rng.integers(1, 7)
            a = rand_t4(rng, n1, n2, m)
            b = rand_hv(rng, n1, m, "dual")
            v = rand_hv(rng, n2, m)
            left = star_inner(star_mul_vt(b, a), v)
            right = star_inner(b, star_mul_tv(a, v))
            assert rel_err(left, right) < 1e-12

    def test_associativity_three_tensors(self):
        rng = np.random.default_rng(32)
        for _ in range(20):
            n1, n2, n3, m = (rng.integers(1, 5) for _ in range(4))
            c = rand_t4(rng, n3, n1, m)
            a = rand_t4(rng, n1, n2, m)
            b = rand_t4(rng, n2, n3, m)
            left = star_mul_tt(star_mul_tt(c, a), b)
            right = star_mul_tt(c, star_mul_tt(a, b))
            assert rel_err(left.data, right.data) < 1e-12

    def test_distributivity(self):
        rng = np.random.default_rng(33)
        for _ in range(20):
            n, m = rng.integers(1, 5), rng.integers(1, 7)
            a, b, c = (rand_t4(rng, n, n, m) for _ in range(3))
            left = star_mul_tt(a, Tensor4(b.data + c.data))
            right = star_mul_tt(a, b).data + star_mul_tt(a, c).data
            assert rel_err(left.data, right) < 1e-13

    def test_block_homomorphism(self):
        rng = np.random.default_rng(34)
        for _ in range(20):
            n1, n2, n3, m = (int(rng.integers(1, 5)) for _ in range(4))
            a = rand_t4(rng, n1, n2, m)
            b = rand_t4(rng, n2, n3, m)
            lhs = to_block_matrix(star_mul_tt(a, b))
            rhs = to_block_matrix(a) @ to_block_matrix(b)
            assert rel_err(lhs, rhs) < 1e-12

    def test_kronecker_lift_commutation(self):
        rng = np.random.default_rng(35)
        for _ in range(10):
            n, m, k = rng.integers(1, 4), rng.integers(1, 6), rng.integers(0, 4)
            a = rand_t4(rng, n, n, m)
            vec = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            alpha = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
            ak = star_pow(a, k)
            left = star_mul_tv(scale_t(ak, alpha, "right"), lift(vec, m))
            right = scale_v(star_mul_tv(ak, lift(vec, m)), alpha, "right")
            assert rel_err(left.data, right.data) < 1e-12
