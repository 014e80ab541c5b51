import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from veridict.rotation import (DegenerateRotationError, EulerYPR, Rotation, euler_mae, euler_to_rotation,
                               geodesic_distance, rotation_to_euler, self_check, sixd_to_rotation)


def quat_to_matrix(q):
    w, x, y, z = q / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_mul(a, b):
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
                     w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
                     w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
                     w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2])


def quat_angle(q1, q2):
    q1, q2 = q1 / np.linalg.norm(q1), q2 / np.linalg.norm(q2)
    conj = q1 * np.array([1, -1, -1, -1])
    rel = quat_mul(conj, q2)
    # atan2 form stays accurate near 0 and pi
    return 2 * math.atan2(np.linalg.norm(rel[1:]), abs(rel[0]))


def test_identity_cases():
    np.testing.assert_array_equal(sixd_to_rotation([1, 0, 0], [0, 1, 0]).m, np.eye(3))
    np.testing.assert_allclose(sixd_to_rotation([2, 0, 0], [1, 1, 0]).m, np.eye(3), atol=1e-15)


def test_orthonormal_over_many_inputs():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(10_000):
        m = sixd_to_rotation(rng.normal(size=3) * rng.uniform(1e-3, 1e3), rng.normal(size=3)).m
        worst = max(worst, np.abs(m.T @ m - np.eye(3)).max(), abs(np.linalg.det(m) - 1))
    assert worst < 1e-9


def test_recovers_rotation_from_its_columns():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        P = quat_to_matrix(rng.normal(size=4))
        np.testing.assert_allclose(sixd_to_rotation(P[:, 0], P[:, 1]).m, P, atol=1e-12)


@pytest.mark.parametrize("a1,a2", [((0, 0, 0), (0, 1, 0)), ((1, 0, 0), (2, 0, 0)), ((1, 0, 0), (0, 0, 0)),
                                   ((np.nan, 0, 0), (0, 1, 0))])
def test_degenerate_inputs(a1, a2):
    with pytest.raises(DegenerateRotationError):
        sixd_to_rotation(a1, a2)


def test_non_rotation_rejected():
    with pytest.raises(ValueError):
        Rotation(np.diag([1.0, 1.0, -1.0]))


def test_geodesic_trivial():
    I = Rotation(np.eye(3))
    assert geodesic_distance(I, I) == 0.0
    rz = Rotation(np.diag([-1.0, -1.0, 1.0]))
    assert geodesic_distance(I, rz) == pytest.approx(math.pi, abs=1e-15)


def test_geodesic_matches_quaternion_oracle():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        q1, q2 = rng.normal(size=4), rng.normal(size=4)
        d = geodesic_distance(Rotation(quat_to_matrix(q1)), Rotation(quat_to_matrix(q2)))
        assert abs(d - quat_angle(q1, q2)) < 1e-9


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=12, max_size=12))
def test_geodesic_metric_properties(v):
    qs = [np.array(v[i:i + 4]) for i in (0, 4, 8)]
    if any(np.linalg.norm(q) < 1e-3 for q in qs):
        return
    a, b, c = (Rotation(quat_to_matrix(q)) for q in qs)
    ab, bc, ac = geodesic_distance(a, b), geodesic_distance(b, c), geodesic_distance(a, c)
    assert 0.0 <= ab <= math.pi
    assert ab == pytest.approx(geodesic_distance(b, a), abs=1e-12)
    assert ac <= ab + bc + 1e-7


def test_euler_cases():
    e = rotation_to_euler(Rotation(np.eye(3)))
    assert (e.yaw, e.pitch, e.roll) == (0.0, 0.0, 0.0)
    e = rotation_to_euler(euler_to_rotation(EulerYPR(30, 10, -5)))
    assert (e.yaw, e.pitch, e.roll) == pytest.approx((30, 10, -5), abs=1e-6)


def test_euler_convention_is_intrinsic_zyx():
    # pure yaw turns x toward y about the vertical z axis
    m = euler_to_rotation(EulerYPR(90, 0, 0)).m
    np.testing.assert_allclose(m @ [1, 0, 0], [0, 1, 0], atol=1e-15)
    # composition order: Rz then Ry then Rx
    r = euler_to_rotation(EulerYPR(20, 30, 40)).m
    rz, ry, rx = (euler_to_rotation(EulerYPR(20, 0, 0)).m, euler_to_rotation(EulerYPR(0, 30, 0)).m,
                  euler_to_rotation(EulerYPR(0, 0, 40)).m)
    np.testing.assert_allclose(r, rz @ ry @ rx, atol=1e-15)


def test_euler_round_trip_random():
    rng = np.random.default_rng(3)
    for _ in range(2000):
        e = EulerYPR(rng.uniform(-180, 180), rng.uniform(-89, 89), rng.uniform(-180, 180))
        b = rotation_to_euler(euler_to_rotation(e))
        for x, y in ((b.yaw, e.yaw), (b.pitch, e.pitch), (b.roll, e.roll)):
            assert abs((x - y + 180) % 360 - 180) < 1e-6


@pytest.mark.parametrize("pitch", [90.0, -90.0])
def test_gimbal_lock_policy(pitch):
    for yaw, roll in ((30, 0), (10, 25), (-120, 70)):
        R = euler_to_rotation(EulerYPR(yaw, pitch, roll))
        e = rotation_to_euler(R)
        assert e.roll == 0.0 and e.pitch == pitch
        np.testing.assert_allclose(euler_to_rotation(e).m, R.m, atol=1e-6)


def test_euler_mae():
    z = EulerYPR(0, 0, 0)
    m = euler_mae([z], [z])
    assert (m.yaw, m.pitch, m.roll, m.mean) == (0, 0, 0, 0)
    assert euler_mae([EulerYPR(350, 0, 0)], [EulerYPR(-10, 0, 0)]).yaw == 0.0
    assert euler_mae([EulerYPR(350, 0, 0)], [EulerYPR(10, 0, 0)]).yaw == pytest.approx(20.0)
    m = euler_mae([EulerYPR(1, 3, 5), EulerYPR(0, 0, 0)], [EulerYPR(-1, -1, -1), EulerYPR(2, 4, 6)])
    assert (m.yaw, m.pitch, m.roll) == (2.0, 4.0, 6.0)
    assert m.mean == 4.0


def test_self_check():
    r = self_check(200, 0)
    assert r["orthonormality"] < 1e-9 and r["euler_round_trip_deg"] < 1e-6
