"""Tests for the planar redundant-arm task."""

import numpy as np
import pytest

from qdlearn import armtask


def _oracle(x):
    # Direct kinematics, scalar loops only.
    joints = len(x)
    angles = [np.pi * (2.0 * xi - 1.0) for xi in x]
    mean = sum(angles) / joints
    var = sum((a - mean) ** 2 for a in angles) / joints
    running = 0.0
    px, py = 0.0, 0.0
    for a in angles:
        running += a
        px += np.cos(running) / joints
        py += np.sin(running) / joints
    return -np.sqrt(var), np.array([px, py])


def test_straight_arm():
    f, d = armtask.arm_evaluate(np.full(8, 0.5))
    assert f == 0.0
    np.testing.assert_allclose(d, [1.0, 0.0], atol=1e-12)


def test_equal_angles_zero_std():
    for c in (0.1, 0.3, 0.9):
        f, _ = armtask.arm_evaluate(np.full(8, c))
        assert abs(f) < 1e-12


def test_one_outlier_hand_value():
    x = np.array([1.0, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5])
    f, d = armtask.arm_evaluate(x)
    # angles (π,0,...,0): population std = π·√7/8
    np.testing.assert_allclose(f, -np.pi * np.sqrt(7) / 8, rtol=1e-12)
    np.testing.assert_allclose(d, [-1.0, 0.0], atol=1e-9)


def test_matches_oracle_random():
    rng = np.random.default_rng(0)
    for _ in range(50):
        x = rng.random(8)
        f, d = armtask.arm_evaluate(x)
        ef, ed = _oracle(x)
        np.testing.assert_allclose(f, ef, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(d, ed, rtol=1e-12, atol=1e-12)


def test_descriptor_inside_unit_disk():
    rng = np.random.default_rng(1)
    xs = rng.random((500, 8))
    _, ds = armtask.arm_evaluate_batch(xs)
    assert np.all(np.linalg.norm(ds, axis=1) <= 1.0 + 1e-9)


def test_fitness_nonpositive():
    rng = np.random.default_rng(2)
    fs, _ = armtask.arm_evaluate_batch(rng.random((200, 8)))
    assert np.all(fs <= 0.0)


def test_mirror_symmetry():
    rng = np.random.default_rng(3)
    for _ in range(20):
        x = rng.random(8)
        f1, d1 = armtask.arm_evaluate(x)
        f2, d2 = armtask.arm_evaluate(1.0 - x)
        np.testing.assert_allclose(f1, f2, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(d1[0], d2[0], atol=1e-12)
        np.testing.assert_allclose(d1[1], -d2[1], atol=1e-12)


def test_out_of_box_rejected():
    with pytest.raises(ValueError):
        armtask.arm_evaluate(np.full(8, 1.5))
    with pytest.raises(ValueError):
        armtask.arm_evaluate(np.array([0.5] * 7 + [-0.1]))
    with pytest.raises(ValueError):
        armtask.arm_evaluate(np.array([0.5] * 7 + [np.nan]))


def test_batch_matches_single():
    rng = np.random.default_rng(4)
    xs = rng.random((9, 8))
    fs, ds = armtask.arm_evaluate_batch(xs)
    for i, x in enumerate(xs):
        f, d = armtask.arm_evaluate(x)
        np.testing.assert_allclose(fs[i], f, rtol=1e-12)
        np.testing.assert_allclose(ds[i], d, rtol=1e-12)


def test_task_adapter():
    task = armtask.ArmTask()
    assert task.dim == 8
    assert task.descriptor_dim == 2
    assert task.box.shape == (8, 2)
    assert np.all(task.box[:, 0] == 0.0) and np.all(task.box[:, 1] == 1.0)
    rng = np.random.default_rng(5)
    xs = rng.random((6, 8))
    fs = task.evaluate_batch(xs)
    ds = task.describe_batch(xs)
    ref_f, ref_d = armtask.arm_evaluate_batch(xs)
    np.testing.assert_allclose(fs, ref_f)
    np.testing.assert_allclose(ds, ref_d)
