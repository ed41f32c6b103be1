"""Smoke tests for the Python bindings. Expected values are computed with
plain Python integers."""

import random

import pytest

import dataseal as ds

M = 65537


def schoolbook(a, b, m):
    return [[sum(a[i][k] * b[k][j] for k in range(len(b))) % m for j in range(len(b[0]))] for i in range(len(a))]


def test_mat_mul_matches_python_integers():
    rng = random.Random(1)
    mod = ds.Modulus(M)
    for _ in range(20):
        r, k, c = (rng.randint(1, 6) for _ in range(3))
        a = [[rng.randrange(M) for _ in range(k)] for _ in range(r)]
        b = [[rng.randrange(M) for _ in range(c)] for _ in range(k)]
        assert ds.mat_mul(ds.Matrix(a, mod), ds.Matrix(b, mod)).to_list() == schoolbook(a, b, M)


def test_run_job_accepts_honest_and_rejects_tampered():
    mod = ds.Modulus.toy(97)
    a = ds.Matrix([[3, 1], [1, 5]], mod)
    b = ds.Matrix([[8, 6], [7, 10]], mod)
    c, verdict = ds.run_job("mul", a, b, slot_count=8)
    assert verdict.accepted
    assert c.to_list() == [[31, 28], [43, 56]]

    _, verdict = ds.run_job("mul", a, b, tamper="element-edit", slot_count=8)
    assert not verdict.accepted
    assert verdict.failed == ["WEIGHTED_CHECKSUM"]


def test_poly_job_result():
    mod = ds.Modulus(M)
    a = ds.Matrix([[2, 3], [5, 7]], mod)
    c, verdict = ds.run_job("poly", a, exponent=5, slot_count=8)
    assert verdict.accepted
    assert c.to_list() == [[pow(x, 5, M) for x in row] for row in [[2, 3], [5, 7]]]


def test_demo_rejects_at_tampered_layer():
    honest = ds.demo_cnn(seed=1)
    assert honest["matches_reference"]
    assert len(honest["logits"]) == 10
    assert all(v.accepted for v in honest["verdicts"])
    for layer in (1, 2, 3):
        with pytest.raises(ds.LayerRejected) as info:
            ds.demo_cnn(seed=1, tamper_layer=layer)
        assert info.value.layer == layer


def test_forgery_toy_modulus_rate():
    rate = ds.forgery_game(ds.Modulus.toy(2), cols=1, trials=10000)
    assert abs(rate - 0.5) <= 0.05
    assert ds.forgery_game(ds.Modulus(M), cols=2, trials=1000) == 0.0


def test_invalid_modulus_raises_registered_code():
    with pytest.raises(ds.DataSealError) as info:
        ds.Modulus(96)
    assert info.value.code == 23
    assert info.value.code_name == "InvalidModulus"
