"""Mask algebra against hand values and dense kron oracles."""

from __future__ import annotations

import numpy as np
import pytest

from coldspin.pauli import PauliString, PauliSum, commutator, hs_inner, multiply
from conftest import dense_string, dense_sum, random_string, random_sum


def test_single_qubit_products() -> None:
    x = PauliString.from_label("X0", 1)
    y = PauliString.from_label("Y0", 1)
    z = PauliString.from_label("Z0", 1)
    cases = [
        (x, z, -1j, "Y0"),
        (z, x, 1j, "Y0"),
        (x, y, 1j, "Z0"),
        (y, x, -1j, "Z0"),
        (y, z, 1j, "X0"),
        (z, y, -1j, "X0"),
        (x, x, 1.0, "I"),
        (y, y, 1.0, "I"),
        (z, z, 1.0, "I"),
    ]
    for a, b, coef, label in cases:
        p = multiply(a, b)
        assert p.label() == label
        assert p.letter_coef == coef


def test_multiply_magnitude_and_masks_exact(rng) -> None:
    for _ in range(100):
        a = random_string(rng, 5)
        b = random_string(rng, 5)
        p = multiply(a, b)
        assert p.x_mask == a.x_mask ^ b.x_mask
        assert p.z_mask == a.z_mask ^ b.z_mask
        # phases are exactly +-1 in mask form, so magnitudes multiply exactly
        assert abs(p.coef) == abs(a.coef * b.coef)


def test_multiply_associative(rng) -> None:
    for _ in range(50):
        a, b, c = (random_string(rng, 4) for _ in range(3))
        left = multiply(multiply(a, b), c)
        right = multiply(a, multiply(b, c))
        assert (left.x_mask, left.z_mask) == (right.x_mask, right.z_mask)
        assert abs(left.coef - right.coef) < 1e-14


def test_multiply_matches_dense(rng) -> None:
    for _ in range(50):
        a = random_string(rng, 3)
        b = random_string(rng, 3)
        got = dense_string(multiply(a, b))
        want = dense_string(a) @ dense_string(b)
        assert np.abs(got - want).max() < 1e-12


def test_commutator_hand_case() -> None:
    # [X tensor I, Z tensor Z] = -2i Y tensor Z  (qubit 0 is the X site)
    a = PauliSum.from_strings([PauliString.from_label("X0", 2)])
    b = PauliSum.from_strings([PauliString.from_label("Z0 Z1", 2)])
    out = commutator(a, b).strings()
    assert len(out) == 1
    assert out[0].label() == "Y0 Z1"
    assert out[0].letter_coef == -2j


def test_commutator_matches_dense(rng) -> None:
    for _ in range(20):
        a = random_sum(rng, 3, 4)
        b = random_sum(rng, 3, 4)
        got = dense_sum(commutator(a, b))
        da, db = dense_sum(a), dense_sum(b)
        want = da @ db - db @ da
        assert np.abs(got - want).max() < 1e-10


def test_commuting_terms_drop_out() -> None:
    a = PauliSum.from_strings([PauliString.from_label("Z0", 2, 2.5)])
    b = PauliSum.from_strings([PauliString.from_label("Z0 Z1", 2, -1.25)])
    assert len(commutator(a, b)) == 0


def test_hs_inner_hand_value() -> None:
    a = PauliSum.from_strings(
        [PauliString.from_label("X0", 2, 2.0), PauliString.from_label("Z0", 2, 3j)]
    )
    assert hs_inner(a, a) == pytest.approx(13.0)


def test_hs_inner_distinct_words_orthogonal() -> None:
    a = PauliSum.from_strings([PauliString.from_label("X0 Y1", 2)])
    b = PauliSum.from_strings([PauliString.from_label("X0 Z1", 2)])
    assert hs_inner(a, b) == 0


def test_hs_inner_matches_dense(rng) -> None:
    for _ in range(20):
        a = random_sum(rng, 3, 5)
        b = random_sum(rng, 3, 5)
        got = hs_inner(a, b)
        want = np.trace(dense_sum(a).conj().T @ dense_sum(b)) / 8
        assert abs(got - want) < 1e-10


def test_sum_cancellation_prunes() -> None:
    s = PauliSum(2)
    s.add_string(PauliString.from_label("X0", 2, 1.0))
    s.add_string(PauliString.from_label("X0", 2, -1.0))
    assert len(s) == 0
    s.add_string(PauliString.from_label("X0", 2, 1e-15))
    assert len(s) == 0  # below the pruning threshold


def test_sum_product_matches_dense(rng) -> None:
    for _ in range(10):
        a = random_sum(rng, 3, 4)
        b = random_sum(rng, 3, 4)
        got = dense_sum(a @ b)
        want = dense_sum(a) @ dense_sum(b)
        assert np.abs(got - want).max() < 1e-10


def test_equality_is_structural() -> None:
    a = PauliString(3, 0b101, 0b001, 2.0 + 0j)
    b = PauliString(3, 0b101, 0b001, 2.0 + 0j)
    assert a == b
    assert a != PauliString(3, 0b101, 0b001, 2.0 + 1e-12j)


def test_label_round_trip(rng) -> None:
    for _ in range(30):
        p = random_string(rng, 6)
        back = PauliString.from_label(p.label(), 6, p.letter_coef)
        assert back == p


def test_validation_errors() -> None:
    with pytest.raises(ValueError):
        PauliString(2, 0b100, 0, 1.0)  # mask outside register
    with pytest.raises(ValueError):
        PauliString.from_label("Q0", 1)
    with pytest.raises(ValueError):
        PauliString.from_label("X0 Z0", 1)  # duplicate qubit
    with pytest.raises(ValueError):
        PauliString.from_label("X3", 2)
    with pytest.raises(ValueError):
        multiply(PauliString.from_label("X0", 1), PauliString.from_label("X0", 2))
    with pytest.raises(ValueError):
        hs_inner(PauliSum(1), PauliSum(2))
