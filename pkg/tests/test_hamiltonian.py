"""Instance construction, conventions, generators, and serialization."""

from __future__ import annotations

import numpy as np
import pytest

from coldspin.hamiltonian import (
    SIDON_COEFS,
    DiagonalHamiltonian,
    bit_to_spin,
    canonical_bytes,
    gen_ising_chain,
    gen_spin_glass,
    gen_three_body,
    indices_to_packed,
    load_instance,
    pack_rows,
    packed_to_indices,
    packed_to_text,
    save_instance,
    spins_from_bits,
    text_to_packed,
    unpack_rows,
)


def test_spin_convention() -> None:
    assert bit_to_spin(0) == 1
    assert bit_to_spin(1) == -1
    assert spins_from_bits(np.array([0, 1, 0], dtype=np.uint8)).tolist() == [1, -1, 1]


def test_energy_hand_cases() -> None:
    h = DiagonalHamiltonian(2, (((0,), 0.5), ((1,), -0.25), ((0, 1), 1.0)))
    # '00': spins (+1,+1) -> 0.5 - 0.25 + 1.0
    assert h.energy("00") == pytest.approx(1.25)
    # '10': qubit 0 flipped, spins (-1,+1)
    assert h.energy("10") == pytest.approx(-0.5 - 0.25 - 1.0)
    assert h.energy("01") == pytest.approx(0.5 + 0.25 - 1.0)
    assert h.energy("11") == pytest.approx(-0.5 + 0.25 + 1.0)


def test_term_canonicalization() -> None:
    h = DiagonalHamiltonian(3, (((2, 0), 1.0), ((0, 2), 1.0), ((1,), 0.0)))
    assert h.terms == (((0, 2), 2.0),)
    assert h.n_terms == 1
    assert h.energy("001") == pytest.approx(-2.0)
    # sorted by (order, support)
    g = DiagonalHamiltonian(3, (((0, 1, 2), 1.0), ((2,), 1.0), ((0, 1), 1.0)))
    assert [sup for sup, _ in g.terms] == [(2,), (0, 1), (0, 1, 2)]
    assert g.order_counts() == {1: 1, 2: 1, 3: 1}


def test_construction_errors() -> None:
    with pytest.raises(ValueError):
        DiagonalHamiltonian(2, (((0, 0), 1.0),))
    with pytest.raises(ValueError):
        DiagonalHamiltonian(2, (((3,), 1.0),))
    with pytest.raises(ValueError):
        DiagonalHamiltonian(0, ())


def test_batch_energies_match_scalar() -> None:
    h = gen_spin_glass(6, seed=11)
    texts = ["000000", "111111", "010101", "110010"]
    rows = np.concatenate([text_to_packed(s, 6)[None, :] for s in texts], axis=0)
    batch = h.energies_packed(rows)
    for k, s in enumerate(texts):
        assert h.energy(s) == batch[k]  # bit-identical, same accumulation order


def test_pauli_sum_energies_agree() -> None:
    h = gen_three_body(5, n_pairs=4, n_triples=3, seed=7)
    ps = h.to_pauli_sum()
    # a Z-diagonal word on basis state |s> gives prod of spins over support
    for idx in range(32):
        bits = np.array([(idx >> q) & 1 for q in range(5)], dtype=np.uint8)
        spins = spins_from_bits(bits)
        expected = 0.0
        for (x, z), c in ps.items():
            assert x == 0
            prod = 1
            for q in range(5):
                if (z >> q) & 1:
                    prod *= spins[q]
            expected += c.real * prod
        text = "".join(str(b) for b in bits)
        assert h.energy(text) == pytest.approx(expected, abs=1e-12)


def test_packing_round_trips() -> None:
    n = 13
    rng = np.random.Generator(np.random.PCG64(3))
    bits = rng.integers(0, 2, size=(40, n)).astype(np.uint8)
    rows = pack_rows(bits)
    assert rows.shape == (40, 2)
    assert np.array_equal(unpack_rows(rows, n), bits)
    texts = ["".join(str(b) for b in row) for row in bits]
    for k, s in enumerate(texts):
        assert packed_to_text(rows[k], n) == s
        assert np.array_equal(text_to_packed(s, n), rows[k])
    idx = packed_to_indices(rows, n)
    assert np.array_equal(indices_to_packed(idx, n), rows)
    # qubit 0 is the least significant bit of the index
    assert packed_to_indices(text_to_packed("1" + "0" * (n - 1), n)[None, :], n)[0] == 1


def test_text_validation() -> None:
    with pytest.raises(ValueError):
        text_to_packed("01", 3)
    with pytest.raises(ValueError):
        text_to_packed("012", 3)


def test_chain_generator_structure() -> None:
    ring = gen_ising_chain(8, seed=5)
    assert ring.n_qubits == 8
    assert ring.order_counts() == {1: 8, 2: 8}
    h, j = ring.chain_fields_couplings()
    assert np.all(np.abs(h) <= 1.0) and np.all(np.abs(j) <= 1.0)
    assert np.all(j != 0.0)

    open_chain = gen_ising_chain(8, seed=5, open_boundary=True)
    ho, jo = open_chain.chain_fields_couplings()
    # same draw sequence, wrap bond dropped
    assert np.array_equal(ho, h)
    assert np.array_equal(jo[:-1], j[:-1])
    assert jo[-1] == 0.0

    # determinism
    again = gen_ising_chain(8, seed=5)
    assert again == ring
    assert gen_ising_chain(8, seed=6) != ring


def test_chain_decomposition_round_trip() -> None:
    ring = gen_ising_chain(5, seed=2)
    h, j = ring.chain_fields_couplings()
    terms = [((i,), float(h[i])) for i in range(5)]
    terms += [(tuple(sorted((i, (i + 1) % 5))), float(j[i])) for i in range(5)]
    rebuilt = DiagonalHamiltonian(5, tuple(terms))
    assert rebuilt == ring


def test_chain_decomposition_rejects_non_chain() -> None:
    glass = gen_spin_glass(5, seed=1)
    with pytest.raises(ValueError):
        glass.chain_fields_couplings()
    triple = DiagonalHamiltonian(4, (((0, 1, 2), 1.0),))
    with pytest.raises(ValueError):
        triple.chain_fields_couplings()


def test_spin_glass_generator() -> None:
    g = gen_spin_glass(6, seed=9, e0=0.5)
    assert g.order_counts() == {1: 6, 2: 15}
    assert all(abs(c) <= 0.5 for _, c in g.terms)
    assert gen_spin_glass(6, seed=9, e0=0.5) == g
    with pytest.raises(ValueError):
        gen_spin_glass(1, seed=0)
    with pytest.raises(ValueError):
        gen_spin_glass(4, seed=0, e0=0.0)


def test_three_body_generator() -> None:
    g = gen_three_body(10, n_pairs=12, n_triples=8, seed=4)
    assert g.order_counts() == {1: 10, 2: 12, 3: 8}
    alphabet = set(SIDON_COEFS)
    assert all(c in alphabet for _, c in g.terms)
    supports = [sup for sup, _ in g.terms]
    assert len(set(supports)) == len(supports)
    assert gen_three_body(10, 12, 8, seed=4) == g
    with pytest.raises(ValueError):
        gen_three_body(4, n_pairs=7, n_triples=0, seed=0)  # only 6 pairs exist


def test_sidon_alphabet_structure() -> None:
    # symmetric alphabet whose positive half has all pairwise sums distinct
    assert sorted(SIDON_COEFS) == sorted(-c for c in SIDON_COEFS)
    pos = [c for c in SIDON_COEFS if c > 0]
    sums = {
        round(pos[i] + pos[j], 12)
        for i in range(len(pos))
        for j in range(i, len(pos))
    }
    assert len(sums) == len(pos) * (len(pos) + 1) // 2


def test_save_load_round_trip(tmp_path) -> None:
    g = gen_three_body(9, n_pairs=6, n_triples=5, seed=13)
    path = str(tmp_path / "inst.json")
    save_instance(g, path)
    back = load_instance(path)
    assert back == g
    assert back.terms == g.terms  # bit-exact coefficients
    assert back.metadata == g.metadata
    assert canonical_bytes(back) == canonical_bytes(g)


def test_load_reports_json_position(tmp_path) -> None:
    path = tmp_path / "bad.json"
    path.write_text('{"n_qubits": 2,\n "terms": [}\n')
    with pytest.raises(ValueError, match=r"line 2 column"):
        load_instance(str(path))


def test_load_validates_structure(tmp_path) -> None:
    path = tmp_path / "bad.json"
    path.write_text("[1, 2]\n")
    with pytest.raises(ValueError, match="top level"):
        load_instance(str(path))
    path.write_text('{"n_qubits": 2}\n')
    with pytest.raises(ValueError, match="terms"):
        load_instance(str(path))
    path.write_text('{"n_qubits": 2, "terms": [{"support": [0, 5], "coef": 1.0}]}\n')
    with pytest.raises(ValueError, match="outside"):
        load_instance(str(path))
    path.write_text('{"n_qubits": 2, "terms": [{"support": [0]}]}\n')
    with pytest.raises(ValueError, match="coef"):
        load_instance(str(path))


def test_metadata_not_part_of_identity() -> None:
    a = DiagonalHamiltonian(2, (((0,), 1.0),), {"kind": "x"})
    b = DiagonalHamiltonian(2, (((0,), 1.0),), {"kind": "y"})
    assert a == b
    assert canonical_bytes(a) == canonical_bytes(b)
