"""Diagonal spin Hamiltonians and instance generators.

A Hamiltonian here is a polynomial in Pauli-Z operators,

    H = sum_t  coef_t * prod_{i in support_t} Z_i,

stored as (support, coefficient) terms.  Energies are reported in units
of the instance energy scale with k_B = 1, so beta = 1/T throughout.

Spin convention, fixed project-wide: bit value 0 maps to spin +1 and bit
value 1 to spin -1, i.e. Z|0> = +|0>.  Bitstring text reads qubit 0 at
the leftmost character.  Every module converts through the helpers in
this file so the convention lives in exactly one place.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .pauli import PauliSum

__all__ = [
    "bit_to_spin",
    "spins_from_bits",
    "text_to_packed",
    "packed_to_text",
    "pack_rows",
    "unpack_rows",
    "indices_to_packed",
    "packed_to_indices",
    "DiagonalHamiltonian",
    "gen_ising_chain",
    "gen_spin_glass",
    "gen_three_body",
    "save_instance",
    "load_instance",
    "canonical_bytes",
    "SIDON_COEFS",
]

# Coefficient alphabet for the three-body generator: a Sidon set scaled
# into [-1, 1], so that small sums of coefficients collide as rarely as
# possible and the low-energy landscape stays non-degenerate.
SIDON_COEFS = (
    -1.0, -19.0 / 28.0, -13.0 / 28.0, -8.0 / 28.0,
    8.0 / 28.0, 13.0 / 28.0, 19.0 / 28.0, 1.0,
)


def bit_to_spin(bit: int) -> int:
    """Project-wide map from a classical bit to an Ising spin."""
    return 1 - 2 * bit


def spins_from_bits(bits: np.ndarray) -> np.ndarray:
    """Vectorized bit -> spin map, int8 output."""
    return (1 - 2 * bits.astype(np.int8)).astype(np.int8)


def _n_bytes(n_qubits: int) -> int:
    return (n_qubits + 7) // 8


def text_to_packed(s: str, n_qubits: int) -> np.ndarray:
    """Parse '0'/'1' text (qubit 0 leftmost) into packed little-endian bytes."""
    if len(s) != n_qubits:
        raise ValueError(f"bitstring length {len(s)} != n_qubits {n_qubits}")
    bits = np.empty(n_qubits, dtype=np.uint8)
    for i, ch in enumerate(s):
        if ch == "0":
            bits[i] = 0
        elif ch == "1":
            bits[i] = 1
        else:
            raise ValueError(f"bitstring may contain only 0/1, got {ch!r} at {i}")
    return np.packbits(bits, bitorder="little")


def packed_to_text(row: np.ndarray, n_qubits: int) -> str:
    bits = np.unpackbits(row, count=n_qubits, bitorder="little")
    return "".join("1" if b else "0" for b in bits)


def pack_rows(bits: np.ndarray) -> np.ndarray:
    """Pack a (M, n_qubits) bit matrix into (M, n_bytes) rows."""
    return np.packbits(bits.astype(np.uint8), axis=1, bitorder="little")


def unpack_rows(rows: np.ndarray, n_qubits: int) -> np.ndarray:
    """Inverse of pack_rows, returning a (M, n_qubits) uint8 bit matrix."""
    return np.unpackbits(rows, axis=1, count=n_qubits, bitorder="little")


def indices_to_packed(indices: np.ndarray, n_qubits: int) -> np.ndarray:
    """Computational-basis indices (bit q of the integer = qubit q) to rows."""
    nb = _n_bytes(n_qubits)
    idx = np.asarray(indices, dtype=np.uint64)
    shifts = (8 * np.arange(nb, dtype=np.uint64))[None, :]
    return ((idx[:, None] >> shifts) & np.uint64(0xFF)).astype(np.uint8)


def packed_to_indices(rows: np.ndarray, n_qubits: int) -> np.ndarray:
    """Inverse of indices_to_packed; only defined when 2^n fits an int64."""
    if n_qubits > 62:
        raise ValueError("packed_to_indices needs n_qubits <= 62")
    nb = _n_bytes(n_qubits)
    weights = (np.uint64(1) << (8 * np.arange(nb, dtype=np.uint64))).astype(np.uint64)
    return (rows.astype(np.uint64) @ weights).astype(np.int64)


@dataclass(frozen=True)
class DiagonalHamiltonian:
    """Z-diagonal Hamiltonian as merged (support, coefficient) terms.

    Terms are canonicalized on construction: each support is a strictly
    increasing index tuple, duplicate supports are merged by summing
    coefficients, exact zeros are dropped, and the term list is sorted
    by (order, support).  Two instances with the same physics therefore
    compare equal and serialize identically.
    """

    n_qubits: int
    terms: tuple[tuple[tuple[int, ...], float], ...]
    metadata: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        merged: dict[tuple[int, ...], float] = {}
        for support, coef in self.terms:
            sup = tuple(int(i) for i in support)
            if len(set(sup)) != len(sup):
                raise ValueError(f"duplicate qubit index within support {sup}")
            for i in sup:
                if not 0 <= i < self.n_qubits:
                    raise ValueError(f"support index {i} outside register of {self.n_qubits}")
            sup = tuple(sorted(sup))
            merged[sup] = merged.get(sup, 0.0) + float(coef)
        canon = tuple(
            (sup, c)
            for sup, c in sorted(merged.items(), key=lambda kv: (len(kv[0]), kv[0]))
            if c != 0.0
        )
        object.__setattr__(self, "terms", canon)

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def order_counts(self) -> dict[int, int]:
        """How many terms act on 1, 2, 3, ... qubits."""
        counts: dict[int, int] = {}
        for sup, _ in self.terms:
            counts[len(sup)] = counts.get(len(sup), 0) + 1
        return counts

    def energy(self, s: str) -> float:
        """Energy of one bitstring given as 0/1 text."""
        row = text_to_packed(s, self.n_qubits)
        return float(self.energies_packed(row[None, :])[0])

    def energies_packed(self, rows: np.ndarray) -> np.ndarray:
        """Energies of packed state rows, shape (M, n_bytes) -> (M,).

        Accumulates in canonical term order so repeated evaluations of
        the same state are bit-identical.
        """
        spins = spins_from_bits(unpack_rows(rows, self.n_qubits))
        out = np.zeros(rows.shape[0], dtype=np.float64)
        for sup, coef in self.terms:
            prod = spins[:, sup[0]].astype(np.float64)
            for i in sup[1:]:
                prod = prod * spins[:, i]
            out += coef * prod
        return out

    def to_pauli_sum(self) -> PauliSum:
        """The same operator as a sum of Z words."""
        out = PauliSum(self.n_qubits)
        for sup, coef in self.terms:
            z_mask = 0
            for i in sup:
                z_mask |= 1 << i
            out._add_term(0, z_mask, complex(coef))
        return out

    def chain_fields_couplings(self) -> tuple[np.ndarray, np.ndarray]:
        """Decompose a ring-chain instance into (h, J) vectors.

        h[i] is the field on qubit i; J[i] couples (i, i+1 mod N), so an
        open chain simply has J[N-1] = 0.  Raises if any term is not a
        field or a nearest-neighbour ring bond.
        """
        n = self.n_qubits
        h = np.zeros(n)
        j = np.zeros(n)
        for sup, coef in self.terms:
            if len(sup) == 1:
                h[sup[0]] += coef
            elif len(sup) == 2:
                a, b = sup
                if b == (a + 1) % n:
                    j[a] += coef
                elif a == (b + 1) % n:
                    j[b] += coef
                else:
                    raise ValueError(f"term on {sup} is not a nearest-neighbour bond")
            else:
                raise ValueError(f"term of order {len(sup)} is not chain-like")
        return h, j


def gen_ising_chain(
    n: int, seed: int, open_boundary: bool = False
) -> DiagonalHamiltonian:
    """Random-field, random-bond Ising ring (or open chain).

    Fields h_i and couplings J_i are drawn uniformly from [-1, 1], fields
    first (i ascending) then bonds (i, i+1 mod n) in i order, so an open
    chain shares all its coefficients with the ring of the same seed
    except the dropped wrap bond.
    """
    if n < 2:
        raise ValueError("chain needs at least 2 sites")
    rng = _rng(seed)
    terms: list[tuple[tuple[int, ...], float]] = []
    for i in range(n):
        terms.append(((i,), float(rng.uniform(-1.0, 1.0))))
    n_bonds = n - 1 if open_boundary else n
    for i in range(n_bonds):
        terms.append((tuple(sorted((i, (i + 1) % n))), float(rng.uniform(-1.0, 1.0))))
    meta = {
        "kind": "ising_chain",
        "seed": seed,
        "open_boundary": open_boundary,
    }
    return DiagonalHamiltonian(n, tuple(terms), meta)


def gen_spin_glass(n: int, seed: int, e0: float = 1.0) -> DiagonalHamiltonian:
    """Fully connected spin glass: all fields and all pair couplings.

    Coefficients are uniform in [-e0, e0], fields first then pairs in
    lexicographic (i, j) order.
    """
    if n < 2:
        raise ValueError("spin glass needs at least 2 sites")
    if e0 <= 0:
        raise ValueError("e0 must be positive")
    rng = _rng(seed)
    terms: list[tuple[tuple[int, ...], float]] = []
    for i in range(n):
        terms.append(((i,), float(rng.uniform(-e0, e0))))
    for i in range(n):
        for jj in range(i + 1, n):
            terms.append(((i, jj), float(rng.uniform(-e0, e0))))
    meta = {"kind": "spin_glass", "seed": seed, "e0": e0}
    return DiagonalHamiltonian(n, tuple(terms), meta)


def gen_three_body(
    n: int, n_pairs: int, n_triples: int, seed: int
) -> DiagonalHamiltonian:
    """Random hypergraph with fields on every site plus two- and
    three-body terms on distinct supports, coefficients drawn from the
    Sidon alphabet.

    Supports are rejection-sampled without replacement, so the instance
    is a deterministic function of (n, n_pairs, n_triples, seed).
    """
    if n < 3:
        raise ValueError("three-body instances need at least 3 sites")
    max_pairs = n * (n - 1) // 2
    max_triples = n * (n - 1) * (n - 2) // 6
    if not 0 <= n_pairs <= max_pairs:
        raise ValueError(f"n_pairs must lie in [0, {max_pairs}]")
    if not 0 <= n_triples <= max_triples:
        raise ValueError(f"n_triples must lie in [0, {max_triples}]")
    rng = _rng(seed)
    coefs = np.asarray(SIDON_COEFS)

    def draw_coef() -> float:
        return float(coefs[rng.integers(0, len(coefs))])

    terms: list[tuple[tuple[int, ...], float]] = []
    for i in range(n):
        terms.append(((i,), draw_coef()))
    seen: set[tuple[int, ...]] = set()
    for size, count in ((2, n_pairs), (3, n_triples)):
        got = 0
        while got < count:
            sup = tuple(sorted(int(q) for q in rng.choice(n, size=size, replace=False)))
            if sup in seen:
                continue
            seen.add(sup)
            terms.append((sup, draw_coef()))
            got += 1
    meta = {"kind": "three_body", "seed": seed, "n_pairs": n_pairs, "n_triples": n_triples}
    return DiagonalHamiltonian(n, tuple(terms), meta)


def _rng(seed: int) -> np.random.Generator:
    from .rng import seeded_rng

    return seeded_rng(seed)


def save_instance(h: DiagonalHamiltonian, path: str) -> None:
    """Write the instance as JSON.

    Coefficients are serialized with Python's shortest round-trip float
    repr, so load(save(h)) reproduces every coefficient bit-for-bit.
    """
    doc: dict[str, Any] = {
        "n_qubits": h.n_qubits,
        "terms": [{"support": list(sup), "coef": coef} for sup, coef in h.terms],
    }
    if h.metadata:
        doc["metadata"] = h.metadata
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def canonical_bytes(h: DiagonalHamiltonian) -> bytes:
    """Canonical serialization used for fixture hashing."""
    doc = {
        "n_qubits": h.n_qubits,
        "terms": [{"support": list(sup), "coef": coef} for sup, coef in h.terms],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


def load_instance(path: str) -> DiagonalHamiltonian:
    """Read an instance JSON file, validating structure and indices."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(
                f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
            ) from None
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: top level must be an object")
    try:
        n = int(doc["n_qubits"])
        raw_terms = doc["terms"]
    except KeyError as exc:
        raise ValueError(f"{path}: missing required key {exc.args[0]!r}") from None
    if not isinstance(raw_terms, list):
        raise ValueError(f"{path}: 'terms' must be a list")
    terms = []
    for k, t in enumerate(raw_terms):
        if not isinstance(t, dict) or "support" not in t or "coef" not in t:
            raise ValueError(f"{path}: term {k} must be an object with 'support' and 'coef'")
        terms.append((tuple(t["support"]), float(t["coef"])))
    meta = doc.get("metadata", {})
    if not isinstance(meta, dict):
        raise ValueError(f"{path}: 'metadata' must be an object")
    try:
        return DiagonalHamiltonian(n, tuple(terms), dict(meta))
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
