"""Sample pools: multiset records of every visited bitstring.

A pool stores one row per distinct state in order of first arrival,
with its exact energy, how many times it was recorded, and the running
sample count at which it first appeared.  Recording is batch-oriented
and vectorized; energies of newly seen states are always recomputed
from the Hamiltonian, never trusted from a sampler, so the stored value
equals ``h.energy(bitstring)`` bit for bit.

CSV export columns are ``bitstring,energy,multiplicity,
first_arrival_index`` with a mandatory header, bitstrings as 0/1 text
with qubit 0 leftmost, and first_arrival_index the dense arrival rank.
"""

from __future__ import annotations

import csv

import numpy as np

from .hamiltonian import DiagonalHamiltonian, packed_to_text, text_to_packed

__all__ = ["SamplePool"]


class SamplePool:
    """Arrival-ordered multiset of sampled states for one instance."""

    def __init__(self, h: DiagonalHamiltonian):
        self.h = h
        self.n_bytes = (h.n_qubits + 7) // 8
        self._index: dict[bytes, int] = {}
        self._rows = np.empty((0, self.n_bytes), dtype=np.uint8)
        self._energies = np.empty(0, dtype=np.float64)
        self._mult = np.empty(0, dtype=np.int64)
        self._first_seen = np.empty(0, dtype=np.int64)
        self.total_samples = 0

    # -- views ---------------------------------------------------------

    @property
    def distinct_count(self) -> int:
        return len(self._index)

    @property
    def energies(self) -> np.ndarray:
        """Energies of distinct states in first-arrival order."""
        return self._energies

    @property
    def multiplicities(self) -> np.ndarray:
        return self._mult

    @property
    def first_seen(self) -> np.ndarray:
        """Running sample count just before each state first arrived."""
        return self._first_seen

    @property
    def rows(self) -> np.ndarray:
        """Packed distinct states, one row each, first-arrival order."""
        return self._rows

    def bitstrings(self) -> list[str]:
        n = self.h.n_qubits
        return [packed_to_text(r, n) for r in self._rows]

    def __contains__(self, bitstring: str) -> bool:
        key = text_to_packed(bitstring, self.h.n_qubits).tobytes()
        return key in self._index

    def entry(self, bitstring: str) -> dict:
        key = text_to_packed(bitstring, self.h.n_qubits).tobytes()
        i = self._index[key]
        return {
            "energy": float(self._energies[i]),
            "multiplicity": int(self._mult[i]),
            "first_arrival_index": i,
        }

    def min_energy(self) -> float:
        if not self._index:
            raise ValueError("pool is empty")
        return float(self._energies.min())

    def lowest(self, k: int) -> np.ndarray:
        """Arrival-rank indices of the k lowest-energy distinct states.

        Ties are broken by arrival order via a stable sort.
        """
        order = np.argsort(self._energies, kind="stable")
        return order[:k]

    # -- recording -----------------------------------------------------

    def record_batch(self, rows: np.ndarray) -> None:
        """Record M packed states (shape (M, n_bytes)) in row order."""
        rows = np.ascontiguousarray(rows, dtype=np.uint8)
        if rows.ndim != 2 or rows.shape[1] != self.n_bytes:
            raise ValueError(f"rows must have shape (M, {self.n_bytes})")
        m = rows.shape[0]
        if m == 0:
            return
        void = rows.view(np.dtype((np.void, self.n_bytes))).ravel()
        uniq, first_idx, counts = np.unique(void, return_index=True, return_counts=True)
        batch_order = np.argsort(first_idx, kind="stable")

        new_rows = []
        new_first = []
        for b in batch_order:
            key = uniq[b].tobytes()
            at = self._index.get(key)
            if at is None:
                self._index[key] = len(self._index)
                new_rows.append(rows[first_idx[b]])
                new_first.append(self.total_samples + int(first_idx[b]))

        if new_rows:
            block = np.stack(new_rows)
            self._rows = np.concatenate([self._rows, block])
            self._energies = np.concatenate(
                [self._energies, self.h.energies_packed(block)]
            )
            self._mult = np.concatenate(
                [self._mult, np.zeros(len(new_rows), dtype=np.int64)]
            )
            self._first_seen = np.concatenate(
                [self._first_seen, np.asarray(new_first, dtype=np.int64)]
            )

        for b in range(len(uniq)):
            i = self._index[uniq[b].tobytes()]
            self._mult[i] += int(counts[b])
        self.total_samples += m

    def record_text(self, bitstring: str) -> None:
        self.record_batch(text_to_packed(bitstring, self.h.n_qubits)[None, :])

    def copy(self) -> "SamplePool":
        out = SamplePool(self.h)
        out._index = dict(self._index)
        out._rows = self._rows.copy()
        out._energies = self._energies.copy()
        out._mult = self._mult.copy()
        out._first_seen = self._first_seen.copy()
        out.total_samples = self.total_samples
        return out

    def merge_from(self, other: "SamplePool") -> None:
        """Fold another pool of the same instance into this one.

        States arrive in the other pool's arrival order; multiplicities
        add.  Used to union per-replica or per-iteration pools.
        """
        if other.h.n_qubits != self.h.n_qubits:
            raise ValueError("pools belong to different register sizes")
        for i in range(other.distinct_count):
            key = other._rows[i].tobytes()
            at = self._index.get(key)
            if at is None:
                at = len(self._index)
                self._index[key] = at
                self._rows = np.concatenate([self._rows, other._rows[i : i + 1]])
                self._energies = np.append(self._energies, other._energies[i])
                self._mult = np.append(self._mult, 0)
                self._first_seen = np.append(
                    self._first_seen, self.total_samples + other._first_seen[i]
                )
            self._mult[at] += other._mult[i]
        self.total_samples += other.total_samples

    # -- IO ------------------------------------------------------------

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["bitstring", "energy", "multiplicity", "first_arrival_index"])
            n = self.h.n_qubits
            for i in range(self.distinct_count):
                w.writerow(
                    [
                        packed_to_text(self._rows[i], n),
                        repr(float(self._energies[i])),
                        int(self._mult[i]),
                        i,
                    ]
                )

    @classmethod
    def from_csv(cls, path: str, h: DiagonalHamiltonian) -> "SamplePool":
        """Load a pool export, recomputing and checking every energy."""
        pool = cls(h)
        with open(path, newline="", encoding="utf-8") as fh:
            r = csv.reader(fh)
            header = next(r, None)
            if header != ["bitstring", "energy", "multiplicity", "first_arrival_index"]:
                raise ValueError(f"{path}: missing or wrong pool CSV header")
            for lineno, rec in enumerate(r, start=2):
                if not rec:
                    continue
                if len(rec) != 4:
                    raise ValueError(f"{path}:{lineno}: expected 4 columns")
                text, e_text, mult_text, _rank = rec
                row = text_to_packed(text, h.n_qubits)
                energy = float(h.energies_packed(row[None, :])[0])
                if abs(energy - float(e_text)) > 1e-9:
                    raise ValueError(
                        f"{path}:{lineno}: stored energy {e_text} does not match "
                        f"instance energy {energy!r}"
                    )
                mult = int(mult_text)
                if mult < 1:
                    raise ValueError(f"{path}:{lineno}: multiplicity must be >= 1")
                key = row.tobytes()
                if key in pool._index:
                    raise ValueError(f"{path}:{lineno}: duplicate bitstring {text}")
                at = len(pool._index)
                pool._index[key] = at
                pool._rows = np.concatenate([pool._rows, row[None, :]])
                pool._energies = np.append(pool._energies, energy)
                pool._mult = np.append(pool._mult, mult)
                pool._first_seen = np.append(pool._first_seen, pool.total_samples)
                pool.total_samples += mult
        return pool
