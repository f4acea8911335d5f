"""Symbolic Pauli-string algebra on bit masks.

A Pauli word on ``n_qubits`` qubits is stored as a pair of integer bit
masks ``(x_mask, z_mask)`` together with a complex coefficient.  The
operator represented is

    coef * prod_q  X_q^{x_q} Z_q^{z_q}

with the product over qubits.  A qubit whose x and z bits are both set
carries ``X Z = -i Y``, so the stored coefficient absorbs the phase that
relates the mask form to the conventional I/X/Y/Z letters.  Keeping the
phase in the coefficient makes multiplication a pure mask XOR with a
sign, which is exact in integer arithmetic.

Masks are plain Python integers, so there is no cap on the qubit count.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "PauliString",
    "PauliSum",
    "multiply",
    "commutator",
    "hs_inner",
    "PRUNE_THRESHOLD",
]

# Coefficients with magnitude at or below this are dropped from sums.
PRUNE_THRESHOLD = 1e-14

_LETTER_TO_MASKS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_MASKS_TO_LETTER = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}


@dataclass(frozen=True)
class PauliString:
    """One Pauli word: ``coef * prod_q X^{x_q} Z^{z_q}``."""

    n_qubits: int
    x_mask: int
    z_mask: int
    coef: complex = 1.0 + 0.0j

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        limit = 1 << self.n_qubits
        if not (0 <= self.x_mask < limit and 0 <= self.z_mask < limit):
            raise ValueError("mask has bits outside the qubit register")
        object.__setattr__(self, "coef", complex(self.coef))

    @classmethod
    def from_label(cls, label: str, n_qubits: int, coef: complex = 1.0) -> PauliString:
        """Build from a letter form such as ``"Y0 Z3"``.

        The label lists single-qubit letters with qubit indices; omitted
        qubits are identity.  The coefficient refers to the literal
        I/X/Y/Z word, so ``from_label("Y0", 1)`` really is Y on qubit 0.
        """
        x_mask = 0
        z_mask = 0
        n_y = 0
        seen: set[int] = set()
        for token in label.split():
            letter, idx_text = token[0].upper(), token[1:]
            if letter not in _LETTER_TO_MASKS:
                raise ValueError(f"unknown Pauli letter in token {token!r}")
            try:
                idx = int(idx_text)
            except ValueError:
                raise ValueError(f"bad qubit index in token {token!r}") from None
            if not 0 <= idx < n_qubits:
                raise ValueError(f"qubit index {idx} outside register of {n_qubits}")
            if idx in seen:
                raise ValueError(f"qubit {idx} appears twice in label {label!r}")
            seen.add(idx)
            xb, zb = _LETTER_TO_MASKS[letter]
            x_mask |= xb << idx
            z_mask |= zb << idx
            if letter == "Y":
                n_y += 1
        # Y = i X Z, so each literal Y contributes a factor i to the stored
        # coefficient of the X^x Z^z word.
        return cls(n_qubits, x_mask, z_mask, complex(coef) * 1j**n_y)

    @property
    def n_y(self) -> int:
        """Number of qubits carrying both an x and a z bit."""
        return (self.x_mask & self.z_mask).bit_count()

    @property
    def letter_coef(self) -> complex:
        """Coefficient of the literal I/X/Y/Z word this string represents."""
        return self.coef * (-1j) ** self.n_y

    def label(self) -> str:
        """Letter form without the coefficient, e.g. ``"Y0 Z3"``."""
        parts = []
        for q in range(self.n_qubits):
            key = ((self.x_mask >> q) & 1, (self.z_mask >> q) & 1)
            if key != (0, 0):
                parts.append(f"{_MASKS_TO_LETTER[key]}{q}")
        return " ".join(parts) if parts else "I"

    def weight(self) -> int:
        """Number of non-identity qubits."""
        return (self.x_mask | self.z_mask).bit_count()

    def __repr__(self) -> str:
        return f"PauliString({self.letter_coef!r} * {self.label()!r}, n={self.n_qubits})"


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Operator product ``a @ b`` with the exact sign.

    In mask form (X^{xa} Z^{za})(X^{xb} Z^{zb}) picks up one minus sign
    for every Z of the left factor that hops over an X of the right
    factor, i.e. (-1)^{|za & xb|}, and the masks XOR.
    """
    if a.n_qubits != b.n_qubits:
        raise ValueError("qubit counts differ")
    sign = -1.0 if (a.z_mask & b.x_mask).bit_count() & 1 else 1.0
    return PauliString(
        a.n_qubits,
        a.x_mask ^ b.x_mask,
        a.z_mask ^ b.z_mask,
        a.coef * b.coef * sign,
    )


def _strings_commute(a: PauliString, b: PauliString) -> bool:
    """Symplectic commutation test, coefficient-independent."""
    ab = (a.z_mask & b.x_mask).bit_count()
    ba = (b.z_mask & a.x_mask).bit_count()
    return ((ab ^ ba) & 1) == 0


class PauliSum:
    """Linear combination of Pauli words, keyed by ``(x_mask, z_mask)``.

    Terms whose coefficient magnitude falls to ``prune`` or below are
    dropped so commutator cascades cannot accumulate dead weight.
    """

    __slots__ = ("n_qubits", "_terms", "prune")

    def __init__(
        self,
        n_qubits: int,
        terms: dict[tuple[int, int], complex] | None = None,
        prune: float = PRUNE_THRESHOLD,
    ):
        if n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        self.n_qubits = n_qubits
        self.prune = prune
        self._terms: dict[tuple[int, int], complex] = {}
        if terms:
            for key, coef in terms.items():
                self._add_term(key[0], key[1], complex(coef))

    @classmethod
    def from_strings(cls, strings: list[PauliString], prune: float = PRUNE_THRESHOLD) -> PauliSum:
        if not strings:
            raise ValueError("need at least one string to infer the register size")
        out = cls(strings[0].n_qubits, prune=prune)
        for s in strings:
            out.add_string(s)
        return out

    def _add_term(self, x_mask: int, z_mask: int, coef: complex) -> None:
        key = (x_mask, z_mask)
        new = self._terms.get(key, 0j) + coef
        if abs(new) <= self.prune:
            self._terms.pop(key, None)
        else:
            self._terms[key] = new

    def add_string(self, s: PauliString) -> None:
        if s.n_qubits != self.n_qubits:
            raise ValueError("qubit counts differ")
        self._add_term(s.x_mask, s.z_mask, s.coef)

    def strings(self) -> list[PauliString]:
        """Terms as PauliStrings, sorted by mask pair for determinism."""
        return [
            PauliString(self.n_qubits, x, z, c)
            for (x, z), c in sorted(self._terms.items())
        ]

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def copy(self) -> PauliSum:
        out = PauliSum(self.n_qubits, prune=self.prune)
        out._terms = dict(self._terms)
        return out

    def __add__(self, other: PauliSum) -> PauliSum:
        if self.n_qubits != other.n_qubits:
            raise ValueError("qubit counts differ")
        out = self.copy()
        for (x, z), c in other._terms.items():
            out._add_term(x, z, c)
        return out

    def __sub__(self, other: PauliSum) -> PauliSum:
        return self + (other * -1.0)

    def __mul__(self, scalar: complex) -> PauliSum:
        out = PauliSum(self.n_qubits, prune=self.prune)
        for (x, z), c in self._terms.items():
            out._add_term(x, z, c * scalar)
        return out

    __rmul__ = __mul__

    def __matmul__(self, other: PauliSum) -> PauliSum:
        """Operator product, distributing over all term pairs."""
        if self.n_qubits != other.n_qubits:
            raise ValueError("qubit counts differ")
        out = PauliSum(self.n_qubits, prune=self.prune)
        for (xa, za), ca in self._terms.items():
            for (xb, zb), cb in other._terms.items():
                sign = -1.0 if (za & xb).bit_count() & 1 else 1.0
                out._add_term(xa ^ xb, za ^ zb, ca * cb * sign)
        return out

    def __repr__(self) -> str:
        return f"PauliSum(n={self.n_qubits}, terms={len(self._terms)})"


def commutator(a: PauliSum, b: PauliSum) -> PauliSum:
    """[a, b] = ab - ba, termwise.

    For a word pair the two orderings share the same mask XOR and differ
    only in sign, so each pair contributes either zero (symplectically
    commuting) or twice the one-sided product.
    """
    if a.n_qubits != b.n_qubits:
        raise ValueError("qubit counts differ")
    out = PauliSum(a.n_qubits, prune=min(a.prune, b.prune))
    for (xa, za), ca in a.items():
        for (xb, zb), cb in b.items():
            s_ab = -1.0 if (za & xb).bit_count() & 1 else 1.0
            s_ba = -1.0 if (zb & xa).bit_count() & 1 else 1.0
            if s_ab == s_ba:
                continue
            out._add_term(xa ^ xb, za ^ zb, ca * cb * (s_ab - s_ba))
    return out


def hs_inner(a: PauliSum, b: PauliSum) -> complex:
    """Normalized Hilbert-Schmidt inner product Tr[a^dag b] / 2^N.

    Pauli words are trace-orthonormal under this product, so only
    matching mask pairs contribute, each as conj(coef_a) * coef_b.
    """
    if a.n_qubits != b.n_qubits:
        raise ValueError("qubit counts differ")
    small, big = (a, b) if len(a) <= len(b) else (b, a)
    total = 0j
    for key, c_small in small.items():
        c_big = big._terms.get(key)
        if c_big is None:
            continue
        if small is a:
            total += c_small.conjugate() * c_big
        else:
            total += c_big.conjugate() * c_small
    return total
