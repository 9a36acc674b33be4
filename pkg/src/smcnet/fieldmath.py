"""Prime-field arithmetic and Shamir secret sharing over GF(2^61 - 1).

Field elements are canonical Python ints in [0, PRIME). The Mersenne prime
2^61 - 1 keeps products inside native big-int fast paths while leaving far
more headroom than the 2^32 input bound needs, so real-valued sums never
wrap. Addition of two sharings is index-wise share addition, which is all
the summation protocol requires; no degree reduction is implemented.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import DuplicateIndex, IndexMismatch, InsufficientShares, InvalidThreshold

PRIME = 2**61 - 1

#: upper bound asserted on contributed inputs so plain-integer sums stay exact
MAX_INPUT = 2**32
#: upper bound on participant count (keeps n * MAX_INPUT far below PRIME)
MAX_PARTICIPANTS = 2**8


def check_element(value: int, prime: int = PRIME) -> int:
    """Validate that ``value`` is a canonical field element and return it."""
    if not isinstance(value, int) or isinstance(value, bool):
        raise TypeError(f"field element must be int, got {type(value).__name__}")
    if not 0 <= value < prime:
        raise ValueError(f"field element out of range [0, {prime}): {value}")
    return value


def f_add(a: int, b: int, prime: int = PRIME) -> int:
    """(a + b) mod prime."""
    return (a + b) % prime


def f_sub(a: int, b: int, prime: int = PRIME) -> int:
    """(a - b) mod prime."""
    return (a - b) % prime


def f_mul(a: int, b: int, prime: int = PRIME) -> int:
    """(a * b) mod prime."""
    return (a * b) % prime


def f_inv(a: int, prime: int = PRIME) -> int:
    """Multiplicative inverse via Fermat; undefined for zero."""
    if a % prime == 0:
        raise ZeroDivisionError("zero has no multiplicative inverse")
    return pow(a, prime - 2, prime)


def poly_eval(coeffs: list[int], x: int, prime: int = PRIME) -> int:
    """Evaluate a polynomial given as [c0, c1, ...] at x (Horner)."""
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % prime
    return acc


@dataclass(frozen=True)
class Share:
    """One Shamir share: the polynomial evaluated at a nonzero index.

    Index 0 is reserved for the secret itself and never appears as a share
    index. Within one sharing all indices are distinct.
    """

    index: int
    value: int

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"share index must be >= 1, got {self.index}")

    def to_wire(self) -> dict:
        """Wire form used inside framed messages: value as a decimal string."""
        return {"index": self.index, "value": str(self.value)}

    @classmethod
    def from_wire(cls, obj: dict) -> "Share":
        return cls(index=int(obj["index"]), value=int(obj["value"]))


def share_secret(secret: int, n: int, t: int,
                 rng: random.Random, prime: int = PRIME) -> list[Share]:
    """Split ``secret`` into n shares with threshold t.

    Samples a uniformly random polynomial q of degree t with q(0) = secret
    and returns its evaluations at 1..n. Any t+1 shares reconstruct the
    secret; any t or fewer are consistent with every candidate secret.

    Args:
        secret: field element to hide.
        n: number of shares (one per participant).
        t: threshold; 1 <= t < n.
        rng: randomness source; injectable so sharings are reproducible.
        prime: field modulus (tests use small primes for exhaustive checks).
    """
    check_element(secret, prime)
    if not 1 <= t < n:
        raise InvalidThreshold(f"need 1 <= t < n, got t={t}, n={n}")
    if n >= prime:
        raise InvalidThreshold(f"participant count {n} must be below the modulus")
    coeffs = [secret] + [rng.randrange(prime) for _ in range(t)]
    return [Share(i, poly_eval(coeffs, i, prime)) for i in range(1, n + 1)]


def default_threshold(n: int) -> int:
    """Passive-security default: t = floor((n - 1) / 2)."""
    return (n - 1) // 2


def interpolate_at(points: list[tuple[int, int]], x: int, prime: int = PRIME) -> int:
    """Lagrange interpolation: value at ``x`` of the unique polynomial
    of degree < len(points) through the given (x_i, y_i) points."""
    total = 0
    for j, (xj, yj) in enumerate(points):
        num, den = 1, 1
        for m, (xm, _) in enumerate(points):
            if m == j:
                continue
            num = (num * (x - xm)) % prime
            den = (den * (xj - xm)) % prime
        total = (total + yj * num * f_inv(den, prime)) % prime
    return total


def reconstruct(shares: list[Share], t: int, prime: int = PRIME) -> int:
    """Recover q(0) from at least t+1 shares with distinct indices."""
    if len(shares) < t + 1:
        raise InsufficientShares(f"need {t + 1} shares, got {len(shares)}")
    indices = [s.index for s in shares]
    if len(set(indices)) != len(indices):
        raise DuplicateIndex(f"duplicate share indices in {sorted(indices)}")
    # t+1 points determine the degree-t polynomial; extras are ignored
    points = [(s.index, s.value) for s in shares[: t + 1]]
    return interpolate_at(points, 0, prime)


def add_share_vectors(a: list[Share], b: list[Share], prime: int = PRIME) -> list[Share]:
    """Index-wise sum of two share vectors over the same index set.

    Reconstructing the output yields the sum of the two shared secrets.
    """
    by_index = {s.index: s.value for s in b}
    if {s.index for s in a} != set(by_index):
        raise IndexMismatch(
            f"index sets differ: {sorted(s.index for s in a)} vs {sorted(by_index)}")
    return [Share(s.index, f_add(s.value, by_index[s.index], prime)) for s in a]
