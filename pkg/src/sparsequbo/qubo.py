"""Binary sparse coding objective and its QUBO form.

The sparse coding energy of a binary code ``a`` for signal ``x`` under
dictionary ``D`` is::

    E(a) = 1/2 ||x - D a||^2 + lam * sum(a)

Expanding the square over binary ``a`` (where a_i**2 == a_i) gives a QUBO
with linear terms ``h`` and strictly upper-triangular couplings ``q`` plus a
constant ``offset = 1/2 x.x`` that does not depend on ``a``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "ShapeError",
    "QuboInstance",
    "build_qubo",
    "qubo_energy",
    "objective_energy",
    "reconstruct",
    "sparsity",
    "as_binary_state",
    "dump_qubo",
    "load_qubo",
    "format_qubo",
    "parse_qubo",
]


class ShapeError(ValueError):
    """Raised when array dimensions do not line up."""


def _as_dictionary(d) -> np.ndarray:
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] < 1 or d.shape[1] < 1:
        raise ShapeError(f"dictionary must be a non-empty 2-D array, got shape {d.shape}")
    if not np.all(np.isfinite(d)):
        raise ValueError("dictionary contains non-finite entries")
    return d


def _as_signal(x, m: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != m:
        raise ShapeError(f"signal must have length {m}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("signal contains non-finite entries")
    return x


def as_binary_state(a, n: int | None = None) -> np.ndarray:
    """Validate ``a`` as a 0/1 vector (optionally of length ``n``) and return it as int8."""
    arr = np.asarray(a)
    if arr.ndim != 1:
        raise ShapeError(f"binary state must be 1-D, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ShapeError(f"binary state must have length {n}, got {arr.shape[0]}")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("binary state entries must be exactly 0 or 1")
    return arr.astype(np.int8)


def sparsity(a) -> int:
    """Number of active variables; L0 and L1 norms coincide on binary vectors."""
    return int(np.sum(as_binary_state(a)))


@dataclass(frozen=True, eq=False)
class QuboInstance:
    """QUBO with linear coefficients ``h`` and strictly upper-triangular couplings ``q``.

    ``q`` is stored dense (n x n) with zeros on and below the diagonal.
    ``offset`` is the constant dropped by the QUBO form; it is never included
    by :func:`qubo_energy`.
    """

    h: np.ndarray
    q: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        h = np.array(self.h, dtype=np.float64)
        if h.ndim != 1 or h.shape[0] < 1:
            raise ShapeError(f"h must be a non-empty vector, got shape {h.shape}")
        n = h.shape[0]
        q = np.array(self.q, dtype=np.float64)
        if q.size == 0 and n == 1:
            q = np.zeros((1, 1))
        if q.shape != (n, n):
            raise ShapeError(f"q must have shape {(n, n)}, got {q.shape}")
        if np.any(np.tril(q) != 0.0):
            raise ValueError("q must be strictly upper triangular")
        if not (np.all(np.isfinite(h)) and np.all(np.isfinite(q)) and np.isfinite(self.offset)):
            raise ValueError("QUBO coefficients must be finite")
        h.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def n(self) -> int:
        return self.h.shape[0]

    @classmethod
    def from_dicts(cls, h, couplings=None, offset=0.0) -> "QuboInstance":
        """Build from a sequence of linear terms and a ``{(i, j): value}`` mapping.

        Pairs given with i > j are folded onto (j, i); repeated pairs add.
        """
        h = np.asarray(h, dtype=np.float64)
        n = h.shape[0]
        q = np.zeros((n, n))
        for (i, j), v in (couplings or {}).items():
            if i == j:
                raise ValueError(f"diagonal coupling ({i}, {j}) belongs in h")
            i, j = min(i, j), max(i, j)
            q[i, j] += v
        return cls(h, q, offset)

    def symmetric(self) -> np.ndarray:
        """Full symmetric coupling matrix with zero diagonal."""
        return self.q + self.q.T

    def couplings(self) -> dict[tuple[int, int], float]:
        ii, jj = np.nonzero(self.q)
        return {(int(i), int(j)): float(self.q[i, j]) for i, j in zip(ii, jj)}

    def energies(self, states) -> np.ndarray:
        """Vectorised :func:`qubo_energy` over the rows of ``states``."""
        s = np.asarray(states, dtype=np.float64)
        if s.ndim != 2 or s.shape[1] != self.n:
            raise ShapeError(f"states must have shape (k, {self.n}), got {s.shape}")
        return s @ self.h + np.einsum("ki,ij,kj->k", s, self.q, s)

    def __eq__(self, other):
        if not isinstance(other, QuboInstance):
            return NotImplemented
        return (
            self.offset == other.offset
            and np.array_equal(self.h, other.h)
            and np.array_equal(self.q, other.q)
        )

    __hash__ = None


def build_qubo(d, x, penalty: float) -> QuboInstance:
    """QUBO whose energy plus offset equals :func:`objective_energy` for every binary code.

    h_i = -D_i.x + lam + 1/2 D_i.D_i and q_ij = D_i.D_j for i < j. The
    off-diagonal term carries no factor 1/2: both (i, j) and (j, i) of the
    symmetric Gram matrix fold into the single stored pair.
    """
    d = _as_dictionary(d)
    x = _as_signal(x, d.shape[0])
    if not penalty >= 0:
        raise ValueError(f"sparsity penalty must be >= 0, got {penalty}")
    gram = d.T @ d
    h = -(d.T @ x) + penalty + 0.5 * np.diag(gram)
    q = np.triu(gram, k=1)
    return QuboInstance(h, q, 0.5 * float(x @ x))


def qubo_energy(inst: QuboInstance, a) -> float:
    """Sum of h_i a_i plus sum over i<j of q_ij a_i a_j; the offset is not added."""
    a = as_binary_state(a, inst.n).astype(np.float64)
    return float(a @ inst.h + a @ inst.q @ a)


def objective_energy(d, x, penalty: float, a) -> float:
    """1/2 ||x - D a||^2 + lam * sum(a)."""
    d = _as_dictionary(d)
    x = _as_signal(x, d.shape[0])
    a = as_binary_state(a, d.shape[1])
    r = x - d @ a
    return float(0.5 * (r @ r) + penalty * a.sum())


def reconstruct(d, a) -> np.ndarray:
    d = _as_dictionary(d)
    a = as_binary_state(a, d.shape[1])
    return d @ a


# ---------------------------------------------------------------------------
# plain-text serialisation

def format_qubo(inst: QuboInstance) -> str:
    lines = [f"n {inst.n} offset {inst.offset!r}"]
    lines += [f"h {i} {float(v)!r}" for i, v in enumerate(inst.h)]
    ii, jj = np.nonzero(inst.q)
    lines += [f"q {i} {j} {float(inst.q[i, j])!r}" for i, j in zip(ii, jj)]
    return "\n".join(lines) + "\n"


def parse_qubo(text: str) -> QuboInstance:
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not rows or len(rows[0]) != 4 or rows[0][0] != "n" or rows[0][2] != "offset":
        raise ValueError("QUBO text must start with 'n <n> offset <offset>'")
    n = int(rows[0][1])
    offset = float(rows[0][3])
    h = np.zeros(n)
    q = np.zeros((n, n))
    for lineno, row in enumerate(rows[1:], start=2):
        if row[0] == "h" and len(row) == 3:
            h[int(row[1])] = float(row[2])
        elif row[0] == "q" and len(row) == 4:
            i, j = int(row[1]), int(row[2])
            if not i < j:
                raise ValueError(f"line {lineno}: coupling indices must satisfy i < j")
            q[i, j] = float(row[3])
        else:
            raise ValueError(f"line {lineno}: unrecognised record {' '.join(row)!r}")
    return QuboInstance(h, q, offset)


def dump_qubo(inst: QuboInstance, path) -> None:
    Path(path).write_text(format_qubo(inst))


def load_qubo(path) -> QuboInstance:
    return parse_qubo(Path(path).read_text())
