"""Eigendecomposition of real symmetric matrices and band-structure helpers.

The solver is the classic two-stage scheme: Householder reduction to
tridiagonal form, then implicit-shift QL iterations with the rotations
accumulated into the Householder basis.  Output is canonicalised so that
repeated calls on the same matrix return the same vectors:

* eigenvalues ascending;
* inside a degenerate cluster the vectors are rebuilt by Gram-Schmidt on the
  columns of the cluster projector, taken in basis order;
* each vector's first component above ``1e-6`` in magnitude is positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError, LabelError, NumericalError
from .model import SingleExcitationHamiltonian

MAX_QL_ITERATIONS = 30
DEGENERACY_RTOL = 1e-12
_SIGN_FLOOR = 1e-6
_GS_ACCEPT = 1e-3


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    source_dim: int
    basis: tuple[str, ...]
    name: str = "H"

    @cached_property
    def _index(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.basis)}

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise LabelError(f"unknown site label {label!r} in {self.name}") from None

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


def _householder_tridiagonal(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(d, e, Q)`` with ``Q.T @ a @ Q`` tridiagonal.

    ``d`` is the diagonal and ``e[i]`` the element coupling rows ``i`` and ``i+1``.
    """
    a = a.copy()
    n = a.shape[0]
    q = np.eye(n)
    for k in range(n - 2):
        x = a[k + 1:, k]
        tail = np.linalg.norm(x[1:])
        if tail == 0.0:
            continue
        alpha = -math.copysign(math.hypot(x[0], tail), x[0])
        v = x.copy()
        v[0] -= alpha
        v /= np.linalg.norm(v)
        a[k + 1:, k:] -= 2.0 * np.outer(v, v @ a[k + 1:, k:])
        a[:, k + 1:] -= 2.0 * np.outer(a[:, k + 1:] @ v, v)
        q[:, k + 1:] -= 2.0 * np.outer(q[:, k + 1:] @ v, v)
    d = np.diag(a).copy()
    e = np.append(np.diag(a, -1), 0.0) if n > 1 else np.zeros(1)
    return d, e, q


def _implicit_ql(d: np.ndarray, e: np.ndarray, z: np.ndarray, name: str) -> None:
    """Diagonalise the tridiagonal ``(d, e)`` in place, rotating columns of ``z``.

    Expects a matrix scaled to unit max-abs entry.
    """
    n = d.size
    eps = np.finfo(float).eps
    # absolute floor for couplings next to (near-)zero diagonals; inputs are unit-scaled
    floor = eps * eps
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd or abs(e[m]) <= floor:
                    break
                m += 1
            if m == l:
                break
            if it == MAX_QL_ITERATIONS:
                raise NumericalError(
                    f"QL iteration did not converge for eigenvalue {l} of {name} "
                    f"after {MAX_QL_ITERATIONS} sweeps")
            it += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            deflated = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                zi = z[:, i].copy()
                z[:, i] = c * zi - s * z[:, i + 1]
                z[:, i + 1] = s * zi + c * z[:, i + 1]
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0


def _canonical_cluster(v: np.ndarray) -> np.ndarray:
    """Basis-independent orthonormal frame for the span of the columns of ``v``."""
    m = v.shape[1]
    proj = v @ v.T
    frame = []
    for j in range(proj.shape[0]):
        u = proj[:, j].copy()
        for _ in range(2):
            for q in frame:
                u -= (q @ u) * q
        nu = np.linalg.norm(u)
        if nu >= _GS_ACCEPT:
            frame.append(u / nu)
            if len(frame) == m:
                return np.column_stack(frame)
    return v


def _fix_signs(v: np.ndarray) -> None:
    for k in range(v.shape[1]):
        col = v[:, k]
        big = np.flatnonzero(np.abs(col) > _SIGN_FLOOR)
        if big.size and col[big[0]] < 0:
            v[:, k] = -col


def diagonalize(h) -> SpectralDecomposition:
    """Eigendecomposition of a :class:`SingleExcitationHamiltonian` or a symmetric array.

    Raises:
        DomainError: non-finite or non-symmetric input.
        NumericalError: the QL iteration exceeds its sweep budget.
    """
    if isinstance(h, SingleExcitationHamiltonian):
        mat, basis, name = h.matrix, h.basis, h.name
    else:
        mat = np.asarray(h, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DomainError(f"expected a square matrix, got shape {mat.shape}")
        basis, name = tuple(str(i) for i in range(mat.shape[0])), "matrix"
    if not np.all(np.isfinite(mat)):
        raise DomainError(f"{name} has non-finite entries")
    scale = np.linalg.norm(mat)
    if np.max(np.abs(mat - mat.T), initial=0.0) > 1e-14 * max(scale, 1.0):
        raise DomainError(f"{name} is not symmetric")
    n = mat.shape[0]

    # unit max-abs scaling keeps the convergence test clear of underflow
    amax = float(np.max(np.abs(mat), initial=0.0))
    unit = amax if amax > 0.0 else 1.0
    d, e, z = _householder_tridiagonal(mat / unit)
    _implicit_ql(d, e, z, name)
    d *= unit

    order = np.argsort(d, kind="stable")
    w = d[order]
    v = z[:, order]

    for lo, hi in degenerate_clusters(w, DEGENERACY_RTOL * scale):
        if hi - lo > 1:
            v[:, lo:hi] = _canonical_cluster(v[:, lo:hi])
    _fix_signs(v)
    w.setflags(write=False)
    v.setflags(write=False)
    return SpectralDecomposition(w, v, n, tuple(basis), name)


def chain_mode_energy(k_index: int, n_chain: int, hopping_j: float, field_h: float) -> float:
    """Energy ``-2h - 4J cos(2 pi q / N)`` of ring mode ``q``."""
    return -2.0 * field_h - 4.0 * hopping_j * math.cos(2.0 * math.pi * k_index / n_chain)


def ring_band(n_chain: int, hopping_j: float, field_h: float) -> np.ndarray:
    """All ring mode energies, indexed by ``q = 0..N-1``."""
    q = np.arange(n_chain)
    return -2.0 * field_h - 4.0 * hopping_j * np.cos(2.0 * np.pi * q / n_chain)


def level_spacings(n_chain: int) -> tuple[float, float]:
    """Typical ring level spacing in the parabolic and linear parts of the band.

    Values are in units of 4J; multiply by ``4 J`` for other units.
    """
    if n_chain < 2:
        raise DomainError("level spacings need N >= 2")
    return math.pi ** 2 / (2.0 * n_chain ** 2), 2.0 * math.pi / n_chain


def nearest_mode(energy: float, n_chain: int, hopping_j: float,
                 field_h: float) -> tuple[int, float, float]:
    """Ring mode closest in energy to ``energy``.

    Returns ``(q, eps_q, energy - eps_q)`` with ``q`` restricted to
    ``0..N/2`` (the ``q`` and ``N - q`` modes are degenerate).
    """
    band = ring_band(n_chain, hopping_j, field_h)[: n_chain // 2 + 1]
    q = int(np.argmin(np.abs(band - energy)))
    return q, float(band[q]), float(energy - band[q])


def degenerate_clusters(eigenvalues: np.ndarray, tol: float) -> list[tuple[int, int]]:
    """Half-open index ranges of consecutive eigenvalues closer than ``tol``."""
    out = []
    start = 0
    n = len(eigenvalues)
    for k in range(1, n + 1):
        if k == n or eigenvalues[k] - eigenvalues[k - 1] >= tol:
            out.append((start, k))
            start = k
    return out
