"""Router specifications and their single-excitation Hamiltonians.

Two geometries are supported:

* a periodic XX ring with a sender and ``n`` receivers attached by weak
  bonds of strength ``g`` (:class:`RingRouterSpec`);
* an open XX chain with two-spin sender/receiver blocks whose inner
  ("barrier") spin carries a strong local field (:class:`BarrierRouterSpec`).

In the one-excitation sector an ``M``-spin system reduces to an ``M x M``
real symmetric matrix.  Conventions used throughout the package:

* on-site energy of a spin in a local field ``h`` is ``-2 h``;
* an XX bond ``-J (sx sx + sy sy)`` becomes a hopping element ``-2 J``;
* a ring sender/receiver bond ``-(g/2)(sx sx + sy sy)`` becomes ``-g``.

With these signs the bare ring has the band ``-2h - 4J cos(2 pi q / N)`` and
an isolated barrier block has energies ``-h_X -+ sqrt(h_X**2 + 4 J**2)``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import LabelError, SpecificationError, UnitsError

UNITS = ("J", "4J")

SENDER = "S"


def chain_label(site: int) -> str:
    return f"C{site}"


def receiver_label(index: int) -> str:
    """Label of the ``index``-th receiver (1-based)."""
    return f"R{index}"


def block_labels(owner: str) -> tuple[str, str]:
    """Labels of the endpoint (A) and barrier (B) spins of a block."""
    return f"{owner}_A", f"{owner}_B"


@dataclass(frozen=True)
class Receiver:
    site: int
    field: float


@dataclass(frozen=True)
class Block:
    attach_site: int
    barrier_field: float


def _check_units(units: str) -> None:
    if units not in UNITS:
        raise SpecificationError(f"units must be one of {UNITS}, got {units!r}", key="units")


@dataclass(frozen=True)
class RingRouterSpec:
    """Weak-bond ring router.

    Sites are numbered ``1..n_chain``.  ``sender_site`` defaults to
    ``n_chain``, i.e. the ring origin ``l_S = 0``.  Receivers are indexed from
    1 in declaration order.
    """

    n_chain: int
    receivers: tuple[Receiver, ...]
    hopping_j: float = 0.25
    field_h: float = 0.0
    coupling_g: float = 0.01
    sender_site: int | None = None
    sender_field: float = 0.0
    units: str = "4J"

    def __post_init__(self):
        _check_units(self.units)
        if not isinstance(self.n_chain, (int, np.integer)) or self.n_chain < 2:
            raise SpecificationError(f"ring needs n_chain >= 2, got {self.n_chain}", key="n_chain")
        object.__setattr__(self, "receivers", tuple(
            r if isinstance(r, Receiver) else Receiver(*r) for r in self.receivers))
        if self.sender_site is None:
            object.__setattr__(self, "sender_site", int(self.n_chain))
        n = len(self.receivers)
        if n < 1:
            raise SpecificationError("at least one receiver is required", key="receivers")
        if n > self.n_chain // 2 + 1:
            raise SpecificationError(
                f"{n} receivers exceed the degeneracy bound N/2 + 1 = {self.n_chain // 2 + 1}",
                key="receivers")
        if self.hopping_j <= 0:
            raise SpecificationError("hopping_j must be positive", key="hopping_j")
        if self.coupling_g < 0:
            raise SpecificationError("coupling_g must be non-negative", key="coupling_g")
        sites = [self.sender_site] + [r.site for r in self.receivers]
        for s in sites:
            if not 1 <= s <= self.n_chain:
                raise SpecificationError(f"site {s} outside 1..{self.n_chain}", key="receivers")
        if len(set(sites)) != len(sites):
            raise SpecificationError(
                "sender and receiver attach sites must be pairwise distinct", key="receivers")
        for name in ("hopping_j", "field_h", "coupling_g", "sender_field"):
            if not np.isfinite(getattr(self, name)):
                raise SpecificationError(f"{name} is not finite", key=name)

    @property
    def n_receivers(self) -> int:
        return len(self.receivers)

    def receiver_distance(self, index: int) -> int:
        """Site distance ``R_j`` from the sender attach point, counted along the ring."""
        return (self.receivers[index - 1].site - self.sender_site) % self.n_chain


@dataclass(frozen=True)
class BarrierRouterSpec:
    """Open-chain router whose sender and receivers are two-spin blocks.

    Each block ``X`` has an endpoint spin ``X_A`` (no field) bonded to a
    barrier spin ``X_B`` (field ``barrier_field``), and ``X_B`` is bonded to
    chain site ``attach_site``.  All bonds share the chain coupling ``J``.
    """

    n_chain: int
    sender_block: Block
    receiver_blocks: tuple[Block, ...]
    hopping_j: float = 1.0
    field_h: float = 0.0
    units: str = "J"

    def __post_init__(self):
        _check_units(self.units)
        if not isinstance(self.n_chain, (int, np.integer)) or self.n_chain < 1:
            raise SpecificationError(f"chain needs n_chain >= 1, got {self.n_chain}", key="n_chain")
        if not isinstance(self.sender_block, Block):
            object.__setattr__(self, "sender_block", Block(*self.sender_block))
        object.__setattr__(self, "receiver_blocks", tuple(
            b if isinstance(b, Block) else Block(*b) for b in self.receiver_blocks))
        if not self.receiver_blocks:
            raise SpecificationError("at least one receiver block is required", key="receiver_blocks")
        if self.hopping_j <= 0:
            raise SpecificationError("hopping_j must be positive", key="hopping_j")
        blocks = (self.sender_block,) + self.receiver_blocks
        sites = [b.attach_site for b in blocks]
        for s in sites:
            if not 1 <= s <= self.n_chain:
                raise SpecificationError(f"attach site {s} outside 1..{self.n_chain}",
                                         key="receiver_blocks")
        if len(set(sites)) != len(sites):
            raise SpecificationError("block attach sites must be pairwise distinct",
                                     key="receiver_blocks")
        for b in blocks:
            if not (np.isfinite(b.barrier_field) and b.barrier_field > 0):
                raise SpecificationError(
                    f"barrier fields must be positive, got {b.barrier_field}", key="receiver_blocks")

    @property
    def n_receivers(self) -> int:
        return len(self.receiver_blocks)


RouterSpec = Union[RingRouterSpec, BarrierRouterSpec]


@dataclass(frozen=True)
class SingleExcitationHamiltonian:
    """Dense real symmetric matrix in the position basis.

    ``basis[i]`` is the site label of row ``i``: chain sites first in lattice
    order, then the sender, then the receivers in declaration order.
    """

    matrix: np.ndarray
    basis: tuple[str, ...]
    name: str = "H"
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != len(self.basis):
            raise SpecificationError(
                f"matrix shape {m.shape} does not match basis of size {len(self.basis)}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "basis", tuple(self.basis))
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(self.basis)})

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise LabelError(f"unknown site label {label!r} in {self.name}") from None

    def indices(self, labels) -> list[int]:
        return [self.index(lab) for lab in labels]


def _add_bond(m: np.ndarray, i: int, j: int, value: float) -> None:
    m[i, j] = value
    m[j, i] = value


def build_ring_hamiltonian(spec: RingRouterSpec) -> SingleExcitationHamiltonian:
    n = spec.n_chain
    basis = [chain_label(l) for l in range(1, n + 1)] + [SENDER]
    basis += [receiver_label(i) for i in range(1, spec.n_receivers + 1)]
    m = np.zeros((len(basis), len(basis)))

    hop = -2.0 * spec.hopping_j
    for l in range(n):
        m[l, l] = -2.0 * spec.field_h
    if n == 2:
        _add_bond(m, 0, 1, hop)
    else:
        for l in range(n):
            _add_bond(m, l, (l + 1) % n, hop)

    s = n
    m[s, s] = -2.0 * spec.sender_field
    _add_bond(m, s, spec.sender_site - 1, -spec.coupling_g)
    for i, rec in enumerate(spec.receivers):
        r = n + 1 + i
        m[r, r] = -2.0 * rec.field
        _add_bond(m, r, rec.site - 1, -spec.coupling_g)
    return SingleExcitationHamiltonian(m, tuple(basis), name=f"ring(N={n})")


def build_barrier_hamiltonian(spec: BarrierRouterSpec) -> SingleExcitationHamiltonian:
    n = spec.n_chain
    owners = [SENDER] + [receiver_label(i) for i in range(1, spec.n_receivers + 1)]
    blocks = (spec.sender_block,) + spec.receiver_blocks
    basis = [chain_label(l) for l in range(1, n + 1)]
    for owner in owners:
        basis.extend(block_labels(owner))
    m = np.zeros((len(basis), len(basis)))

    hop = -2.0 * spec.hopping_j
    for l in range(n):
        m[l, l] = -2.0 * spec.field_h
    for l in range(n - 1):
        _add_bond(m, l, l + 1, hop)
    for k, blk in enumerate(blocks):
        a = n + 2 * k
        b = a + 1
        m[b, b] = -2.0 * blk.barrier_field
        _add_bond(m, a, b, hop)
        _add_bond(m, b, blk.attach_site - 1, hop)
    return SingleExcitationHamiltonian(m, tuple(basis), name=f"barrier(N={n}, n={spec.n_receivers})")


def build_hamiltonian(spec: RouterSpec) -> SingleExcitationHamiltonian:
    if isinstance(spec, RingRouterSpec):
        return build_ring_hamiltonian(spec)
    if isinstance(spec, BarrierRouterSpec):
        return build_barrier_hamiltonian(spec)
    raise TypeError(f"not a router spec: {type(spec).__name__}")


def sender_and_targets(spec: RouterSpec) -> tuple[str, list[str]]:
    """Basis labels of the transmitting spin and of each receiving spin."""
    owners = [receiver_label(i) for i in range(1, spec.n_receivers + 1)]
    if isinstance(spec, BarrierRouterSpec):
        return block_labels(SENDER)[0], [block_labels(o)[0] for o in owners]
    return SENDER, owners


@dataclass(frozen=True)
class ParityWarning:
    code: str
    message: str
    receiver: int | None = None


def validate_parity(spec: RouterSpec) -> list[ParityWarning]:
    """Flag geometries where interference is expected to block the transfer.

    The checks never raise; a configuration that triggers a warning can still
    be simulated, it just should not be expected to route well.
    """
    out = []
    if isinstance(spec, RingRouterSpec):
        if spec.n_chain % 2:
            out.append(ParityWarning(
                "odd_chain_length",
                f"odd chain length N={spec.n_chain}: sender and receiver paths interfere destructively"))
        for i in range(1, spec.n_receivers + 1):
            d = spec.receiver_distance(i)
            if d % 2:
                out.append(ParityWarning(
                    "odd_receiver_distance",
                    f"receiver {i} sits at odd distance {d} from the sender attach site", i))
    else:
        ls = spec.sender_block.attach_site
        for i, blk in enumerate(spec.receiver_blocks, start=1):
            between = abs(blk.attach_site - ls) - 1
            if between % 2:
                out.append(ParityWarning(
                    "odd_spin_count",
                    f"receiver block {i}: {between} chain spins between the sender and receiver "
                    "attach sites (an even count is required)", i))
    return out


_RING_ENERGIES = ("hopping_j", "field_h", "coupling_g", "sender_field")
_BARRIER_ENERGIES = ("hopping_j", "field_h")


def convert_units(spec: RouterSpec, units: str) -> RouterSpec:
    """Re-express every energy of ``spec`` in ``units`` (``"J"`` or ``"4J"``).

    An energy of ``x`` in units of J equals ``x / 4`` in units of 4J.  Times
    scale inversely, so a simulation in the converted spec must use times
    multiplied by the same factor.
    """
    _check_units(units)
    if spec.units == units:
        return spec
    factor = 0.25 if units == "4J" else 4.0
    if isinstance(spec, RingRouterSpec):
        kw = {k: getattr(spec, k) * factor for k in _RING_ENERGIES}
        kw["receivers"] = tuple(Receiver(r.site, r.field * factor) for r in spec.receivers)
    else:
        kw = {k: getattr(spec, k) * factor for k in _BARRIER_ENERGIES}
        kw["sender_block"] = Block(spec.sender_block.attach_site,
                                   spec.sender_block.barrier_field * factor)
        kw["receiver_blocks"] = tuple(Block(b.attach_site, b.barrier_field * factor)
                                      for b in spec.receiver_blocks)
    return dataclasses.replace(spec, units=units, **kw)


def require_same_units(*specs: RouterSpec) -> str:
    units = {s.units for s in specs}
    if len(units) > 1:
        raise UnitsError(f"specs mix energy units {sorted(units)}")
    return units.pop()


def time_unit(spec: RouterSpec) -> str:
    """Human-readable unit of time for simulations of ``spec``."""
    return "1/J" if spec.units == "J" else "1/(4J)"


def default_barrier_layout(n_chain: int, n_receivers: int) -> tuple[int, list[int]]:
    """Sender attach site and receiver attach sites for an evenly filled chain.

    The sender sits at site 1 and every receiver at an even site, so each
    sender-receiver pair has an even number of chain spins between them.
    """
    if n_receivers < 1:
        raise SpecificationError("n_receivers must be >= 1")
    sites = []
    for k in range(1, n_receivers + 1):
        s = 2 * int(round(n_chain * k / (2 * n_receivers)))
        s = min(max(s, 2), n_chain - (n_chain % 2))
        sites.append(s)
    if len(set(sites)) != len(sites) or n_chain < 2:
        raise SpecificationError(
            f"cannot place {n_receivers} receivers on even sites of a chain of {n_chain}")
    return 1, sites


def default_barrier_ladder(n_receivers: int, hopping_j: float = 1.0,
                           base: float = 20.0, step: float = 10.0) -> list[float]:
    """Receiver barrier fields ``(base + step k) J`` increasing with position."""
    return [(base + step * k) * hopping_j for k in range(n_receivers)]


def default_barrier_router(n_chain: int = 30, n_receivers: int = 5,
                           hopping_j: float = 1.0) -> BarrierRouterSpec:
    """Barrier router with the default layout and field ladder (sender detuned)."""
    ls, sites = default_barrier_layout(n_chain, n_receivers)
    ladder = default_barrier_ladder(n_receivers, hopping_j)
    return BarrierRouterSpec(
        n_chain=n_chain,
        sender_block=Block(ls, ladder[0]),
        receiver_blocks=tuple(Block(s, h) for s, h in zip(sites, ladder)),
        hopping_j=hopping_j,
        units="J",
    )
