"""Routing protocols: choose a receiver by retuning fields, never the receivers.

Four variants are implemented:

``chain-resonance``
    every receiver is resonant with its own ring mode; the sender picks one
    by matching its local field.
``equally-spaced``
    receiver levels form a ladder off the band; the sender and a global
    chain field move together so the selected receiver sits at band centre.
``off-resonance``
    sender and receiver are degenerate and the whole band is pushed away by
    ``nu``; the empty chain mediates a slow two-level oscillation.
``barrier``
    open chain with two-spin blocks; the sender's barrier field is set equal
    to the target's.

Receiver indices are 1-based, matching the ``R1..Rn`` labels.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .analytics import off_resonance_coupling
from .dynamics import DEFAULT_COARSE_STEPS, find_peak
from .errors import ConfigurationError
from .model import (Block, BarrierRouterSpec, RingRouterSpec, Receiver, RouterSpec,
                    build_hamiltonian, sender_and_targets)
from .spectral import diagonalize, nearest_mode

BARRIER_WINDOW_JT = 5.0e4


class Scheme(str, Enum):
    CHAIN_RESONANCE = "chain-resonance"
    EQUALLY_SPACED = "equally-spaced"
    OFF_RESONANCE = "off-resonance"
    BARRIER = "barrier"


@dataclass(frozen=True)
class RoutingScheme:
    """Protocol choice plus its parameters.

    ``nu`` and ``delta_r`` are energies in the units of the spec they are
    applied to.  ``t_max=None`` selects the variant's default window.
    """

    variant: Scheme
    t_max: float | None = None
    delta_r: float | None = None
    nu: float | None = None
    side: int | None = None
    target: int | None = None
    coarse_steps: int = DEFAULT_COARSE_STEPS

    def __post_init__(self):
        object.__setattr__(self, "variant", Scheme(self.variant))
        if self.variant is Scheme.OFF_RESONANCE and self.nu is None:
            raise ConfigurationError("off-resonance scheme needs a detuning nu")
        if self.side not in (None, 1, -1):
            raise ConfigurationError("side must be +1, -1 or None")
        if self.t_max is not None and not self.t_max > 0:
            raise ConfigurationError("t_max must be positive")


def _four_j(spec: RingRouterSpec) -> float:
    return 4.0 * spec.hopping_j


def _check_target(spec: RouterSpec, target: int) -> None:
    if not 1 <= target <= spec.n_receivers:
        raise ConfigurationError(f"target {target} outside 1..{spec.n_receivers}")


def _receiver_levels(spec: RingRouterSpec) -> np.ndarray:
    return np.array([-2.0 * r.field for r in spec.receivers])


def _ladder_spacing(spec: RingRouterSpec) -> float:
    """Common spacing of the receiver levels, or ``inf`` for a single receiver."""
    levels = np.sort(_receiver_levels(spec))
    if levels.size < 2:
        return math.inf
    gaps = np.diff(levels)
    if np.ptp(gaps) > 1e-9 * max(1.0, abs(gaps[0])):
        raise ConfigurationError(f"receiver levels are not equally spaced: gaps {gaps.tolist()}")
    return float(gaps[0])


def resonant_modes(spec: RingRouterSpec) -> list[tuple[int, float, float]]:
    """Nearest ring mode ``(q, eps_q, detuning)`` of each receiver level."""
    return [nearest_mode(lvl, spec.n_chain, spec.hopping_j, spec.field_h)
            for lvl in _receiver_levels(spec)]


def tune_scheme_a(spec: RingRouterSpec, target: int) -> RingRouterSpec:
    """Resonate the sender with receiver ``target`` (chain field untouched).

    Raises:
        ConfigurationError: a receiver is off every chain mode by more than
            ``omega_bar = 2g/sqrt(N)``, or two receivers share a mode.
    """
    _check_target(spec, target)
    omega_bar = 2.0 * spec.coupling_g / math.sqrt(spec.n_chain)
    modes = resonant_modes(spec)
    bad = [f"R{i} (level {lvl:.6g}: nearest mode q={q} at {eps:.6g}, detuning {det:.3g})"
           for i, (lvl, (q, eps, det)) in enumerate(zip(_receiver_levels(spec), modes), start=1)
           if abs(det) > omega_bar]
    if bad:
        raise ConfigurationError(
            f"receivers not resonant with a chain mode within omega_bar={omega_bar:.3g}: "
            + "; ".join(bad))
    qs = [q for q, _, _ in modes]
    if len(set(qs)) != len(qs):
        raise ConfigurationError(f"receivers must be resonant with distinct modes, got q={qs}")
    return dataclasses.replace(spec, sender_field=spec.receivers[target - 1].field)


def tune_scheme_b(spec: RingRouterSpec, target: int) -> RingRouterSpec:
    """Align the sender and the band centre with receiver ``target``.

    Raises:
        ConfigurationError: the receiver ladder is uneven or its spacing is
            not above ``2 pi / N`` (in units of 4J).
    """
    _check_target(spec, target)
    spacing = _ladder_spacing(spec)
    bound = 2.0 * math.pi / spec.n_chain * _four_j(spec)
    if not spacing > bound:
        raise ConfigurationError(f"receiver spacing {spacing:.6g} must exceed 2pi/N = {bound:.6g}")
    h_t = spec.receivers[target - 1].field
    return dataclasses.replace(spec, sender_field=h_t, field_h=h_t)


def _band_clearance(center: float, half_width: float, levels) -> float:
    if len(levels) == 0:
        return math.inf
    return float(min(max(abs(lvl - center) - half_width, 0.0) for lvl in levels))


def tune_scheme_c(spec: RingRouterSpec, target: int, nu: float,
                  side: int | None = None) -> RingRouterSpec:
    """Make sender and receiver ``target`` degenerate with the band detuned by ``nu``.

    The band centre is placed at ``Omega_S + side * nu``.  With ``side=None``
    the side that keeps the band furthest from the other receivers is used
    (``+1`` on ties).

    Raises:
        ConfigurationError: ``nu`` not above the band half-width, or receiver
            levels closer than twice the half-width.
    """
    _check_target(spec, target)
    half = _four_j(spec)
    if not nu > half:
        raise ConfigurationError(f"detuning nu={nu:.6g} must exceed the band half-width {half:.6g}")
    levels = _receiver_levels(spec)
    if levels.size > 1:
        gap = float(np.min(np.diff(np.sort(levels))))
        if not gap > 2.0 * half:
            raise ConfigurationError(
                f"receiver spacing {gap:.6g} must exceed the band width {2.0 * half:.6g}")
    omega_s = float(levels[target - 1])
    others = [lvl for i, lvl in enumerate(levels, start=1) if i != target]
    if side is None:
        up = _band_clearance(omega_s + nu, half, others)
        down = _band_clearance(omega_s - nu, half, others)
        side = 1 if up >= down else -1
    center = omega_s + side * nu
    return dataclasses.replace(spec, sender_field=spec.receivers[target - 1].field,
                               field_h=-center / 2.0)


def tune_barrier(spec: BarrierRouterSpec, target: int) -> BarrierRouterSpec:
    """Set the sender's barrier field equal to that of receiver block ``target``."""
    _check_target(spec, target)
    h_t = spec.receiver_blocks[target - 1].barrier_field
    return dataclasses.replace(spec, sender_block=Block(spec.sender_block.attach_site, h_t))


def tune(spec: RouterSpec, scheme: RoutingScheme, target: int) -> RouterSpec:
    variant = scheme.variant
    if variant is Scheme.BARRIER:
        if not isinstance(spec, BarrierRouterSpec):
            raise ConfigurationError("barrier scheme needs a barrier router spec")
        return tune_barrier(spec, target)
    if not isinstance(spec, RingRouterSpec):
        raise ConfigurationError(f"{variant.value} scheme needs a ring router spec")
    if scheme.delta_r is not None and spec.n_receivers > 1:
        levels = np.sort(_receiver_levels(spec))
        gap = float(np.min(np.diff(levels)))
        if not math.isclose(gap, scheme.delta_r, rel_tol=1e-9):
            raise ConfigurationError(
                f"receiver spacing {gap:.6g} does not match declared delta_r {scheme.delta_r:.6g}")
    if variant is Scheme.CHAIN_RESONANCE:
        return tune_scheme_a(spec, target)
    if variant is Scheme.EQUALLY_SPACED:
        return tune_scheme_b(spec, target)
    return tune_scheme_c(spec, target, scheme.nu, scheme.side)


def default_window(tuned: RouterSpec, scheme: RoutingScheme, target: int) -> float:
    """Observation window for a tuned spec when the scheme does not fix one.

    * chain resonance: one period of the band-edge formula (the slowest of
      the closed forms), ``pi sqrt(2N) / g``;
    * equally spaced: one period of ``sin^4(g t / sqrt(N))``;
    * off resonance: twice the predicted effective Rabi transfer time;
    * barrier: ``J t = 5e4``.
    """
    if scheme.t_max is not None:
        return scheme.t_max
    if isinstance(tuned, BarrierRouterSpec):
        return BARRIER_WINDOW_JT / tuned.hopping_j
    n, g = tuned.n_chain, tuned.coupling_g
    if scheme.variant is Scheme.CHAIN_RESONANCE:
        return math.pi * math.sqrt(2.0 * n) / g
    if scheme.variant is Scheme.EQUALLY_SPACED:
        return math.pi * math.sqrt(n) / g
    coupling = off_resonance_coupling(
        n, tuned.hopping_j, tuned.field_h, g, -2.0 * tuned.sender_field,
        tuned.receiver_distance(target))
    if coupling == 0.0:
        raise ConfigurationError(
            f"effective sender-receiver coupling vanishes for receiver {target}; give t_max")
    return 2.0 * math.pi / (2.0 * abs(coupling))


def tuned_fields(spec: RouterSpec) -> dict[str, float]:
    if isinstance(spec, BarrierRouterSpec):
        return {"sender_barrier_field": spec.sender_block.barrier_field}
    return {"sender_field": spec.sender_field, "field_h": spec.field_h}


@dataclass(frozen=True)
class RoutingRow:
    target: int
    target_label: str
    tuned_fields: dict
    t_max: float
    peak_probability: float
    peak_avg_fidelity: float
    optimal_time: float
    off_target: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        """Target peak fidelity minus the best off-target peak."""
        if not self.off_target:
            return math.inf
        return self.peak_avg_fidelity - max(self.off_target.values())


@dataclass(frozen=True)
class RoutingTable:
    spec: RouterSpec
    scheme: RoutingScheme
    rows: tuple[RoutingRow, ...]

    @property
    def selective(self) -> bool:
        return all(r.margin > 0 for r in self.rows)


def route_target(spec: RouterSpec, scheme: RoutingScheme, target: int) -> RoutingRow:
    """Tune for ``target`` and measure peak fidelities at every receiver."""
    tuned = tune(spec, scheme, target)
    decomp = diagonalize(build_hamiltonian(tuned))
    source, labels = sender_and_targets(tuned)
    window = default_window(tuned, scheme, target)
    peaks = [find_peak(decomp, source, lab, window, scheme.coarse_steps) for lab in labels]
    hit = peaks[target - 1]
    off = {lab: p.peak_avg_fidelity for i, (lab, p) in enumerate(zip(labels, peaks), start=1)
           if i != target}
    return RoutingRow(target, labels[target - 1], tuned_fields(tuned), window,
                      hit.peak_probability, hit.peak_avg_fidelity, hit.optimal_time, off)


def routing_table(spec: RouterSpec, scheme: RoutingScheme, workers: int = 1) -> RoutingTable:
    """One row per receiver; rows are independent and assembled in receiver order."""
    targets = range(1, spec.n_receivers + 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda k: route_target(spec, scheme, k), targets))
    else:
        rows = [route_target(spec, scheme, k) for k in targets]
    return RoutingTable(spec, scheme, tuple(rows))


def suggest_mode_assignments(n_chain: int, n_receivers: int) -> list[tuple[int, int]]:
    """``(distance R, mode q)`` pairs with ``k R`` a multiple of pi.

    Modes are taken from the linear part of the band outward; each gets the
    shortest even distance not used yet.  ``q`` runs over ``0..N/2``.
    """
    order = sorted(range(n_chain // 2 + 1), key=lambda q: (abs(4 * q - n_chain), q))
    used: set[int] = set()
    out = []
    for q in order:
        for r in range(2, n_chain, 2):
            if r not in used and (2 * q * r) % n_chain == 0:
                used.add(r)
                out.append((r, q))
                break
        if len(out) == n_receivers:
            return out
    raise ConfigurationError(
        f"cannot assign {n_receivers} receivers to distinct modes on a ring of {n_chain}")


def scheme_a_router(n_chain: int, n_receivers: int, coupling_g: float = 0.01,
                    hopping_j: float = 0.25, field_h: float = 0.0,
                    assignments: list[tuple[int, int]] | None = None) -> RingRouterSpec:
    """Ring router whose receivers are tuned to distinct modes (sender detuned)."""
    pairs = assignments or suggest_mode_assignments(n_chain, n_receivers)
    recs = []
    for r, q in pairs:
        eps = -2.0 * field_h - 4.0 * hopping_j * math.cos(2.0 * math.pi * q / n_chain)
        recs.append(Receiver((n_chain + r - 1) % n_chain + 1, -eps / 2.0))
    return RingRouterSpec(n_chain, tuple(recs), hopping_j=hopping_j, field_h=field_h,
                          coupling_g=coupling_g, sender_site=n_chain,
                          sender_field=(-2.0 * field_h + 8.0 * hopping_j) / 2.0,
                          units="4J" if hopping_j == 0.25 else "J")


def equally_spaced_fields(n_receivers: int, delta_r: float, hopping_j: float = 0.25) -> list[float]:
    """Receiver fields whose levels start one ``delta_r`` above the bare band top."""
    top = 4.0 * hopping_j
    return [-(top + k * delta_r) / 2.0 for k in range(1, n_receivers + 1)]
