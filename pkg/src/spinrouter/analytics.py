"""Closed-form weak-coupling and strong-barrier predictions.

Ring formulas use energies in units of 4J (pass ``four_j`` otherwise to
scale the level-spacing checks); the splittings and probabilities depend on
``g`` and ``t`` only through ``g t`` and are unit-free in that sense.
Barrier formulas take the chain coupling ``J`` explicitly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dynamics import evolve_amplitude
from .errors import ConfigurationError, DomainError
from .model import BarrierRouterSpec, build_hamiltonian, sender_and_targets
from .spectral import diagonalize, level_spacings, nearest_mode

#: ``omega_bar`` must stay below ``parabolic_spacing / WEAK_COUPLING_MARGIN``.
WEAK_COUPLING_MARGIN = 5.0
#: Barrier approximation is trusted from ``h / J`` above this ratio.
STRONG_BARRIER_RATIO = 4.0


class WeakCouplingWarning(UserWarning):
    pass


class StrongBarrierWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ResonanceSplitting:
    omega_bar: float
    delta_plus: float
    delta_minus: float
    k_bar: float
    receiver_distance: int

    @property
    def first_period(self) -> float:
        """Period of the fastest oscillation, ``2 pi / max(delta_+, delta_-)``."""
        fast = max(self.delta_plus, self.delta_minus)
        return math.inf if fast == 0.0 else 2.0 * math.pi / fast


def splitting(n_chain: int, coupling_g: float, k_bar: float, receiver_distance: int,
              *, four_j: float = 1.0, margin: float = WEAK_COUPLING_MARGIN) -> ResonanceSplitting:
    """Splitting ``delta_+-`` of the four resonant levels around ``k_bar``.

    Emits :class:`WeakCouplingWarning` when ``omega_bar`` is not well below the
    parabolic level spacing, where the four-level picture breaks down.
    """
    omega_bar = 2.0 * coupling_g / math.sqrt(n_chain)
    c = math.cos(k_bar * receiver_distance)
    c = min(1.0, max(-1.0, c))
    d_plus = omega_bar / math.sqrt(2.0) * math.sqrt(1.0 + c)
    d_minus = omega_bar / math.sqrt(2.0) * math.sqrt(1.0 - c)
    parabolic = level_spacings(n_chain)[0] * four_j
    if omega_bar >= parabolic / margin:
        warnings.warn(
            f"omega_bar={omega_bar:.3g} is not << parabolic spacing {parabolic:.3g}; "
            "weak-coupling formulas may be inaccurate", WeakCouplingWarning, stacklevel=2)
    return ResonanceSplitting(omega_bar, d_plus, d_minus, k_bar, receiver_distance)


def weak_coupling_probability(split: ResonanceSplitting, times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    return 0.25 * (np.cos(split.delta_plus * t) - np.cos(split.delta_minus * t)) ** 2


def linear_band_probability(n_chain: int, coupling_g: float, times) -> np.ndarray:
    """Transfer probability through the ``k = +-pi/2`` modes, ``sin^4(g t / sqrt(N))``."""
    t = np.asarray(times, dtype=float)
    return np.sin(coupling_g * t / math.sqrt(n_chain)) ** 4


def linear_band_peak_time(n_chain: int, coupling_g: float) -> float:
    return math.pi * math.sqrt(n_chain) / (2.0 * coupling_g)


def quadratic_band_probability(n_chain: int, coupling_g: float, times) -> np.ndarray:
    """Transfer probability through a band-edge mode, ``sin^4(g t / sqrt(2N))``.

    The band-edge modes are not degenerate, so this is a separate result
    rather than a limit of :func:`weak_coupling_probability`.
    """
    t = np.asarray(times, dtype=float)
    return np.sin(coupling_g * t / math.sqrt(2.0 * n_chain)) ** 4


def quadratic_band_peak_time(n_chain: int, coupling_g: float) -> float:
    return math.pi * math.sqrt(2.0 * n_chain) / (2.0 * coupling_g)


def barrier_amplitude_approx(hopping_j: float, barrier_field: float, times) -> np.ndarray:
    """Strong-barrier sender-receiver amplitude ``sin(J^3 t / h^2)``."""
    if barrier_field / hopping_j < STRONG_BARRIER_RATIO:
        warnings.warn(f"h/J = {barrier_field / hopping_j:.3g} is not in the strong-barrier regime",
                      StrongBarrierWarning, stacklevel=2)
    t = np.asarray(times, dtype=float)
    return np.sin(hopping_j ** 3 * t / barrier_field ** 2)


def barrier_period(hopping_j: float, barrier_field: float) -> float:
    return 2.0 * math.pi * barrier_field ** 2 / hopping_j ** 3


@dataclass(frozen=True)
class BlockEigensystem:
    """Eigenpairs of an isolated two-spin block in the ``(X_A, X_B)`` basis.

    ``psi_a``/``psi_b`` are the unnormalised vectors ``(omega_b / 2J, 1)`` and
    ``(omega_a / 2J, 1)``.  ``weight_a``/``weight_b`` are the effective
    chain-coupling factors ``omega / (omega_a - omega_b)``, tending to
    ``J^2/h^2`` and ``-(1 - J^2/h^2)`` for ``h >> J``.
    """

    omega_a: float
    omega_b: float
    psi_a: np.ndarray
    psi_b: np.ndarray

    @property
    def psi_a_normalized(self) -> np.ndarray:
        return self.psi_a / np.linalg.norm(self.psi_a)

    @property
    def psi_b_normalized(self) -> np.ndarray:
        return self.psi_b / np.linalg.norm(self.psi_b)

    @property
    def weight_a(self) -> float:
        return self.omega_a / (self.omega_a - self.omega_b)

    @property
    def weight_b(self) -> float:
        return self.omega_b / (self.omega_a - self.omega_b)


def block_matrix(hopping_j: float, barrier_field: float) -> np.ndarray:
    return np.array([[0.0, -2.0 * hopping_j], [-2.0 * hopping_j, -2.0 * barrier_field]])


def barrier_block_eigensystem(hopping_j: float, barrier_field: float) -> BlockEigensystem:
    h, j = barrier_field, hopping_j
    root = math.hypot(h, 2.0 * j)
    # -h + root loses all digits for h >> J; use the product omega_a omega_b = -4 J^2.
    if h >= 0:
        omega_b = -h - root
        omega_a = -4.0 * j * j / omega_b
    else:
        omega_a = -h + root
        omega_b = -4.0 * j * j / omega_a
    psi_a = np.array([omega_b / (2.0 * j), 1.0])
    psi_b = np.array([omega_a / (2.0 * j), 1.0])
    return BlockEigensystem(omega_a, omega_b, psi_a, psi_b)


def off_resonance_coupling(n_chain: int, hopping_j: float, field_h: float, coupling_g: float,
                           energy: float, receiver_distance: int) -> float:
    """Second-order coupling between two degenerate endpoints through a detuned ring.

    ``J_eff = (g^2 / N) sum_q cos(k_q R) / (E - eps_q)``.  Sender and receiver
    at energy ``E`` then exchange the excitation as a two-level system with
    first full transfer at ``pi / (2 |J_eff|)``.
    """
    q = np.arange(n_chain)
    k = 2.0 * np.pi * q / n_chain
    eps = -2.0 * field_h - 4.0 * hopping_j * np.cos(k)
    denom = energy - eps
    if np.any(np.abs(denom) < 1e-12):
        raise DomainError("energy is resonant with a ring mode; no off-resonant coupling")
    return float(coupling_g ** 2 / n_chain * np.sum(np.cos(k * receiver_distance) / denom))


def compare_exact(spec, target: int, formula: str = "auto", t_max: float | None = None,
                  samples: int = 2001) -> dict:
    """Exact transfer against the matching closed form over its first period.

    Ring routers compare probabilities ``F``; the resonant mode is the ring
    mode nearest to the sender level.  Barrier routers compare ``|f|`` with
    ``|sin(J^3 t / h_S^2)|``.
    """
    decomp = diagonalize(build_hamiltonian(spec))
    source, labels = sender_and_targets(spec)
    target_label = labels[target - 1]
    info: dict = {"target": target_label}
    caught: list[str] = []
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        if isinstance(spec, BarrierRouterSpec):
            if formula not in ("auto", "barrier"):
                raise ConfigurationError(f"formula {formula!r} does not apply to a barrier router")
            formula = "barrier"
            h_s, j = spec.sender_block.barrier_field, spec.hopping_j
            window = barrier_period(j, h_s)

            def predict(t):
                return np.abs(barrier_amplitude_approx(j, h_s, t))
            quantity = "abs_f"
        else:
            if formula == "barrier":
                raise ConfigurationError("formula 'barrier' needs a barrier router")
            n, g = spec.n_chain, spec.coupling_g
            q, _, detuning = nearest_mode(-2.0 * spec.sender_field, n, spec.hopping_j, spec.field_h)
            k_bar = 2.0 * math.pi * q / n
            r = spec.receiver_distance(target)
            info.update(mode_q=q, k_bar=k_bar, receiver_distance=r, sender_detuning=detuning)
            if formula == "auto":
                formula = "quadratic" if q == 0 or 2 * q == n else "weak"
            if formula == "weak":
                split = splitting(n, g, k_bar, r, four_j=4.0 * spec.hopping_j)
                window = split.first_period
                info.update(omega_bar=split.omega_bar, delta_plus=split.delta_plus,
                            delta_minus=split.delta_minus)

                def predict(t):
                    return weak_coupling_probability(split, t)
            elif formula == "linear":
                window = math.pi * math.sqrt(n) / g

                def predict(t):
                    return linear_band_probability(n, g, t)
            else:
                window = math.pi * math.sqrt(2.0 * n) / g

                def predict(t):
                    return quadratic_band_probability(n, g, t)
            quantity = "F"
        caught = [str(w.message) for w in rec]
    window = float(t_max) if t_max is not None else window
    if not (window > 0 and math.isfinite(window)):
        raise ConfigurationError("analytic window is not finite; give --t-max")
    times = np.linspace(0.0, window, samples)
    amp = evolve_amplitude(decomp, source, target_label, times).amplitudes
    exact = np.abs(amp) if quantity == "abs_f" else np.abs(amp) ** 2
    analytic = predict(times)
    diff = exact - analytic
    info.update(formula=formula, quantity=quantity, window=window, times=times, exact=exact,
                analytic=analytic, max_deviation=float(np.max(np.abs(diff))),
                rms_deviation=float(np.sqrt(np.mean(diff ** 2))), warnings=caught)
    return info
