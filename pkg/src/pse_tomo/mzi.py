"""Optical-element simulation of the two modified Mach-Zehnder set-ups.

A single photon carries everything: its path is the probe (|0_P>, |1_P>),
its polarization the system (H = |0>, V = |1>), and a qubit environment
rides along.  Elements act on path (x) polarization (x) environment:

* PBS transmits H (path unchanged) and reflects V (path swapped);
* a half-wave plate on path 0 flips H <-> V;
* the arms apply one operator per path;
* the output beam splitter fixes the probe readout basis: rows <+|, <-|
  for the real part, rows <+i|, <-i| for the imaginary part.

Two arm layouts are modelled.  ``kind="kraus"`` puts U_S (x) I_E on path 0
and U_SE on path 1, which is the controlled dilation with U~_S = I.
``kind="density"`` applies U_SE on both paths and then U_S on path 0 only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import VanishingDenominator
from .framework import ProbabilityTable, controlled_unitary, kraus_from_dilation
from .qmath import (
    SIGMA_X,
    TOL,
    check_unitary,
    hadamard_like,
    ketbra,
    partial_trace,
    tensor,
    unitary_exponential,
)

H, V = 0, 1
I2 = np.eye(2, dtype=complex)
P0 = np.diag([1, 0]).astype(complex)
P1 = np.diag([0, 1]).astype(complex)

# output beam splitters, written as readout rows on the path qubit
BS_X = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
BS_Y = np.array([[1, -1j], [1, 1j]], dtype=complex) / np.sqrt(2)


@dataclass(frozen=True)
class MziScenario:
    """Angles and operators of one interferometer run.

    ``alpha`` sets the input polarization cos(alpha)|H> + sin(alpha)|V>,
    hence the path superposition after the PBS; ``delta`` sets the
    environment state cos(delta)|0_E> + sin(delta)|1_E>.
    """

    kind: Literal["kraus", "density"]
    alpha: float = np.pi / 4
    delta: float = 0.0
    U_S: np.ndarray = field(default_factory=lambda: hadamard_like(2))
    U_SE: np.ndarray = field(default_factory=lambda: np.eye(4, dtype=complex))

    def __post_init__(self):
        if self.kind not in ("kraus", "density"):
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        object.__setattr__(self, "U_S", check_unitary(self.U_S, "U_S"))
        object.__setattr__(self, "U_SE", check_unitary(self.U_SE, "U_SE"))
        if self.U_S.shape != (2, 2) or self.U_SE.shape != (4, 4):
            raise ValueError("the interferometer carries a qubit system and a qubit environment")

    @property
    def xi(self) -> np.ndarray:
        return np.array([np.cos(self.delta), np.sin(self.delta)], dtype=complex)

    @property
    def path_norm(self) -> float:
        """2 cos(alpha) sin(alpha)."""
        return float(2 * np.cos(self.alpha) * np.sin(self.alpha))

    def arms(self) -> tuple[np.ndarray, np.ndarray]:
        """Operators on polarization (x) environment for path 0 and path 1."""
        us = np.kron(self.U_S, I2)
        if self.kind == "kraus":
            return us, self.U_SE
        return us @ self.U_SE, self.U_SE


def pbs() -> np.ndarray:
    return tensor(I2, P0, I2) + tensor(SIGMA_X, P1, I2)


def hwp_on_path0() -> np.ndarray:
    return tensor(P0, SIGMA_X, I2) + tensor(P1, I2, I2)


def input_state(scn: MziScenario) -> np.ndarray:
    pol = np.array([np.cos(scn.alpha), np.sin(scn.alpha)], dtype=complex)
    return tensor(np.array([1, 0], dtype=complex), pol, scn.xi)


def pre_readout_state(scn: MziScenario) -> np.ndarray:
    """State after PBS, HWP and the arm evolution."""
    psi = hwp_on_path0() @ (pbs() @ input_state(scn))
    return controlled_unitary(*scn.arms()) @ psi


def propagate(scn: MziScenario) -> ProbabilityTable:
    """Joint detection probabilities p(probe outcome, polarization, k_E).

    Rows (+, -) come from the ordinary beam splitter, rows (+i, -i) from
    the sigma_y readout; each pair is a complete measurement.
    """
    psi = pre_readout_state(scn).reshape(2, 2, 2)
    p = np.empty((4, 2, 2))
    for r, bs in ((0, BS_X), (2, BS_Y)):
        out = np.einsum("ra,ask->rsk", bs, psi)
        p[r : r + 2] = np.abs(out) ** 2
    return ProbabilityTable(p)


# ----------------------------------------------------------------------------
# closed forms


def kraus_closed_form(scn: MziScenario) -> dict[str, float]:
    """p(l, H, 0_E) for the Kraus layout, l in (+, -, +i, -i).

    Common part: cos^2(a) cos^2(d) |<H|U_S|V>|^2 / 2 + sin^2(a) |<H|A_0|V>|^2 / 2;
    interference: +/- Re (x-readout) and +/- Im (y-readout) of
    <V|U_S^dag|H><H|A_0|V> times cos(a) sin(a) cos(d).
    """
    a, d = scn.alpha, scn.delta
    a0 = kraus_from_dilation(scn.U_SE, scn.xi, 0)
    base = 0.5 * np.cos(a) ** 2 * np.cos(d) ** 2 * abs(scn.U_S[H, V]) ** 2 + 0.5 * np.sin(a) ** 2 * abs(a0[H, V]) ** 2
    z = np.conj(scn.U_S[H, V]) * a0[H, V] * np.cos(a) * np.sin(a) * np.cos(d)
    return {"+": base + z.real, "-": base - z.real, "+i": base + z.imag, "-i": base - z.imag}


def density_closed_form(scn: MziScenario, k: int = 0) -> dict[str, float]:
    """p(l, H, k_E) for the density layout.

    The y-readout pair carries +Im for +i and -Im for -i; a printing with
    the same sign on both cannot sum to the x-readout marginal.
    """
    a = scn.alpha
    ak = kraus_from_dilation(scn.U_SE, scn.xi, k)
    usak = scn.U_S @ ak
    base = 0.5 * np.cos(a) ** 2 * abs(usak[H, V]) ** 2 + 0.5 * np.sin(a) ** 2 * abs(ak[H, V]) ** 2
    z = np.conj(usak[H, V]) * ak[H, V] * np.cos(a) * np.sin(a)
    return {"+": base + z.real, "-": base - z.real, "+i": base + z.imag, "-i": base - z.imag}


def _cell(table: ProbabilityTable, k: int) -> dict[str, float]:
    return {lab: float(table[lab, H, k]) for lab in ("+", "-", "+i", "-i")}


# ----------------------------------------------------------------------------
# reconstructions


def _signal(table: ProbabilityTable, k: int) -> complex:
    return complex(table.delta_x[H, k] + 1j * table.delta_y[H, k])


def reconstruct_mzi_kraus_element(scn: MziScenario, table: ProbabilityTable | None = None) -> complex:
    """<H|A_0|V> = [dx + i dy] / (2 cos(a) sin(a) cos(d) <V|U_S^dag|H>)."""
    if scn.kind != "kraus":
        raise ValueError("scenario is not the Kraus layout")
    den = scn.path_norm * np.cos(scn.delta) * np.conj(scn.U_S[H, V])
    if abs(den) <= TOL.vanishing:
        raise VanishingDenominator(
            "2 cos(alpha) sin(alpha) cos(delta) <V|U_S^dag|H> vanishes",
            alpha=scn.alpha, delta=scn.delta, overlap=complex(np.conj(scn.U_S[H, V])),
        )
    t = propagate(scn) if table is None else table
    return _signal(t, 0) / den


def mzi_density_products(scn: MziScenario, table: ProbabilityTable | None = None) -> np.ndarray:
    """z_k = <H|A_k|V><V|A_k^dag U_S^dag|H> = [dx_k + i dy_k] / (2 cos(a) sin(a)), k = 0, 1."""
    if scn.kind != "density":
        raise ValueError("scenario is not the density layout")
    if abs(scn.path_norm) <= TOL.vanishing:
        raise VanishingDenominator("2 cos(alpha) sin(alpha) vanishes", alpha=scn.alpha)
    t = propagate(scn) if table is None else table
    return np.array([_signal(t, k) for k in range(2)]) / scn.path_norm


def reconstruct_mzi_density_element(scn: MziScenario, table: ProbabilityTable | None = None) -> complex:
    """<H|rho|V> of rho = sum_k A_k |V><V| A_k^dag, read with U_S = sigma_x.

    With U_S^dag|H> = |V> each z_k equals <H|A_k|V><V|A_k^dag|V>, and the
    sum over k is the requested coherence.
    """
    if np.max(np.abs(scn.U_S - SIGMA_X)) > TOL.structural:
        raise VanishingDenominator("density readout needs U_S = sigma_x", U_S=scn.U_S)
    return complex(np.sum(mzi_density_products(scn, table)))


def channel_output(scn: MziScenario) -> np.ndarray:
    """Tr_E[U_SE (|V><V| (x) |xi><xi|) U_SE^dag], the state the density layout targets."""
    rho = scn.U_SE @ np.kron(ketbra(np.array([0, 1], dtype=complex)), ketbra(scn.xi)) @ scn.U_SE.conj().T
    return partial_trace(rho, [2, 2], keep=[0])


# ----------------------------------------------------------------------------
# couplings with closed-form Kraus elements


def xx_coupling(phi: float) -> np.ndarray:
    """exp(-i phi sigma_x (x) sigma_x); gives <H|A_0|V> = -i sin(phi) sin(delta)."""
    return unitary_exponential(np.kron(SIGMA_X, SIGMA_X), phi)


def partial_swap(phi: float) -> np.ndarray:
    """exp(-i phi SWAP); <H|A_0|V> vanishes for every environment angle."""
    swap = np.eye(4)[[0, 2, 1, 3]]
    return unitary_exponential(swap, phi)
