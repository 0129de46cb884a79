"""Closed-form generalized Eisert scheme for two-player 2x2 static games.

Used as an oracle for the extensive simulation: the same payoffs must come
out of sequential play on the two-qubit entangled state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParamOutOfRange
from .qstate import TOL, Unitary

HALF_PI = math.pi / 2


def _in_range(value: float, lo: float, hi: float) -> bool:
    return lo - TOL <= value <= hi + TOL


def check_angles(theta: float, phi: float) -> None:
    if not _in_range(theta, 0.0, math.pi):
        raise ParamOutOfRange(f"theta={theta} is outside [0, pi]")
    if not _in_range(phi, 0.0, HALF_PI):
        raise ParamOutOfRange(f"phi={phi} is outside [0, pi/2]")


def eisert_matrix(theta: float, phi: float) -> np.ndarray:
    """cos(θ/2)·J + sin(θ/2)·C with J = diag(e^{iφ}, e^{-iφ}), C|0⟩ = -|1⟩, C|1⟩ = |0⟩."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [[c * np.exp(1j * phi), s], [-s, c * np.exp(-1j * phi)]], dtype=complex
    )


def eisert_operator(theta: float, phi: float, strict: bool = True) -> Unitary:
    if strict:
        check_angles(theta, phi)
    return Unitary(eisert_matrix(theta, phi), name=f"U({theta:.12g},{phi:.12g})")


def eisert_params_of(op: Unitary, atol: float = TOL) -> tuple[float, float] | None:
    """Recover (θ, φ) if ``op`` belongs to the admissible Eisert family."""
    if op.dim != 2:
        return None
    m = op.matrix
    s = m[0, 1]
    if abs(s.imag) > atol or s.real < -atol or abs(m[1, 0] + s) > atol:
        return None
    if abs(m[1, 1] - np.conj(m[0, 0])) > atol:
        return None
    c = abs(m[0, 0])
    theta = 2 * math.atan2(max(s.real, 0.0), c)
    phi = float(np.angle(m[0, 0])) if c > atol else 0.0
    if not (_in_range(theta, 0.0, math.pi) and _in_range(phi, 0.0, HALF_PI)):
        return None
    return theta, phi


@dataclass(frozen=True)
class EisertParams:
    gamma: float
    theta1: float
    phi1: float
    theta2: float
    phi2: float
    payoff_table: tuple = ((0.0, 0.0),) * 4  # Δ00, Δ01, Δ10, Δ11

    def check(self) -> "EisertParams":
        if not _in_range(self.gamma, 0.0, math.pi):
            raise ParamOutOfRange(f"gamma={self.gamma} is outside [0, pi]")
        check_angles(self.theta1, self.phi1)
        check_angles(self.theta2, self.phi2)
        return self

    def table(self) -> np.ndarray:
        """Payoff vectors as an array of shape (4, n), rows Δ00, Δ01, Δ10, Δ11."""
        return np.asarray(self.payoff_table, dtype=float).reshape(4, -1)


def chi_coefficients(p: EisertParams) -> np.ndarray:
    """Amplitudes (χ00, χ01, χ10, χ11) of the final state in closed form.

    Parameters are not range-checked here; call ``EisertParams.check`` at
    the game boundary.
    """
    cg, sg = math.cos(p.gamma / 2), math.sin(p.gamma / 2)
    c1, s1 = math.cos(p.theta1 / 2), math.sin(p.theta1 / 2)
    c2, s2 = math.cos(p.theta2 / 2), math.sin(p.theta2 / 2)
    e = lambda x: np.exp(1j * x)  # noqa: E731
    chi00 = e(p.phi1 + p.phi2) * cg * c1 * c2 + 1j * sg * s1 * s2
    chi01 = -e(p.phi1) * cg * c1 * s2 + 1j * e(-p.phi2) * sg * s1 * c2
    chi10 = -e(p.phi2) * cg * s1 * c2 + 1j * e(-p.phi1) * sg * c1 * s2
    chi11 = cg * s1 * s2 + 1j * e(-(p.phi1 + p.phi2)) * sg * c1 * c2
    return np.array([chi00, chi01, chi10, chi11], dtype=complex)


def outcome_probabilities(p: EisertParams) -> np.ndarray:
    return np.abs(chi_coefficients(p)) ** 2


def eisert_payoff(p: EisertParams) -> np.ndarray:
    """Σ_kl Δ_kl |χ_kl|²."""
    return outcome_probabilities(p) @ p.table()


def payoff_operator_matrix(payoff_table: Sequence) -> np.ndarray:
    """X = Σ Δ_kl |kl⟩⟨kl| as n stacked 4x4 diagonal matrices."""
    table = np.asarray(payoff_table, dtype=float).reshape(4, -1)
    return np.stack([np.diag(table[:, i]) for i in range(table.shape[1])])


def trace_payoff(p: EisertParams) -> np.ndarray:
    """Tr(X ρ_fin) with explicit matrices and a Kronecker-product evolution."""
    psi = np.array([math.cos(p.gamma / 2), 0, 0, 1j * math.sin(p.gamma / 2)])
    u = np.kron(eisert_matrix(p.theta1, p.phi1), eisert_matrix(p.theta2, p.phi2))
    final = u @ psi
    rho = np.outer(final, final.conj())
    return np.real(np.einsum("nij,ji->n", payoff_operator_matrix(p.payoff_table), rho))
