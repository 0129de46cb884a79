"""Extensive games played on qudits: simulation, payoffs, equilibria and realization checks."""

from .classical import ExtensiveGame, GameForm, pure_nash, strategic_form
from .eisert import EisertParams, chi_coefficients, eisert_operator, eisert_payoff
from .equilibrium import build_profile_table, deviation_gaps, pure_nash_quantum, sweep_gamma
from .gamedef import load_bundled, load_game, parse_game, parse_profile
from .qgame import (
    OperatorSet,
    OutcomeClass,
    QStrategyProfile,
    QuantumExtensiveGame,
    QuantumGameForm,
    check_realization,
    expected_utility,
    play_profile,
)
from .qstate import QuditLayout, StateVector, Unitary, basis_shift_operator, build_state, ghz_like_state

__version__ = "0.1.0"

__all__ = [
    "basis_shift_operator",
    "build_profile_table",
    "build_state",
    "check_realization",
    "chi_coefficients",
    "deviation_gaps",
    "eisert_operator",
    "eisert_payoff",
    "EisertParams",
    "expected_utility",
    "ExtensiveGame",
    "GameForm",
    "ghz_like_state",
    "load_bundled",
    "load_game",
    "OperatorSet",
    "OutcomeClass",
    "parse_game",
    "parse_profile",
    "play_profile",
    "pure_nash",
    "pure_nash_quantum",
    "QStrategyProfile",
    "QuantumExtensiveGame",
    "QuantumGameForm",
    "QuditLayout",
    "StateVector",
    "strategic_form",
    "sweep_gamma",
    "Unitary",
]
