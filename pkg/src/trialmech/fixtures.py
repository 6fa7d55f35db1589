"""Canonical small instances and random instance generators."""

from __future__ import annotations

import numpy as np

from .model import Instance


def _binary_states(p_hi: list[list[float]]) -> np.ndarray:
    # p_hi[k][a] -> states[k, a, 0, :] = (lo, hi)
    arr = np.asarray(p_hi, dtype=float)
    return np.stack([np.round(1 - arr, 12), arr], axis=-1)[:, :, None, :]


def h1() -> Instance:
    """Two arms, binary outcome, one type, two equally likely states."""
    return Instance(
        arms=("arm1", "arm2"), outcomes=("lo", "hi"), public_types=("*",), private_types=("*",),
        state_names=("psi1", "psi2"), states=_binary_states([[0.8, 0.2], [0.4, 0.6]]),
        prior=np.array([0.5, 0.5]), utilities=np.array([[0.0], [1.0]]), scores=np.array([0.0, 1.0]),
    )


def t1() -> Instance:
    """H1 with two private types of opposite taste: s+ likes ``hi``, s- likes ``lo``."""
    return Instance(
        arms=("arm1", "arm2"), outcomes=("lo", "hi"), public_types=("*",), private_types=("s+", "s-"),
        state_names=("psi1", "psi2"), states=_binary_states([[0.8, 0.2], [0.4, 0.6]]),
        prior=np.array([0.5, 0.5]), utilities=np.array([[0.0, 1.0], [1.0, 0.0]]), scores=np.array([0.0, 1.0]),
    )


def random_instance(rng: np.random.Generator, n_arms: int, n_states: int, n_outcomes: int = 2,
                    n_public: int = 1, n_private: int = 1, min_prob: float = 0.02) -> Instance:
    """Dirichlet state tables (floored for full support) and uniform utilities."""
    raw = rng.dirichlet(np.ones(n_outcomes), size=(n_states, n_arms, n_public))
    states = min_prob + (1 - n_outcomes * min_prob) * raw
    states /= states.sum(axis=-1, keepdims=True)
    prior = rng.dirichlet(np.ones(n_states))
    utilities = rng.random((n_outcomes, n_private))
    return Instance(
        arms=tuple(f"arm{i + 1}" for i in range(n_arms)),
        outcomes=tuple(f"o{i}" for i in range(n_outcomes)),
        public_types=tuple(f"x{i}" for i in range(n_public)),
        private_types=tuple(f"s{i}" for i in range(n_private)),
        state_names=tuple(f"psi{i + 1}" for i in range(n_states)),
        states=states, prior=prior, utilities=utilities,
        scores=np.linspace(0.0, 1.0, n_outcomes),
    )
