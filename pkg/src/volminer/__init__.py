"""Optimal mining strategies under volatile block rewards: exact MDP
solvers, closed-form strategy evaluation, a mempool-aware simulation
environment, and the batch/service front ends."""

__version__ = "0.1.0"
