"""Verbal explanations for a Pacman-style RL agent."""

__version__ = "0.1.0"
