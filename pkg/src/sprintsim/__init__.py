"""Deterministic Scrum sprint simulator.

Two spinning wheels drive the model: an events wheel that injects one
shared surprise per day and a progress wheel that decides how many
effective hours each member produces.  Everything downstream -- the task
board, burndown charts, overtime economics, and the facilitated session
service -- is a pure function of the configuration and one 64-bit seed.
"""
from __future__ import annotations

__version__ = "0.1.0"
