"""Resilient multi-robot blanket coverage.

Select a robot team under budget/reliability constraints, place it to
maximize probabilistic coverage of a planar domain, simulate robot
failures over a mission horizon, and recover coverage through tunable
local reconfiguration and mid-mission robot selection.
"""

__version__ = "0.1.0"
