"""hexevade: predator evasion on hexagonal arenas.

A library, simulator, and benchmark CLI for real-time online planning
against a reactive pursuer on partially observable hex-grid arenas.
"""

__version__ = "0.1.0"
