"""Figure rendering for cerdec sweep outputs.

Read-only consumer of the versioned CSV schemas written by the simulation
harness; no statistics are recomputed here, and the simulation package is
never imported.
"""

__version__ = "0.1.0"
