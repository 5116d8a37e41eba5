"""Figure scripts for ergobound output files.

Three renderers, each a standalone script over the documented text formats:
sublevel-set volumes with orbit overlays, residual traces along orbits, and
bound-versus-degree convergence charts. The scripts only read files; no
mathematics is recomputed here.
"""

__version__ = "0.1.0"
