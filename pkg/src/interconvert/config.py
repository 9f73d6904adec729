"""Central numerical tolerances.

Every iterative routine in the package reads its defaults from
:data:`DEFAULTS`; callers override individual fields with
``dataclasses.replace(DEFAULTS, field=value)`` and pass the result as ``tol=``.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # probability-vector validation
    normalization: float = 1e-12
    # smooth max-divergence bisection
    dmax_smooth_abs: float = 1e-9
    dmax_smooth_max_iter: int = 200
    # Arimoto / Blahut-Arimoto / Augustin fixed points
    capacity: float = 1e-10
    augustin: float = 1e-10
    max_iter: int = 100_000
    # product-channel and enumeration caps
    product_entries: int = 2**24
    enumeration_outputs: int = 2**20
    # strong converse exponent search
    grid_points: int = 64
    refine_rounds: int = 3
    refine_points: int = 17
    inset: float = 1e-6
    # variational brute force
    simplex_mesh: int = 24
    mesh_flag: float = 5e-3
    # linear programs
    lp_tolerance: float = 1e-9
    lp_max_variables: int = 200_000
    sr_max_pairs: int = 10_000
    residual: float = 1e-8
    # protocol simulation
    codebook_cap_log2: int = 12
    rounding_max_candidates: int = 2**16


DEFAULTS = Tolerances()
