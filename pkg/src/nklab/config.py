"""Central tolerance record shared by every module."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    trace_zero: float = 1e-12
    trace_symmetrize: float = 1e-9
    null_cone: float = 1e-14
    det_one: float = 1e-9
    exact: float = 1e-10
    gram_match: float = 1e-8
    conjugation: float = 1e-8
    lagrangian_analytic: float = 1e-8
    lagrangian_fd: float = 1e-6
    degenerate_plane: float = 1e-9
    degenerate_gram: float = 1e-10
    isometry: float = 1e-6
    compose: float = 1e-7
    # eigenvalues of A + iB closer than this are grouped before the nilpotency test
    cluster: float = 1e-2
    nilpotent_zero: float = 1e-6
    nilpotent_nonzero: float = 1e-3


TOL = Tolerances()
