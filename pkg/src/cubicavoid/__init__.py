"""Obstacle-avoiding Riemannian cubics on Lie groups, with an optimality test
based on biconjugate points of the reduced second variation."""

from .bijacobi import (
    BiJacobiField,
    JacobiState,
    VariationField,
    bijacobi_rhs,
    curvature_term,
    index_form,
    integrate_bijacobi,
    second_variation_fd,
)
from .conjugacy import (
    VERDICT_INCONCLUSIVE,
    VERDICT_MINIMIZER,
    VERDICT_NOT_MINIMIZER,
    ConjugacyScan,
    detect_biconjugate,
    fundamental_scan,
    verdict,
)
from .cubics import CubicState, CubicTrajectory, cubic_rhs, integrate_cubic, shoot_bvp
from .errors import (
    ConfigInvalid,
    CubicAvoidError,
    CutLocusDuringIntegration,
    GridTooCoarse,
    LogNearCutLocus,
    NoConvergence,
    NonFiniteState,
    StepUnderflow,
)
from .groups import GroupModel, abelian, so3
from .potentials import ObstaclePotential, zero_potential
from .scenario import Scenario, load_scenario

__version__ = "0.1.0"

__all__ = [
    "BiJacobiField",
    "ConfigInvalid",
    "ConjugacyScan",
    "CubicAvoidError",
    "CubicState",
    "CubicTrajectory",
    "CutLocusDuringIntegration",
    "GridTooCoarse",
    "GroupModel",
    "JacobiState",
    "LogNearCutLocus",
    "NoConvergence",
    "NonFiniteState",
    "ObstaclePotential",
    "Scenario",
    "StepUnderflow",
    "VariationField",
    "VERDICT_INCONCLUSIVE",
    "VERDICT_MINIMIZER",
    "VERDICT_NOT_MINIMIZER",
    "abelian",
    "bijacobi_rhs",
    "cubic_rhs",
    "curvature_term",
    "detect_biconjugate",
    "fundamental_scan",
    "index_form",
    "integrate_bijacobi",
    "integrate_cubic",
    "load_scenario",
    "second_variation_fd",
    "shoot_bvp",
    "so3",
    "verdict",
    "zero_potential",
]
