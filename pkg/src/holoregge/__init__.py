"""Holonomy identities for matrix-group connections and curvature of smoothed
Regge metrics."""

from .errors import ConfigError, HoloReggeError, NumericalFailure
from .gauge import (
    ConnectionField,
    GaugeField,
    Path,
    Segment,
    curvature,
    exp_map,
    gauge_transform,
    holonomy,
    parallel_transport,
    pt_abelian,
)
from .identity import Rectangle, defect_order_scan, radial_gauge, verify_identity
from .regge import (
    EdgeLengths,
    SimplicialComplex,
    action_gradient,
    critical_point_search,
    curvature_measure,
    deficit_angle,
    dihedral_angle,
    regge_action,
)
from .fans import HingeFan3D, SectorFan2D, deficit, sector_angles, support_radius, unit_directions
from .mollify import Mollifier
from .smoothing import (
    GridSpec,
    QuadSpec,
    curvature_density,
    integrate_curvature,
    lc_holonomy_angle,
    smoothed_jet,
    weak_convergence_scan,
)
from .hinge3d import hinge3d_invariant_checks, hinge3d_weak_convergence

__version__ = "0.1.0"
