"""Layer decomposition of composite domains with C^{1,gamma} interfaces.

Implicit shapes are combined into nested-or-disjoint families; around any
small ball the family is flattened into an ordered stack of graphs in one
rotated frame, with every quantitative estimate checked numerically.
"""

__version__ = "0.1.0"

from .composite import (
    CompositeScene,
    LayerChain,
    Relation,
    chain_decompose,
    classify_pair,
    component_membership,
    containment_forest,
    inner_union,
    minimal_cover,
    partition_check,
    split_cover,
)
from .domains import (
    Ball,
    Blob,
    Complement,
    Ellipsoid,
    HalfSpace,
    ImplicitDomain,
    Membership,
    certify_theta,
    classify_point,
    closest_boundary_point,
    complement,
    local_chart,
    shape_from_dict,
)
from .errors import LayerStackError
from .frames import Frame, frame_from_first_axis, from_frame, relative_frame, to_frame
from .graphsolve import (
    GraphProblem,
    Orientation,
    SolvedGraph,
    flatten_graph,
    opposite_graph,
    resolve_orientation,
    solve_graph,
)
from .layers import (
    CoefficientField,
    LayerStack,
    coefficient_eval,
    sandwich_verify,
    stack_boundary,
    stack_interior,
)
from .scenefile import load_scene, scene_from_dict
from .verify import (
    HolderBudget,
    RadiusLadder,
    holder_seminorm,
    normal_opposition_check,
    radius_ladder,
    reifenberg_check,
    sup_grad,
)

__all__ = [name for name in dir() if not name.startswith("_")]
