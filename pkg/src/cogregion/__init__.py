"""Rate regions of the Gaussian and discrete cognitive interference channel."""

from .core import (
    RatePair,
    RateRegion,
    RegionComparison,
    capacity,
    excess,
    hausdorff,
    pareto_frontier,
    read_region_csv,
    region_contains,
    simplify,
    write_region_csv,
)
from .gaussian import DpcParams, GaussianChannel, JointGaussian, assemble_joint, mi, mi_cond
from .inner import InnerBoundSpec, SuperpositionParams, eval_joint_g2, eval_sequential_gseq, trace_frontier
from .outer import InapplicableBound, OuterParams, outer_contains, outer_corner, strong_condition_holds, trace_outer_frontier

__version__ = "0.1.0"
