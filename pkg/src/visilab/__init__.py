"""visilab: a desk-scale laboratory for perimeter almost-minimizers near Lipschitz boundaries.

The package certifies the visibility of graph domains, builds the off-centric
sphere foliation, measures relative perimeters of polygonal and grid sets,
computes exact discrete minimality gaps by min-cut, audits the free-boundary
monotonicity inequality, and traces blow-up sequences.
"""

from .domain import (
    GraphDomain,
    VisibilityFunction,
    VisibilityCertificate,
    TangentCone,
    gamma_u,
    check_v1_v2,
    slope_profile,
    check_segment_visibility,
    check_gradient_criterion,
    certify_visibility,
    tangent_cone,
    rescale_domain,
    hausdorff_distance,
)
from .foliation import OffcentricChart, PhiEvaluation, to_offcentric, phi, cone_contains
from .regions import Ball, Annulus, HalfSpace, WholeSpace, region_from_json
from .polyset import PolySet
from .gridset import GridSet, CutMetric
from .perimeter import perimeter_rel, volume, reflect_extend, conical_competitor, coarea_check
from .mingap import (
    MinGapProblem,
    MinGapResult,
    minimality_gap,
    brute_force_gap,
    almost_min_profile,
    density_report,
    gap_stability_check,
)
from .monotonicity import mu, g_term, g_limit, lhs_conical_deviation, audit, MonotonicityAudit
from .blowup import rescale_set, blowup_trace, conicality_defect, BlowupTrace
from .corpus import make_example, corpus_names, CorpusEntry

__version__ = "0.1.0"
