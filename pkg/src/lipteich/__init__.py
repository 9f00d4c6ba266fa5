"""Lipschitz-metric toolkit for the once-punctured torus.

Computes the asymmetric Lipschitz (best-ratio) metric on the Teichmüller
space of the once-punctured torus in Fricke trace coordinates, classifies
mapping classes by their translation behaviour, and cross-validates
everything against a generic holonomy (matrix representation) oracle.
"""

__version__ = "0.1.0"

from .curves import MCGMatrix, NTType, Slope, apply_class, classify_matrix, enumerate_slopes, intersection_number
from .metric import DLReport, SandwichReport, TorusLamination, dl_estimate, lamination_intersection, lamination_length, ratio_for_lamination, sandwich_check
from .translation import ActionTypeReport, MinimizeOptions, PinchReport, TDistReport, classify_action, displacement, minimize_displacement, orbit_audit, pinch_scan, systole_inequality_check
from .torus_teich import AnalysisConfig, MarkovPoint, TraceCache, act_on_point, length_of_slope, point_from_chart, systole, trace_of_slope
from .holonomy import FreeAutomorphism, FuchsianRep, GroupWord, apply_automorphism, dl_lower_bound, geodesic_length, push_forward_rep, word_trace
