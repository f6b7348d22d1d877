"""Resonances, counting asymptotics and decay laws for solvable quantum models."""
from .graph import (Edge, FlowerForm, GraphError, MetricGraph, SingularInnerMatrix, Vertex,
                    apply_magnetic, build_flower, conjugate_leads, coupling_from_conditions,
                    delta_coupling, effective_coupling, kirchhoff_coupling, vertex_split)
from .rootfind import (ComplexRoot, CountingReport, Rect, RootFindError, counting_function,
                       find_roots, winding_count)
from .secular import SecularFunction, classify_asymptotics, extremal_coefficients

__version__ = "0.1.0"
