"""Causal structures, spacelike surfaces, relative states and quantum-logic deductions."""
from .causal import CausalStructure, Surface, enumerate_surfaces, fire, initial_surface, surface_containing, validate
from .assignment import CircuitAssignment, check_consistency, state_on_surface
from .relstate import RelStateQuery, chain, relative_state, verify_single_surface_theorem
from .qlogic import Deduction, Subspace, Truth, assess_soundness, check_deduction, valuate, wellformed
from .fr import build_fr

__version__ = "0.1.0"
