"""Common cause failure quantification for redundant digital I&C components.

Typical pipeline::

    doc = load_model("system.model")        # components, CCCGs, grades
    breakdowns = solve_all(doc.model)       # Q_I and per-CCCG CCF shares
    events = expand_events(doc.model, breakdowns)
    p = eval_exact(doc.model.tree, events)
"""

from importlib import resources
from pathlib import Path

from ._backend import DEFAULT as KERNEL_BACKEND
from .bfm import (BetaAssignment, DegenerateTotal, FailureBreakdown, resolve_betas,
                  solve_all, solve_component)
from .domain import Domain, InputMode
from .faulttree import (BasicEvent, ComponentRef, GateNode, SymmetricGroup, and_gate,
                        eval_exact, eval_rare_event, eval_symmetric_2of3, expand_events,
                        kofn_gate, minimal_cut_sets, or_gate)
from .model import (Cccg, Component, CouplingAttribute, FailureData, Normalization,
                    SolverOptions, SystemModel, derive_cccgs, validate_model)
from .modelfile import dump_model, load_model, parse_model
from .scoring import (Grade, GradeSheet, InputProfile, MissingCell, SubFactor, beta_pbf1,
                      beta_pbf2, input_similarity_grade, lookup_count)
from .simulate import McConfig, McEstimate, simulate_component_marginals, simulate_system

__version__ = "0.1.0"


def example_path(name: str) -> Path:
    """Path of a bundled example model, e.g. ``example_path("case_study.model")``."""
    return Path(str(resources.files(__package__) / "data" / name))
