"""Bounded protocol search: roles, properties, exploration and certificates."""

from .check import (CompositionResult, Verdict, check_composition, check_property,
                    minimize_events)
from .engine import (Event, Execution, Explorer, SearchBudgetExceeded, SearchConfig,
                     default_budget, enumerate_executions)
from .properties import (InjectiveAgreement, Injectivity, NonInjectiveAgreement, Secrecy,
                         SlotView, Violation)
from .reconstruct import ReconstructionError, reconstruct_bundle
from .roles import ExcludePair, ForbidSubterm, ParamFilter, ProtocolSpec, RoleTemplate

__all__ = [
    "CompositionResult", "Verdict", "check_composition", "check_property", "minimize_events",
    "Event", "Execution", "Explorer", "SearchBudgetExceeded", "SearchConfig",
    "default_budget", "enumerate_executions", "InjectiveAgreement", "Injectivity",
    "NonInjectiveAgreement", "Secrecy", "SlotView", "Violation", "ReconstructionError",
    "reconstruct_bundle", "ExcludePair", "ForbidSubterm", "ParamFilter", "ProtocolSpec",
    "RoleTemplate",
]
