"""Typed key-management policies, their closures and API strands."""

from .api import (DeviceState, KmpSoundness, api_strand_templates, check_kmp_soundness_bounded,
                  handles_in, kmp_config, role_guard)
from .closure import (ClosureKind, ClosureResult, closure, closure_report, closure_sets,
                      secure_types)
from .policy import (DATA, DEC, ENC, Edge, Policy, PolicyError, format_policy, load_policy,
                     parse_policy, secure_templates)
from .sweep import SweepResult, item5_sweep

__all__ = [
    "DATA", "ENC", "DEC", "Edge", "Policy", "PolicyError", "parse_policy", "format_policy",
    "load_policy", "secure_templates", "ClosureKind", "ClosureResult", "closure",
    "closure_sets", "closure_report", "secure_types", "DeviceState", "api_strand_templates",
    "handles_in", "KmpSoundness", "kmp_config", "check_kmp_soundness_bounded", "role_guard",
    "SweepResult", "item5_sweep",
]
