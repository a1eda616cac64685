"""Hamiltonian mechanics on [0, 1] as a field theory with boundary.

Thin wrapper over the compiled ``_core`` module. Scenario and self-test
reports are returned as plain dictionaries.
"""

import json as _json

from ._core import (  # noqa: F401
    BvpSolution,
    BvpSolutionSet,
    FlowResult,
    HamfieldError,
    HamiltonianSystem,
    SchemaError,
    __version__,
    check_facts,
    classify_theory,
    constraint_names,
    example_names,
    flow_jacobian,
    generating_function_check,
    gotay_step,
    integrate_constrained,
    integrate_flow,
    isotropy_defect_flow,
    make_system,
    principal_function,
    random_phase_points,
    solve_dirichlet,
    symplecticity_defect,
    topological_limit_study,
)
from . import _core


def run_scenario(scenario, out_dir=None, write_files=False):
    """Run a scenario given as a dict or JSON text; returns (exit_code, report)."""
    text = scenario if isinstance(scenario, str) else _json.dumps(scenario)
    code, report = _core._run_scenario(text, out_dir, write_files)
    return code, _json.loads(report)


def selftest(strict=False, seed=20160317):
    return _json.loads(_core._run_selftest(strict, seed))
