"""Numerical kernels with a compiled fast path.

The Cython extension ``_core`` is used when it was built; otherwise the
pure-Python ``_pyfallback`` module takes over with identical semantics.
``BACKEND`` names the active implementation; ``implementations()`` exposes
whichever are importable (used by the cross-checking tests and the
benchmark).
"""

try:
    from . import _core as _impl

    BACKEND = "cython"
except ImportError:  # extension not built
    from . import _pyfallback as _impl

    BACKEND = "python"

weight = _impl.weight
cpt_value_mass = _impl.cpt_value_mass
forward_exit_mass = _impl.forward_exit_mass
forward_node_flow = _impl.forward_node_flow
objective_terms = _impl.objective_terms
objective_tails = _impl.objective_tails
constraint_violation = _impl.constraint_violation
pattern_search = _impl.pattern_search
interior_order = _impl.interior_order
exhaustive_scan = _impl.exhaustive_scan
grid_scan = _impl.grid_scan
simulate_paths = _impl.simulate_paths


def implementations():
    """Importable kernel backends as {name: module}."""
    from . import _pyfallback

    impls = {"python": _pyfallback}
    try:
        from . import _core

        impls["cython"] = _core
    except ImportError:
        pass
    return impls
