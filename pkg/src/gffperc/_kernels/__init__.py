"""Hot-kernel backend selection.

The compiled extension is used when available; set ``GFFPERC_PURE=1`` to
force the numpy fallback.  Both backends export the same functions with
bit-identical output (see tests/test_backends.py and benchmarks/).
"""

import os

from . import pure

if os.environ.get("GFFPERC_PURE"):
    _impl = pure
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = pure

BACKEND = "compiled" if _impl is not pure else "pure"

edge_uniforms = _impl.edge_uniforms
open_states = _impl.open_states
component_roots = _impl.component_roots
origin_cluster = _impl.origin_cluster
pivotal_flags = _impl.pivotal_flags


def get_backend(name=None):
    """Return a backend module by name ('pure', 'compiled' or None=active)."""
    if name is None:
        return _impl
    if name == "pure":
        return pure
    if name == "compiled":
        from . import _core

        return _core
    raise ValueError(f"unknown backend {name!r}")
