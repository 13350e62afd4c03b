"""Backend selection for the stencil kernels.

The compiled extension is used when it was built and ``AGGFLOW_PURE_PYTHON``
is unset (or ``0``); otherwise the numpy implementation is used.
"""

import os

from . import _kernels_py as python

try:
    from . import _ckernels as compiled
except ImportError:  # extension not built
    compiled = None

if compiled is not None and os.environ.get("AGGFLOW_PURE_PYTHON", "0") in ("", "0"):
    _impl = compiled
else:
    _impl = python

BACKEND = _impl.BACKEND

div_faces = _impl.div_faces
grad_cells = _impl.grad_cells
laplace_neumann = _impl.laplace_neumann
center_to_face = _impl.center_to_face
face_to_center = _impl.face_to_center
skew_convection = _impl.skew_convection
strain_rates = _impl.strain_rates
strain_dissipation = _impl.strain_dissipation
viscous_apply = _impl.viscous_apply

node_weights = python.node_weights
eta_to_nodes = python.eta_to_nodes

__all__ = [
    "BACKEND", "compiled", "python", "div_faces", "grad_cells", "laplace_neumann",
    "center_to_face", "face_to_center", "skew_convection", "strain_rates",
    "strain_dissipation", "viscous_apply", "node_weights", "eta_to_nodes",
]
