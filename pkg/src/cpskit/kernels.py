"""Hot-loop dispatch: compiled extension when available, numpy otherwise.

Set ``CPSKIT_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

BACKEND = "python"

if os.environ.get("CPSKIT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ._kernels import qubit_config_sum, ryser_permanent

        BACKEND = "compiled"
    except ImportError:
        qubit_config_sum = _fallback.qubit_config_sum
        ryser_permanent = _fallback.ryser_permanent
else:
    qubit_config_sum = _fallback.qubit_config_sum
    ryser_permanent = _fallback.ryser_permanent

__all__ = ["BACKEND", "qubit_config_sum", "ryser_permanent"]
