"""Near-optimal approximate quantum error correction.

Channels are Kraus arrays; fidelities are unsquared. The main entry points
are :func:`delta_estimate_id` (how well any recovery can do),
:func:`find_saddle` with :func:`build_recovery` (a recovery meeting that
estimate) and :func:`kl_residual` (the perturbed Knill-Laflamme view).
"""

from .channels import *  # noqa: F401,F403
from .channels import __all__ as _channels_all
from .correctability import *  # noqa: F401,F403
from .correctability import __all__ as _correctability_all
from .fidelity import *  # noqa: F401,F403
from .fidelity import __all__ as _fidelity_all
from .matops import AQECError
from .recovery import *  # noqa: F401,F403
from .recovery import __all__ as _recovery_all

__version__ = "0.1.0"

__all__ = ["AQECError", *_channels_all, *_fidelity_all, *_correctability_all, *_recovery_all]
