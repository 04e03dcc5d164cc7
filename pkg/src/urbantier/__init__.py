"""urbantier: ordinal tier prediction for urban household outcomes."""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND  # noqa: F401
