import logging
import os

import psutil

logger = logging.getLogger(__name__)

_COMPLEX_BYTES = 16


def get_available_ram_gb():
    """
    Returns the available system RAM in gigabytes.
    """
    try:
        return psutil.virtual_memory().available / (1024**3)
    except Exception:
        # Fallback for macOS if psutil fails for some reason
        try:
            return int(os.popen("sysctl -n hw.memsize").read()) / (1024**3)
        except Exception:
            return 8.0  # Safe default


def dense_matrix_gb(rows: int, cols: int) -> float:
    """Memory footprint of a dense complex128 matrix."""
    return rows * cols * _COMPLEX_BYTES / (1024**3)


def warn_if_memory_heavy(rows: int, cols: int, fraction: float) -> bool:
    """Log a warning when a dense allocation would claim more than `fraction` of free RAM."""
    needed = dense_matrix_gb(rows, cols)
    available = get_available_ram_gb()
    if needed > fraction * available:
        logger.warning("dense %dx%d matrix needs %.2f GB, %.2f GB available", rows, cols, needed, available)
        return True
    return False
