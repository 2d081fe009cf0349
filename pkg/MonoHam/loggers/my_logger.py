import logging
from typing import Optional

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


def setup_logging(verbosity: int = 0, logfile_path: Optional[str] = None) -> logging.Logger:
    """Configure the root logger once for a MonoHam run.

    verbosity: -1 warnings only, 0 info, 1 or more debug.
    """
    if verbosity < 0:
        level = logging.WARNING
    elif verbosity == 0:
        level = logging.INFO
    else:
        level = logging.DEBUG
    handlers = [logging.StreamHandler()]
    if logfile_path:
        handlers.append(logging.FileHandler(logfile_path))
    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=True)
    return logging.getLogger("MonoHam")
