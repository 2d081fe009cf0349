import hashlib
import json
from pathlib import Path
from typing import Dict, Iterable, Optional, Union

import numpy as np
from pandas import Timestamp

# Order of the randomised components fed by one --seed; appended to, never reordered.
SEED_STREAMS = ("generate", "involution", "basket")


def get_timestamp(date_only: Optional[bool] = False, time_only: Optional[bool] = False) -> str:
    """Return the current timestamp in ISO 8601 format.

    Args:
        date_only (bool): If True, return only the date in YYYY_MM_DD format.
        time_only (bool): If True, return only the time in HHMMSS format.

    Returns:
        str: The current timestamp.
    """
    if date_only:
        return Timestamp.now(tz=None).strftime('%Y_%m_%d')
    elif time_only:
        return Timestamp.now(tz=None).strftime('%H%M%S')
    return Timestamp.now(tz=None).isoformat(timespec='seconds')


def validate_str_path(path: Union[str, Path]) -> Path:
    """Accept a string or Path and return an absolute Path."""
    path = Path(path)
    if not path.is_absolute():
        path = path.resolve()
    return path


def file_digest(path: Union[str, Path]) -> str:
    """sha256 of the file contents, hex encoded."""
    digest = hashlib.sha256()
    with open(path, 'rb') as file:
        for chunk in iter(lambda: file.read(1 << 16), b''):
            digest.update(chunk)
    return digest.hexdigest()


def spawn_seeds(seed: int, streams: Iterable[str] = SEED_STREAMS) -> Dict[str, int]:
    """Split one seed into independent 32-bit seeds, one per named stream.

    Stream k receives ``SeedSequence(seed).spawn(n)[k].generate_state(1)[0]``.
    """
    streams = list(streams)
    children = np.random.SeedSequence(int(seed)).spawn(len(streams))
    return {name: int(child.generate_state(1)[0]) for name, child in zip(streams, children)}


def to_jsonable(obj):
    """Recursively convert numpy scalars and arrays (and objects with ``to_dict``) to JSON types."""
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if np.isfinite(value) else repr(value)
    return obj


def dump_json(obj, path: Optional[Union[str, Path]] = None) -> str:
    """Deterministic JSON text (sorted keys); written to ``path`` when given."""
    text = json.dumps(to_jsonable(obj), sort_keys=True, indent=2)
    if path is not None:
        with open(validate_str_path(path), 'w') as file:
            file.write(text + "\n")
    return text
