from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence, Union

PathLike = Union[str, Path]


def canonical_json(data: Any) -> str:
    """Sorted keys, indent 2, trailing newline; equal data gives equal text."""
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def atomic_write(path: PathLike, text: str) -> Path:
    """Write ``text`` next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, temp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(temp, path)
    except BaseException:
        Path(temp).unlink(missing_ok=True)
        raise
    return path


def write_json(path: PathLike, data: Any) -> Path:
    return atomic_write(path, canonical_json(data))


def write_csv(
    path: PathLike, rows: Iterable[dict[str, Any]], fieldnames: Sequence[str]
) -> Path:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(fieldnames), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return atomic_write(path, buffer.getvalue())


def slugify(name: str) -> str:
    """File-name safe version of a job or series label."""
    keep = []
    for char in name:
        if char.isalnum() or char in "-_.":
            keep.append(char)
        elif char in "=,[]/ ":
            keep.append("_")
    return "".join(keep).strip("_") or "_"
