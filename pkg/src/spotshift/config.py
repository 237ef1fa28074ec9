"""Default constants and plain-text config parsing.

The defaults here are the reference operating point of the whole pipeline:
shadow synthesis radii scale to [0, 30] with top-left/bottom-right spotlights,
the attention stages run 4 heads, and the decoder works on 32-channel features.
"""

from __future__ import annotations

from pathlib import Path

DEFAULT_MAX_RADIUS = 30
DEFAULT_SPOTLIGHT_CORNERS = ("tl", "br")
DEFAULT_ATTENTION_HEADS = 4
DEFAULT_DECODER_CHANNELS = 32

VALID_CORNERS = ("tl", "tr", "bl", "br")

ENV_PREFIX = "SPOTSHIFT_"


def read_keyvalue(path: str | Path) -> dict[str, str]:
    """Parse a ``key = value`` text file.

    Blank lines and lines starting with ``#`` are ignored. Keys and values are
    stripped of surrounding whitespace. Duplicate keys keep the last value.
    """
    result: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        result[key.strip()] = value.strip()
    return result
