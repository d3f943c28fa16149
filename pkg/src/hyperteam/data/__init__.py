"""Bundled toy instances.

Two small JSON instances ship with the package so the CLI and the tests
have something real to chew on: both are co-authorship-flavored, one small
(52 agents, 25 tasks) and one larger and sparse (781 agents, 704 tasks).
Load them with :func:`toy_path` and :func:`hyperteam.load_instance`.
"""

from importlib import resources
from pathlib import Path

__all__ = ["toy_path", "TOY_NAMES"]

TOY_NAMES = ("coauthor_small", "coauthor_large")


def toy_path(name: str) -> Path:
    """Filesystem path of a bundled instance, by name from TOY_NAMES."""
    if name not in TOY_NAMES:
        raise ValueError(f"unknown toy instance {name!r}; choose from {TOY_NAMES}")
    return Path(str(resources.files(__package__).joinpath(f"{name}.json")))
