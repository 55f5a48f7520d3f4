from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class PhaseConfig:
    """Clocking and optimizer parameters.

    ``skip`` is the number of clock phases an edge may skip, so a connection
    may span at most ``span = skip + 1`` levels. ``max_fanout`` is the
    splitter capacity. ``enum_threshold`` and ``subset_cap`` control the
    fanout-subset rows of the initial level LP.
    """

    skip: int = 0
    max_fanout: int = 4
    enum_threshold: int = 15
    subset_cap: int = 32768
    seed: int = 1
    pi_level: int = 0

    def __post_init__(self):
        if not 0 <= self.skip <= 3:
            raise ValueError(f"skip must be in 0..3, got {self.skip}")
        if self.max_fanout < 2:
            raise ValueError(f"splitter max fanout must be >= 2, got {self.max_fanout}")
        if self.enum_threshold < 2:
            raise ValueError("enum_threshold must be >= 2")
        if self.subset_cap < 1:
            raise ValueError("subset_cap must be >= 1")
        if self.pi_level < 0:
            raise ValueError("pi_level must be >= 0")

    @property
    def span(self) -> int:
        return self.skip + 1

    def with_skip(self, skip: int) -> PhaseConfig:
        return replace(self, skip=skip)
