"""Run decomposition of sign sequences.

Zeros terminate runs: a run's sign is one of {+1, -1, 0} and consecutive runs
always differ, so the runs partition the index range.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence


@dataclass(frozen=True)
class Run:
    start: int
    length: int
    sign: int

    @property
    def end(self) -> int:
        """One past the last index of the run."""
        return self.start + self.length


@dataclass
class SignRunProfile:
    start: int
    end: int                 # inclusive
    runs: List[Run]
    range_truncated: bool = True

    def L_of(self, n: int) -> int:
        """Longest same-nonzero-sign block inside [n, end].

        Always range-truncated evidence: the true quantity is a sup over the
        infinite tail, which a finite scan cannot settle.
        """
        if n > self.end:
            raise ValueError(f"{n} is past the computed range")
        best = 0
        for run in self.runs:
            if run.sign == 0 or run.end <= n:
                continue
            best = max(best, run.end - max(run.start, n))
        return best

    def max_nonzero_run(self) -> int:
        return max((r.length for r in self.runs if r.sign != 0), default=0)


def sign_run_profile(signs: Sequence[int], start: int = 0) -> SignRunProfile:
    """Decompose a sign sequence (values in {-1, 0, +1}) into runs."""
    runs: List[Run] = []
    i = 0
    n = len(signs)
    while i < n:
        s = signs[i]
        j = i + 1
        while j < n and signs[j] == s:
            j += 1
        runs.append(Run(start + i, j - i, s))
        i = j
    return SignRunProfile(start=start, end=start + n - 1, runs=runs)
