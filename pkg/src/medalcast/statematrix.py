"""Per-country LSTM input state: athlete aggregate, team rows, host row."""

from __future__ import annotations

from importlib import resources

import numpy as np

from .embed import EmbeddingCodebook, athlete_vector, summarize_athletes
from .errors import DomainRangeError, ShapeError, UnknownSportError
from .pca import ProjectionMatrix, project

N_SPORTS = 71
TEAM_ROWS = 10
STATE_ROWS = N_SPORTS + TEAM_ROWS + 1
WIDTH = 5
MAX_CONSECUTIVE = 5


class SportIndex:
    """Bijection between sport names and athlete-aggregate rows."""

    def __init__(self, names):
        names = list(names)
        if len(set(names)) != len(names):
            raise ValueError("duplicate sport names")
        self.names = names
        self._row = {n: i for i, n in enumerate(names)}

    @classmethod
    def default(cls) -> "SportIndex":
        text = (resources.files("medalcast") / "data" / "sports.txt").read_text(encoding="utf-8")
        return cls([line.strip() for line in text.splitlines() if line.strip()])

    def __len__(self):
        return len(self.names)

    def __contains__(self, name):
        return name in self._row

    def row(self, name: str) -> int:
        try:
            return self._row[name]
        except KeyError:
            raise UnknownSportError(f"sport {name!r} is not in the sport index") from None


def accumulate_athletes(
    records,
    t: int,
    codebook: EmbeddingCodebook,
    P: ProjectionMatrix,
    index: SportIndex,
    window: int = 5,
    max_consecutive: int = MAX_CONSECUTIVE,
) -> np.ndarray:
    """Sum projected athlete vectors into sport rows as of edition ``t``.

    ``records`` should hold one country's entries. Athletes whose latest
    entry is older than the ``window`` most recent Games are skipped, as are
    athletes with a streak of more than ``max_consecutive`` Games. Each
    athlete adds their vector once to every sport they entered within the
    window.
    """
    if window < 1:
        raise DomainRangeError("window must be at least 1")
    M = np.zeros((len(index), P.k))
    oldest = t - window + 1
    for s in summarize_athletes(records, upto=t):
        if s.last_edition < oldest or s.longest_streak > max_consecutive:
            continue
        rows = [index.row(sport) for sport in s.programs_since(oldest)]
        v = project(athlete_vector(codebook, s), P)
        for r in rows:
            M[r] += v
    return M


def host_row(is_host_next: bool) -> np.ndarray:
    return np.ones(WIDTH) if is_host_next else np.zeros(WIDTH)


def assemble(M, N, host) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    N = np.asarray(N, dtype=np.float64)
    host = np.asarray(host, dtype=np.float64).reshape(1, -1)
    if M.shape != (N_SPORTS, WIDTH) or N.shape != (TEAM_ROWS, WIDTH) or host.shape != (1, WIDTH):
        raise ShapeError(f"cannot assemble shapes {M.shape}, {N.shape}, {host.shape}")
    return np.vstack([M, N, host])


def split(X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of :func:`assemble`."""
    X = np.asarray(X)
    if X.shape != (STATE_ROWS, WIDTH):
        raise ShapeError(f"state must be {STATE_ROWS}x{WIDTH}, got {X.shape}")
    return X[:N_SPORTS], X[N_SPORTS : N_SPORTS + TEAM_ROWS], X[-1]
