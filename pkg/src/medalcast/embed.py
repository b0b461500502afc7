"""Fixed (untrained) 10-dimensional encodings of categories and counts.

Categorical values get pseudo-random codewords keyed by a hash of
``(seed, category, value)``, so a codeword never depends on which other
values happen to be registered. Integer counts get a sinusoidal encoding
whose pairwise distance grows with the count difference, which is what
makes nearest-neighbour decoding back to counts work.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainRangeError, SchemaError, UnknownCategoryError
from .ingest import MEDALS, HISTORICAL_RANGES, AthleteRecord

SEED = 42
DIM = 10
CATEGORIES = ("noc", "edition", "games", "awards", "sport")
SCALAR_FEATURES = ("gold", "silver", "bronze", "athletes", "events")
AWARD_RANK = {"Gold": 3, "Silver": 2, "Bronze": 1, "NoMedal": 0}

_MASK = (1 << 64) - 1


def _stable_hash(text: str) -> int:
    return int.from_bytes(hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest(), "little")


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def categorical_codeword(seed: int, category: str, value, dim: int = DIM) -> np.ndarray:
    """Uniform[-1, 1] codeword drawn from a SplitMix64 stream keyed by the inputs."""
    _, state = _splitmix64((seed & _MASK) ^ _stable_hash(category))
    _, state = _splitmix64(state ^ _stable_hash(str(value)))
    out = np.empty(dim)
    for k in range(dim):
        state, z = _splitmix64(state)
        out[k] = (z >> 11) * (1.0 / (1 << 53)) * 2.0 - 1.0
    return out


def scalar_codeword(count, dim: int = DIM) -> np.ndarray:
    """Sinusoidal encoding: sin/cos pairs at wavelengths 100**(2k/dim)."""
    count = np.asarray(count, dtype=np.float64)
    out = np.empty(count.shape + (dim,))
    for k in range(dim // 2):
        freq = 100.0 ** (-2 * k / dim)
        out[..., 2 * k] = np.sin(count * freq)
        out[..., 2 * k + 1] = np.cos(count * freq)
    return out


@dataclass
class EmbeddingCodebook:
    seed: int = SEED
    dim: int = DIM
    categories: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)
    scalars: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def build(cls, vocabularies, maxima=None, seed: int = SEED, dim: int = DIM) -> "EmbeddingCodebook":
        """Build codewords for every registered value and check them.

        ``vocabularies`` maps category name to an iterable of values;
        ``maxima`` maps scalar feature to its largest allowed count.
        """
        cb = cls(seed=seed, dim=dim)
        for cat, values in vocabularies.items():
            cb.categories[cat] = {str(v): categorical_codeword(seed, cat, v, dim) for v in values}
        for feat, top in (maxima or HISTORICAL_RANGES).items():
            cb.scalars[feat] = scalar_codeword(np.arange(int(top) + 1), dim)
        cb.check()
        return cb

    def check(self) -> None:
        """Injectivity within each category and monotone scalar distances."""
        for cat, table in self.categories.items():
            seen = {}
            for value, vec in table.items():
                key = vec.tobytes()
                if key in seen:
                    raise SchemaError(f"codeword collision in {cat}: {seen[key]!r} and {value!r}")
                seen[key] = value
        for feat, table in self.scalars.items():
            if len(table) < 4:
                continue
            d1 = np.linalg.norm(table[1:-2] - table[:-3], axis=1)
            d3 = np.linalg.norm(table[3:] - table[:-3], axis=1)
            bad = np.nonzero(~(d1 < d3))[0]
            if bad.size:
                raise SchemaError(f"{feat} encoding is not distance-monotone at count {int(bad[0])}")

    def embed_category(self, category: str, value) -> np.ndarray:
        try:
            return self.categories[category][str(value)].copy()
        except KeyError:
            raise UnknownCategoryError(f"{category} value {value!r} is not in the codebook") from None

    def embed_scalar(self, feature: str, count: int) -> np.ndarray:
        table = self.scalars[feature]
        if int(count) != count or not 0 <= count < len(table):
            raise DomainRangeError(f"{feature} count {count} outside [0, {len(table) - 1}]")
        return table[int(count)].copy()

    def entries(self, feature: str) -> list[tuple[int, np.ndarray]]:
        """``(count, codeword)`` pairs for a scalar feature, in count order."""
        return [(i, v) for i, v in enumerate(self.scalars[feature])]

    def maximum(self, feature: str) -> int:
        return len(self.scalars[feature]) - 1

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "dim": self.dim,
            "categories": {c: {k: v.tolist() for k, v in t.items()} for c, t in self.categories.items()},
            "scalars": {f: t.tolist() for f, t in self.scalars.items()},
        }

    @classmethod
    def from_json(cls, doc: dict) -> "EmbeddingCodebook":
        return cls(
            seed=doc["seed"],
            dim=doc["dim"],
            categories={c: {k: np.array(v) for k, v in t.items()} for c, t in doc["categories"].items()},
            scalars={f: np.array(t) for f, t in doc["scalars"].items()},
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "EmbeddingCodebook":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class AthleteSummary:
    """One athlete's history aggregated up to some edition."""

    key: tuple
    noc: str
    first_edition: int
    games: int
    best_award: str
    sport: str
    last_edition: int
    longest_streak: int
    programs: tuple[tuple[int, str], ...]

    def programs_since(self, edition: int) -> list[str]:
        return sorted({s for e, s in self.programs if e >= edition})


def summarize_athletes(records: list[AthleteRecord], upto: int | None = None) -> list[AthleteSummary]:
    """Aggregate athlete entries, optionally only those up to edition ``upto``.

    The primary sport is the one with the most entries (ties alphabetical);
    the best award uses Gold > Silver > Bronze > NoMedal.
    """
    groups: dict[tuple, list[AthleteRecord]] = {}
    for r in records:
        if upto is not None and r.edition > upto:
            continue
        groups.setdefault((r.name, r.noc, r.sex or ""), []).append(r)
    out = []
    for key in sorted(groups):
        recs = groups[key]
        editions = sorted({r.edition for r in recs})
        streak = best = 1
        for a, b in zip(editions, editions[1:]):
            streak = streak + 1 if b == a + 1 else 1
            best = max(best, streak)
        counts = Counter(r.sport for r in recs)
        sport = min(counts, key=lambda s: (-counts[s], s))
        award = max((r.medal for r in recs), key=AWARD_RANK.__getitem__)
        out.append(
            AthleteSummary(
                key=key,
                noc=key[1],
                first_edition=editions[0],
                games=len(editions),
                best_award=award,
                sport=sport,
                last_edition=editions[-1],
                longest_streak=best,
                programs=tuple(sorted({(r.edition, r.sport) for r in recs})),
            )
        )
    return out


def athlete_vector(codebook: EmbeddingCodebook, summary: AthleteSummary) -> np.ndarray:
    """Concatenate the NOC, edition, games, award and sport codewords (50 values)."""
    return np.concatenate(
        [
            codebook.embed_category("noc", summary.noc),
            codebook.embed_category("edition", summary.first_edition),
            codebook.embed_category("games", summary.games),
            codebook.embed_category("awards", summary.best_award),
            codebook.embed_category("sport", summary.sport),
        ]
    )


def team_matrix(codebook: EmbeddingCodebook, tally) -> np.ndarray:
    """10x5 matrix whose columns encode gold, silver, bronze, athletes, events."""
    return np.column_stack([codebook.embed_scalar(f, getattr(tally, f)) for f in SCALAR_FEATURES])


def default_vocabularies(nocs, n_editions: int, sports) -> dict[str, list]:
    return {
        "noc": sorted(set(nocs)),
        "edition": list(range(1, n_editions + 1)),
        "games": list(range(1, n_editions + 1)),
        "awards": list(MEDALS),
        "sport": list(sports),
    }
