"""Seeded synthetic panels with known structure, for tests and the fixture.

Each country has a latent strength that follows AR(1) noise around a
linear trend. All five team counts are affine in that strength, so the
team channels carry the autoregressive signal. Gold additionally depends
on the size of the country's previous squad through a saturating (tanh)
response, and hosting adds a fixed bonus.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .statematrix import SportIndex

COUNTRIES = ("USA", "CHN", "GBR", "FRA", "GER", "ITA", "JPN", "AUS", "KOR", "NED", "BAN", "NEP")
HOST_BONUS = 2


@dataclass
class SyntheticSpec:
    n_countries: int = 8
    n_games: int = 16
    n_sports: int = 6
    first_year: int = 1960
    phi: float = 0.8
    noise: float = 0.3
    trend: tuple[float, float] = (1.0, 2.0)
    medal_free: int = 1  # trailing countries that never win a medal


def _round(x) -> int:
    return int(np.floor(max(0.0, x) + 0.5))


def generate(seed: int, spec: SyntheticSpec | None = None):
    """Return ``(athlete_rows, tally_rows, host_rows)`` as lists of dicts."""
    spec = spec or SyntheticSpec()
    if spec.n_countries > len(COUNTRIES):
        raise ValueError(f"at most {len(COUNTRIES)} synthetic countries")
    rng = np.random.default_rng(seed)
    nocs = COUNTRIES[: spec.n_countries]
    sports = SportIndex.default().names[: spec.n_sports]
    years = [spec.first_year + 4 * i for i in range(spec.n_games)]
    medalists = nocs[: spec.n_countries - spec.medal_free]
    hosts = [medalists[i] for i in rng.integers(0, len(medalists), size=spec.n_games)]

    athletes, tallies = [], []
    for c, noc in enumerate(nocs):
        winner = noc in medalists
        base = rng.uniform(4.0, 14.0) if winner else 0.0
        trend = rng.uniform(*spec.trend) if winner else 0.0
        prev_squad = 5
        dev = 0.0
        roster: list[tuple[str, str, int]] = []  # (name, sport, games remaining)
        serial = 0
        for t, year in enumerate(years):
            dev = spec.phi * dev + rng.normal(0.0, spec.noise)
            level = max(0.0, base + trend * t + dev) if winner else 0.0

            roster = [(n, s, k - 1) for n, s, k in roster if k > 1]
            squad = int(rng.integers(2, 9)) + int(level // 3)
            while len(roster) < squad:
                serial += 1
                roster.append((f"{noc}-{serial:03d}", sports[int(rng.integers(len(sports)))], int(rng.integers(1, 4))))
            roster = roster[:squad]

            host = hosts[t] == noc
            gold = _round(0.5 * level + 3.0 * np.tanh((prev_squad - 5) / 3.0) + (HOST_BONUS if host else 0)) if winner else 0
            silver = _round(0.4 * level) if winner else 0
            bronze = _round(0.35 * level + 0.5) if winner else 0
            tallies.append({
                "noc": noc, "year": year, "gold": gold, "silver": silver, "bronze": bronze,
                "athletes": _round(10 + 3 * level), "events": min(47, _round(5 + 0.5 * level)),
            })
            prev_squad = squad
            awards = ["Gold"] * gold + ["Silver"] * silver + ["Bronze"] * bronze
            for i, (name, sport, _) in enumerate(roster):
                athletes.append({
                    "name": name, "sex": "F" if (c + int(name[-3:])) % 3 == 0 else "M",
                    "noc": noc, "year": year, "sport": sport, "event": f"{sport} open",
                    "medal": awards[i] if i < len(awards) else "No medal",
                })
    host_rows = [{"year": y, "host": h} for y, h in zip(years, hosts)]
    return athletes, tallies, host_rows


def _write(path: Path, header, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def write_panel(directory, seed: int, spec: SyntheticSpec | None = None) -> dict[str, Path]:
    """Write athletes.csv, tallies.csv and hosts.csv; returns their paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    athletes, tallies, hosts = generate(seed, spec)
    paths = {
        "athletes": directory / "athletes.csv",
        "tallies": directory / "tallies.csv",
        "hosts": directory / "hosts.csv",
    }
    _write(paths["athletes"], ["name", "sex", "noc", "year", "sport", "event", "medal"], athletes)
    _write(paths["tallies"], ["noc", "year", "gold", "silver", "bronze", "athletes", "events"], tallies)
    _write(paths["hosts"], ["year", "host"], hosts)
    return paths
