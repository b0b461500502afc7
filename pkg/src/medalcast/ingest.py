"""Loading and cleaning of the athletes, tallies and hosts CSV files."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import (
    ConsistencyError,
    ImputationError,
    SchemaError,
    UnknownAliasError,
)

MEDALS = ("Gold", "Silver", "Bronze", "NoMedal")
MISSING = None

ATHLETE_COLUMNS = ("name", "sex", "noc", "year", "sport", "event", "medal")
TALLY_COLUMNS = ("noc", "year", "gold", "silver", "bronze", "athletes", "events")
HOST_COLUMNS = ("year", "host")
COUNT_FIELDS = ("gold", "silver", "bronze", "athletes", "events")

# value ranges observed in the full historical data
HISTORICAL_RANGES = {"gold": 83, "silver": 78, "bronze": 77, "athletes": 1109, "events": 47}

_MEDAL_ALIASES = {
    "gold": "Gold",
    "silver": "Silver",
    "bronze": "Bronze",
    "nomedal": "NoMedal",
    "no medal": "NoMedal",
    "none": "NoMedal",
}
_TRUE = {"1", "true", "yes", "y", "t"}
_FALSE = {"0", "false", "no", "n", "f"}


@dataclass(frozen=True)
class AthleteRecord:
    name: str
    noc: str
    sex: str | None
    edition: int
    year: int
    sport: str
    event: str
    medal: str

    @property
    def is_medal(self) -> bool:
        return self.medal != "NoMedal"


@dataclass(frozen=True)
class MedalTally:
    noc: str
    year: int
    gold: int
    silver: int
    bronze: int
    athletes: int
    events: int

    def out_of_range(self) -> list[str]:
        """Fields exceeding the historical ranges (advisory only)."""
        return [f for f in COUNT_FIELDS if getattr(self, f) > HISTORICAL_RANGES[f]]


@dataclass(frozen=True)
class GamesRecord:
    year: int
    host_noc: str | None
    held: bool


class NocRegistry:
    """Case-insensitive alias -> canonical NOC code map.

    Canonical codes resolve to themselves, which makes
    :meth:`canonicalize` idempotent.
    """

    def __init__(self, aliases: dict[str, str]):
        self._map: dict[str, str] = {}
        for alias, code in aliases.items():
            code = code.strip().upper()
            self._map[alias.strip().casefold()] = code
            self._map[code.casefold()] = code

    @classmethod
    def from_csv(cls, path) -> "NocRegistry":
        rows = _read_csv(path, ("alias", "code"))
        return cls({r["alias"]: r["code"] for r in rows if r["alias"] and r["code"]})

    @classmethod
    def default(cls) -> "NocRegistry":
        ref = resources.files("medalcast") / "data" / "noc_aliases.csv"
        with resources.as_file(ref) as path:
            return cls.from_csv(path)

    def canonicalize(self, name: str) -> str:
        key = name.strip().casefold()
        try:
            return self._map[key]
        except KeyError:
            raise UnknownAliasError(f"unknown country name or code {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name.strip().casefold() in self._map

    @property
    def codes(self) -> list[str]:
        return sorted(set(self._map.values()))


def _read_csv(path, required):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = [h.strip() for h in (reader.fieldnames or [])]
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
        reader.fieldnames = header
        return [{k: (v or "").strip() for k, v in row.items() if k is not None} for row in reader]


def _parse_int(text):
    try:
        value = float(text)
    except (TypeError, ValueError):
        return MISSING
    if not math.isfinite(value) or value != int(value):
        return MISSING
    return int(value)


def _parse_medal(text):
    return _MEDAL_ALIASES.get(" ".join(text.split()).casefold())


def _parse_sex(text):
    t = text.strip().upper()[:1]
    return t if t in ("M", "F") else None


def load_hosts(path, registry: NocRegistry | None = None) -> list[GamesRecord]:
    """Read the Games calendar; rows flagged as not held are kept with ``held=False``."""
    rows = _read_csv(path, HOST_COLUMNS)
    seen = set()
    out = []
    for i, row in enumerate(rows, start=2):
        year = _parse_int(row["year"])
        if year is MISSING:
            raise SchemaError(f"{path}: line {i}: bad year {row['year']!r}")
        if year in seen:
            raise SchemaError(f"{path}: duplicate year {year}")
        seen.add(year)
        held_text = row.get("held", "").casefold()
        if held_text in _FALSE:
            held = False
        elif held_text in _TRUE or held_text == "":
            held = True
        else:
            raise SchemaError(f"{path}: line {i}: bad held flag {row['held']!r}")
        host = row["host"] or None
        if host is not None and registry is not None:
            host = registry.canonicalize(host)
        out.append(GamesRecord(year=year, host_noc=host, held=held))
    out.sort(key=lambda g: g.year)
    return out


def held_years(hosts: list[GamesRecord]) -> list[int]:
    return [g.year for g in hosts if g.held]


def load_athletes(path, registry: NocRegistry, hosts: list[GamesRecord] | None = None):
    """Read athlete entries.

    Rows lacking any of noc, year, sport or medal are dropped. Returns
    ``(records, dropped)``. Editions are 1-based positions among held Games
    when ``hosts`` is given, otherwise among the distinct years in the file.
    """
    rows = _read_csv(path, ATHLETE_COLUMNS)
    kept = []
    dropped = 0
    for row in rows:
        year = _parse_int(row["year"])
        medal = _parse_medal(row["medal"]) if row["medal"] else None
        if not row["noc"] or year is MISSING or not row["sport"] or medal is None:
            dropped += 1
            continue
        kept.append((row, year, medal))

    if hosts is not None:
        calendar = held_years(hosts)
    else:
        calendar = sorted({year for _, year, _ in kept})
    edition_of = {y: i + 1 for i, y in enumerate(calendar)}

    records = []
    for row, year, medal in kept:
        if year not in edition_of:
            raise ConsistencyError(f"athlete entry in {year}, which has no held Games")
        records.append(
            AthleteRecord(
                name=row["name"],
                noc=registry.canonicalize(row["noc"]),
                sex=_parse_sex(row["sex"]),
                edition=edition_of[year],
                year=year,
                sport=row["sport"],
                event=row["event"],
                medal=medal,
            )
        )
    return records, dropped


def impute_glitch(series):
    """Fill isolated missing values with the mean of their two neighbours.

    ``None`` and NaN count as missing. Missing values at either end or two
    in a row cannot be filled and raise :class:`ImputationError`.
    """
    values = list(series)
    gaps = [i for i, v in enumerate(values) if _is_missing(v)]
    n = len(values)
    for i in gaps:
        if i == 0 or i == n - 1:
            raise ImputationError(f"missing value at boundary position {i}")
        if _is_missing(values[i - 1]) or _is_missing(values[i + 1]):
            raise ImputationError(f"consecutive missing values around position {i}")
    out = list(values)
    for i in gaps:
        out[i] = (values[i - 1] + values[i + 1]) / 2
    return out


def _is_missing(v):
    return v is None or (isinstance(v, float) and math.isnan(v))


def load_tallies(path, registry: NocRegistry) -> list[MedalTally]:
    """Read per-country medal tallies, imputing glitched count cells.

    Unreadable count cells are filled along each country's chronological
    series; the filled value is rounded half-up to an integer.
    """
    rows = _read_csv(path, TALLY_COLUMNS)
    by_country: dict[str, list[dict]] = {}
    for i, row in enumerate(rows, start=2):
        year = _parse_int(row["year"])
        if not row["noc"] or year is MISSING:
            raise SchemaError(f"{path}: line {i}: missing noc or year")
        noc = registry.canonicalize(row["noc"])
        rec = {"noc": noc, "year": year}
        for f in COUNT_FIELDS:
            v = _parse_int(row[f])
            if v is not MISSING and v < 0:
                raise SchemaError(f"{path}: line {i}: negative {f}")
            rec[f] = v
        by_country.setdefault(noc, []).append(rec)

    out = []
    for noc in sorted(by_country):
        recs = sorted(by_country[noc], key=lambda r: r["year"])
        years = [r["year"] for r in recs]
        if len(set(years)) != len(years):
            raise SchemaError(f"{path}: duplicate (noc, year) rows for {noc}")
        for f in COUNT_FIELDS:
            filled = impute_glitch([r[f] for r in recs])
            for r, v in zip(recs, filled):
                r[f] = int(math.floor(v + 0.5))
        out.extend(MedalTally(**r) for r in recs)
    return out


@dataclass(frozen=True)
class PanelEntry:
    year: int
    edition: int
    gold: int = 0
    silver: int = 0
    bronze: int = 0
    athletes: int = 0
    events: int = 0
    host: bool = False


@dataclass
class Panel:
    """Per-country, chronologically ordered view of the cleaned inputs."""

    years: list[int]
    entries: dict[str, list[PanelEntry]]
    hosts: dict[int, str | None]
    athletes: list[AthleteRecord] = field(default_factory=list)

    @property
    def countries(self) -> list[str]:
        return sorted(self.entries)

    def series(self, noc: str, name: str) -> list[int]:
        return [getattr(e, name) for e in self.entries[noc]]

    def athletes_of(self, noc: str) -> list[AthleteRecord]:
        return [a for a in self.athletes if a.noc == noc]

    def to_rows(self):
        for noc in self.countries:
            for e in self.entries[noc]:
                yield {
                    "noc": noc,
                    "year": e.year,
                    "edition": e.edition,
                    "gold": e.gold,
                    "silver": e.silver,
                    "bronze": e.bronze,
                    "athletes": e.athletes,
                    "events": e.events,
                    "host": int(e.host),
                }

    def write_csv(self, path) -> None:
        fields = ["noc", "year", "edition", *COUNT_FIELDS, "host"]
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
            w.writeheader()
            w.writerows(self.to_rows())


def build_panel(athletes, tallies, hosts) -> Panel:
    """Cross countries with held Games years into a dense panel.

    Countries known only from the athletes file get all-zero tallies.
    """
    calendar = held_years(hosts)
    held = set(calendar)
    all_years = {g.year for g in hosts}
    host_of = {g.year: g.host_noc for g in hosts if g.held}
    edition_of = {y: i + 1 for i, y in enumerate(calendar)}

    known: dict[tuple[str, int], MedalTally] = {}
    for t in tallies:
        if t.year not in held:
            why = "a cancelled Games" if t.year in all_years else "no Games in the hosts file"
            raise ConsistencyError(f"tally for {t.noc} in {t.year}: {why}")
        known[(t.noc, t.year)] = t
    for a in athletes:
        if a.year not in held:
            raise ConsistencyError(f"athlete entry for {a.noc} in {a.year}, which has no held Games")

    countries = {t.noc for t in tallies} | {a.noc for a in athletes}
    countries |= {h for h in host_of.values() if h}
    entries = {}
    for noc in sorted(countries):
        rows = []
        for y in calendar:
            t = known.get((noc, y))
            counts = {f: getattr(t, f) for f in COUNT_FIELDS} if t else {}
            rows.append(PanelEntry(year=y, edition=edition_of[y], host=host_of.get(y) == noc, **counts))
        entries[noc] = rows
    return Panel(years=calendar, entries=entries, hosts=host_of, athletes=list(athletes))


def load_all(athletes_path, tallies_path, hosts_path, registry: NocRegistry | None = None):
    """Load and cross-check the three inputs. Returns ``(panel, report)``."""
    registry = registry or NocRegistry.default()
    hosts = load_hosts(hosts_path, registry)
    athletes, dropped = load_athletes(athletes_path, registry, hosts)
    tallies = load_tallies(tallies_path, registry)
    panel = build_panel(athletes, tallies, hosts)
    report = {
        "athlete_rows_kept": len(athletes),
        "athlete_rows_dropped": dropped,
        "tally_rows": len(tallies),
        "games_held": len(panel.years),
        "games_cancelled": sum(1 for g in hosts if not g.held),
        "countries": len(panel.entries),
        "tallies_out_of_historical_range": sum(1 for t in tallies if t.out_of_range()),
    }
    return panel, report


CLEAN_FILES = {"athletes": "athletes.csv", "tallies": "panel.csv", "hosts": "hosts.csv"}


def write_clean(panel: Panel, directory) -> dict[str, Path]:
    """Write the cleaned panel so that :func:`load_all` reads it back unchanged."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {k: directory / v for k, v in CLEAN_FILES.items()}
    with paths["athletes"].open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ATHLETE_COLUMNS)
        for a in panel.athletes:
            w.writerow([a.name, a.sex or "", a.noc, a.year, a.sport, a.event, a.medal])
    panel.write_csv(paths["tallies"])
    with paths["hosts"].open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HOST_COLUMNS)
        for y in panel.years:
            w.writerow([y, panel.hosts.get(y) or ""])
    return paths
