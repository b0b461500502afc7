import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from medalcast import ingest
from medalcast.errors import ConsistencyError, ImputationError, SchemaError, UnknownAliasError


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def registry():
    return ingest.NocRegistry.default()


@pytest.fixture
def hosts(tmp_path):
    return write(tmp_path / "hosts.csv", "year,host,held\n2000,AUS,1\n2004,GRE,1\n2008,CHN,1\n2012,GBR,1\n")


def test_drops_rows_missing_required_fields(tmp_path, registry, hosts):
    path = write(tmp_path / "a.csv",
                 "name,sex,noc,year,sport,event,medal\n"
                 "A,M,USA,2000,Swimming,100m,Gold\n"
                 "B,F,CHN,2004,Diving,10m,Silver\n"
                 "C,M,GBR,2008,,Sprint,Bronze\n"
                 "D,F,AUS,2008,Rowing,Eights,No medal\n"
                 "E,M,USA,2012,Athletics,Mile,NoMedal\n")
    records, dropped = ingest.load_athletes(path, registry, ingest.load_hosts(hosts))
    assert len(records) == 4 and dropped == 1
    assert [r.edition for r in records] == [1, 2, 3, 4]


def test_full_country_name_is_canonicalised(tmp_path, registry):
    path = write(tmp_path / "a.csv", "name,sex,noc,year,sport,event,medal\nA,M,United States,2000,Swimming,x,Gold\n")
    records, _ = ingest.load_athletes(path, registry)
    assert records[0].noc == "USA"


def test_header_only_file_is_empty(tmp_path, registry):
    path = write(tmp_path / "a.csv", "name,sex,noc,year,sport,event,medal\n")
    assert ingest.load_athletes(path, registry) == ([], 0)


def test_missing_column_is_named(tmp_path, registry):
    path = write(tmp_path / "a.csv", "name,sex,noc,year,event,medal\n")
    with pytest.raises(SchemaError, match="sport"):
        ingest.load_athletes(path, registry)


def test_unknown_alias_raises(registry):
    with pytest.raises(UnknownAliasError):
        registry.canonicalize("Atlantis")


@given(st.sampled_from(["usa", "USA", " United States ", "great britain", "GBR", "chn"]))
def test_canonicalize_is_idempotent(name):
    reg = ingest.NocRegistry.default()
    once = reg.canonicalize(name)
    assert reg.canonicalize(once) == once


def test_cancelled_year_is_kept_but_not_held(tmp_path):
    path = write(tmp_path / "h.csv", "year,host,held\n1936,GER,1\n1940,,0\n1948,GBR,yes\n")
    games = ingest.load_hosts(path)
    assert [g.held for g in games] == [True, False, True]
    assert ingest.held_years(games) == [1936, 1948]


def test_hosts_without_held_column_are_all_held(tmp_path):
    games = ingest.load_hosts(write(tmp_path / "h.csv", "year,host\n2000,AUS\n2004,GRE\n"))
    assert all(g.held for g in games)


def test_duplicate_host_year_is_schema_error(tmp_path):
    with pytest.raises(SchemaError):
        ingest.load_hosts(write(tmp_path / "h.csv", "year,host\n2000,AUS\n2000,GRE\n"))


def test_impute_glitch_examples():
    assert ingest.impute_glitch([10, None, 14]) == [10, 12, 14]
    assert ingest.impute_glitch([5, 5, 5]) == [5, 5, 5]
    with pytest.raises(ImputationError):
        ingest.impute_glitch([None, 3, 4])
    with pytest.raises(ImputationError):
        ingest.impute_glitch([1, None, None, 4])


@given(st.lists(st.integers(0, 100), min_size=3, max_size=30), st.data())
def test_impute_never_changes_present_values(values, data):
    # punch isolated interior holes
    holes = {i for i in range(1, len(values) - 1, 2) if data.draw(st.booleans())}
    series = [None if i in holes else v for i, v in enumerate(values)]
    filled = ingest.impute_glitch(series)
    for i, v in enumerate(series):
        if v is not None:
            assert filled[i] == v
        else:
            assert filled[i] == (series[i - 1] + series[i + 1]) / 2


def test_nan_counts_as_missing():
    assert ingest.impute_glitch([1.0, math.nan, 3.0]) == [1.0, 2.0, 3.0]


def test_tally_imputation_rounds_half_up(tmp_path, registry):
    path = write(tmp_path / "t.csv",
                 "noc,year,gold,silver,bronze,athletes,events\n"
                 "USA,2000,1,0,0,10,5\nUSA,2004,?,0,0,10,5\nUSA,2008,4,0,0,10,5\n")
    tallies = ingest.load_tallies(path, registry)
    assert [t.gold for t in tallies] == [1, 3, 4]


def test_panel_cross_product_and_zero_fill(tmp_path, registry, hosts):
    games = ingest.load_hosts(hosts)
    tallies_path = write(tmp_path / "t.csv",
                         "noc,year,gold,silver,bronze,athletes,events\n"
                         + "".join(f"{c},{y},1,1,1,5,2\n" for c in ("USA", "CHN") for y in (2000, 2004, 2008, 2012)))
    athletes_path = write(tmp_path / "a.csv", "name,sex,noc,year,sport,event,medal\nZ,F,NEP,2004,Judo,x,No medal\n")
    athletes, _ = ingest.load_athletes(athletes_path, registry, games)
    panel = ingest.build_panel(athletes, ingest.load_tallies(tallies_path, registry), games)
    # USA, CHN from tallies; NEP from athletes; AUS, GRE, GBR as hosts
    assert panel.countries == ["AUS", "CHN", "GBR", "GRE", "NEP", "USA"]
    assert sum(len(v) for v in panel.entries.values()) == 6 * 4
    assert panel.series("NEP", "gold") == [0, 0, 0, 0]
    for rows in panel.entries.values():
        years = [e.year for e in rows]
        assert years == sorted(set(years))


def test_tally_in_cancelled_year_is_inconsistent(tmp_path, registry):
    games = ingest.load_hosts(write(tmp_path / "h.csv", "year,host,held\n1936,GER,1\n1940,,0\n"))
    tallies = ingest.load_tallies(write(tmp_path / "t.csv", "noc,year,gold,silver,bronze,athletes,events\nUSA,1940,1,1,1,1,1\n"), registry)
    with pytest.raises(ConsistencyError):
        ingest.build_panel([], tallies, games)


def test_loading_twice_is_identical(fixture_dir):
    args = (fixture_dir / "athletes.csv", fixture_dir / "tallies.csv", fixture_dir / "hosts.csv")
    a, ra = ingest.load_all(*args)
    b, rb = ingest.load_all(*args)
    assert a.entries == b.entries and a.athletes == b.athletes and ra == rb


def test_clean_dump_round_trips(fixture_panel, tmp_path):
    paths = ingest.write_clean(fixture_panel, tmp_path)
    again, _ = ingest.load_all(paths["athletes"], paths["tallies"], paths["hosts"])
    assert again.entries == fixture_panel.entries
    assert again.athletes == fixture_panel.athletes
