import io
import json
from datetime import date, datetime, timedelta, timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tdcomm.ingest import (
    GENERIC_HASHTAGS,
    PostFormatError,
    PostRecord,
    Stoplist,
    apply_stoplist,
    bin_by_day,
    default_stoplist_text,
    normalize_hashtags,
    parse_posts,
    parse_time,
    parse_utc_offset,
)


def jsonl(*objs) -> io.BytesIO:
    return io.BytesIO("".join(json.dumps(o) + "\n" for o in objs).encode())


def rec(user, tags, when="2015-05-11T10:00:00Z"):
    return PostRecord(user, parse_time(when), tuple(tags))


def test_single_record_normalized():
    out = parse_posts(jsonl({"user": "a", "time": "2015-05-11T10:00:00Z", "hashtags": ["#Food"]}))
    assert out.records == [PostRecord("a", datetime(2015, 5, 11, 10, tzinfo=timezone.utc), ("food",))]
    assert out.skipped == 0


def test_empty_stream():
    out = parse_posts(io.BytesIO(b""))
    assert out.records == [] and out.skipped == 0


def test_missing_user_skipped():
    good = {"user": "a", "time": 1431338400, "hashtags": ["x"]}
    out = parse_posts(jsonl(good, {"time": 1431338400, "hashtags": ["x"]}, good, good))
    assert len(out.records) == 3
    assert out.skipped == 1
    assert "line 2" in out.samples[0]


def test_mostly_malformed_is_fatal():
    with pytest.raises(PostFormatError, match="malformed"):
        parse_posts(io.BytesIO(b'{"user": "a"}\nnot json\n{"user":"b","time":0,"hashtags":[]}\n'))


def test_unreadable_stream():
    class Broken(io.RawIOBase):
        def readable(self):
            return True

        def readinto(self, b):
            raise OSError("disk gone")

    with pytest.raises(OSError):
        parse_posts(io.BufferedReader(Broken()))


def test_csv_format():
    data = "user,time,hashtags\na,2015-05-11T10:00:00Z,#Vino pasta\nb,1431338400,\n,2015-05-11,x\n"
    out = parse_posts(io.BytesIO(data.encode()), "csv")
    assert [r.hashtags for r in out.records] == [("vino", "pasta"), ()]
    assert out.skipped == 1


def test_csv_requires_header():
    with pytest.raises(PostFormatError, match="header"):
        parse_posts(io.BytesIO(b"a,2015-05-11,x\n"), "csv")


def test_time_forms():
    assert parse_time(1431338400) == datetime(2015, 5, 11, 10, tzinfo=timezone.utc)
    assert parse_time("2015-05-11T12:00:00+02:00") == datetime(2015, 5, 11, 10, tzinfo=timezone.utc)
    assert parse_time("2015-05-11T10:00:00.750Z").microsecond == 0
    with pytest.raises(ValueError):
        parse_time("yesterday")


def test_normalization_dedups_and_uses_nfc():
    decomposed = "café"
    assert normalize_hashtags(["#Café", decomposed, "CAFÉ"]) == ("café",)


@given(st.text(alphabet=st.characters(categories=("Lu", "Ll", "Nd")), min_size=1, max_size=12))
def test_normalization_case_stable(tag):
    assert normalize_hashtags([tag.upper()]) == normalize_hashtags([tag.upper().lower()])


def test_default_stoplist_is_the_eleven_generic_tags():
    s = Stoplist.default()
    assert s.generic == frozenset(GENERIC_HASHTAGS)
    assert len(s.generic) == 11
    assert s.query_keywords == {"expo2015"}
    assert Stoplist.from_lines(default_stoplist_text().splitlines()).generic == s.generic


def test_stoplist_removes_query_keyword():
    kept, dropped = apply_stoplist([rec("a", ["expo2015", "vino"])], Stoplist.default())
    assert kept[0].hashtags == ("vino",) and dropped == 0


def test_stoplist_removes_generic_tags():
    kept, _ = apply_stoplist([rec("a", ["expomilano", "food", "milan"])], Stoplist.default())
    assert kept[0].hashtags == ("food",)


def test_stoplist_drops_emptied_record():
    kept, dropped = apply_stoplist([rec("a", ["expo", "milano"]), rec("b", ["x"])], Stoplist.default())
    assert [r.user for r in kept] == ["b"] and dropped == 1


def test_noexpo_kept_unless_requested():
    r = [rec("a", ["noexpo", "expo2015"])]
    assert apply_stoplist(r, Stoplist.default())[0][0].hashtags == ("noexpo",)
    assert apply_stoplist(r, Stoplist.default(("expo2015", "noexpo")))[1] == 1


def test_stoplist_file_comments():
    s = Stoplist.from_lines(["# a comment", "#Food", "", "vino"])
    assert s.generic == {"food", "vino"}


def test_stoplist_rejects_unnormalized():
    with pytest.raises(ValueError):
        Stoplist(frozenset({"#Food"}))


tags = st.lists(st.sampled_from(["expo2015", "expo", "milan", "vino", "food", "pasta", "news"]), unique=True)


@given(st.lists(tags, max_size=8))
def test_stoplist_idempotent(taglists):
    records = [rec(f"u{i}", t) for i, t in enumerate(taglists)]
    once, _ = apply_stoplist(records, Stoplist.default())
    twice, dropped = apply_stoplist(once, Stoplist.default())
    assert once == twice and dropped == 0


def test_window_of_161_days():
    binning, days = bin_by_day([], date(2015, 5, 11), date(2015, 10, 18))
    assert binning.n_days == 161 and len(days) == 161


def test_day_boundaries():
    records = [
        rec("a", ["x"], "2015-05-11T23:59:59Z"),
        rec("b", ["x"], "2015-05-10T12:00:00Z"),
        rec("c", ["x"], "2015-05-12T00:00:00Z"),
    ]
    _, days = bin_by_day(records, date(2015, 5, 11), date(2015, 5, 20))
    assert [r.user for r in days[0]] == ["a"]
    assert [r.user for r in days[1]] == ["c"]
    assert sum(map(len, days)) == 2


def test_utc_offset_shifts_days():
    r = [rec("a", ["x"], "2015-05-11T23:00:00Z")]
    _, days = bin_by_day(r, date(2015, 5, 11), date(2015, 5, 12), parse_utc_offset("+02:00"))
    assert len(days[1]) == 1
    assert parse_utc_offset("-05:30") == -timedelta(hours=5, minutes=30)


def test_inverted_window():
    with pytest.raises(ValueError, match="inverted"):
        bin_by_day([], date(2015, 5, 12), date(2015, 5, 11))


@given(st.lists(st.integers(0, 40 * 86400), max_size=30))
def test_binning_partitions_retained(offsets):
    t0 = datetime(2015, 5, 5, tzinfo=timezone.utc)
    records = [PostRecord("u", t0 + timedelta(seconds=s), ("x",)) for s in offsets]
    start, end = date(2015, 5, 11), date(2015, 6, 1)
    _, days = bin_by_day(records, start, end)
    inside = sum(start <= r.time.date() <= end for r in records)
    assert sum(map(len, days)) == inside
