"""On-disk formats. Every data file starts with a one-line metadata header."""

from __future__ import annotations

import csv
import hashlib
import json
from datetime import date
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from . import __version__
from .ingest import PostRecord, parse_time
from .tdnet import TemporalGraph

META_PREFIX = "# tdcomm "


def config_hash(config: Mapping) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def make_meta(config: Mapping, **extra) -> dict:
    meta = {"version": __version__, "config_hash": config_hash(config), "seed": config.get("seed")}
    meta.update(extra)
    meta["config"] = dict(config)
    return meta


def meta_line(meta: Mapping) -> str:
    return META_PREFIX + json.dumps(meta, sort_keys=True, separators=(",", ":"), default=str) + "\n"


def read_meta(path) -> dict | None:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    if first.startswith(META_PREFIX):
        return json.loads(first[len(META_PREFIX):])
    if first.startswith("{"):
        obj = json.loads(first)
        return obj.get("_meta") if isinstance(obj, dict) else None
    return None


def _data_lines(fh: IO[str]) -> Iterable[str]:
    for line in fh:
        if line.startswith(META_PREFIX) or not line.strip():
            continue
        yield line.rstrip("\n")


# graph TSV ------------------------------------------------------------------

def write_graph(g: TemporalGraph, path, meta: Mapping) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(meta_line(meta))
        fh.write("#nodes\n")
        for i, (u, d) in enumerate(zip(g.users, g.days)):
            fh.write(f"{i}\t{u}\t{int(d)}\n")
        fh.write("#edges\n")
        for u, v, w in zip(g.src, g.dst, g.weight):
            fh.write(f"{int(u)}\t{int(v)}\t{w:g}\n")


def read_graph(path, n_days: int | None = None) -> TemporalGraph:
    users, days, edges = [], [], []
    section = None
    with open(path, encoding="utf-8") as fh:
        for line in _data_lines(fh):
            if line in ("#nodes", "#edges"):
                section = line
                continue
            parts = line.split("\t")
            if section == "#nodes":
                if int(parts[0]) != len(users):
                    raise ValueError(f"{path}: node ids must be dense and ordered")
                users.append(parts[1])
                days.append(int(parts[2]))
            elif section == "#edges":
                edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
            else:
                raise ValueError(f"{path}: data before #nodes header")
    if section is None:
        raise ValueError(f"{path}: not a graph file")
    meta = read_meta(path) or {}
    if n_days is None:
        n_days = meta.get("n_days", (max(days) + 1) if days else 0)
    return TemporalGraph.from_edges(len(users), edges, days=days, users=users, n_days=n_days)


# partition TSV --------------------------------------------------------------

def write_partition(g: TemporalGraph, ranked_labels: np.ndarray, path, meta: Mapping) -> None:
    order = sorted(range(g.n_nodes), key=lambda i: (int(g.days[i]), g.users[i]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(meta_line(meta))
        fh.write("user\tday\tcommunity_id\n")
        for i in order:
            fh.write(f"{g.users[i]}\t{int(g.days[i])}\t{int(ranked_labels[i])}\n")


def read_partition(path) -> dict[tuple[str, int], int]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in _data_lines(fh):
            if line.startswith("user\t"):
                continue
            user, day, c = line.split("\t")
            out[(user, int(day))] = int(c)
    return out


def labels_for_graph(g: TemporalGraph, assignment: Mapping[tuple[str, int], int]) -> np.ndarray:
    try:
        return np.array([assignment[g.node_label(i)] for i in range(g.n_nodes)], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"partition does not cover node {exc.args[0]}") from None


# day-binned record store ----------------------------------------------------

def write_records(per_day: Sequence[Sequence[PostRecord]], path, meta: Mapping) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps({"_meta": meta}, sort_keys=True, default=str) + "\n")
        for d, records in enumerate(per_day):
            for r in records:
                obj = {
                    "day": d,
                    "user": r.user,
                    "time": r.time.strftime("%Y-%m-%dT%H:%M:%SZ"),
                    "hashtags": list(r.hashtags),
                }
                fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def read_records(path) -> tuple[dict, list[list[PostRecord]]]:
    """Return (metadata, per-day record lists)."""
    with open(path, encoding="utf-8") as fh:
        head = json.loads(fh.readline() or "{}")
        meta = head.get("_meta")
        if meta is None or "n_days" not in meta:
            raise ValueError(f"{path}: not a record store")
        per_day: list[list[PostRecord]] = [[] for _ in range(meta["n_days"])]
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            per_day[obj["day"]].append(PostRecord(obj["user"], parse_time(obj["time"]), tuple(obj["hashtags"])))
    return meta, per_day


# tabular outputs ------------------------------------------------------------

def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], meta: Mapping) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(meta_line(meta))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["" if x is None else (f"{x:.12g}" if isinstance(x, float) else x) for x in row])


def read_csv(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(_data_lines(fh)))


def write_json(path, obj: Mapping, meta: Mapping) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"_meta": meta, **obj}, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def write_jsonl(path, rows: Iterable[Mapping], meta: Mapping) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps({"_meta": meta}, sort_keys=True, default=str) + "\n")
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def iso(d: date) -> str:
    return d.isoformat()


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
