"""JSONL file formats shared by the CLI, the generator, and the tests.

One record per line, UTF-8:
  items.jsonl      {"id", "title", "ts", "concepts": {term: weight}, "dense"?: [..]}
  histories.jsonl  {"user_id", "item_ids": [..]}
  playlists.jsonl  {"playlist_id", "name", "item_ids": [..]}
  journeys.jsonl   {"user_id", "journeys": [{"idx", "item_ids", "top_terms"}], "pruned": [..]}
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .concepts import ConceptVector, InvalidVectorError, Item, UserHistory, top_terms
from .extraction import ExtractionResult

__all__ = [
    "DataError",
    "Playlist",
    "read_items",
    "write_items",
    "read_histories",
    "write_histories",
    "read_playlists",
    "write_playlists",
    "write_journeys",
    "read_journeys",
    "read_assignment",
    "write_assignment",
]


class DataError(ValueError):
    """Malformed or inconsistent input data; message carries file:line."""


@dataclass
class Playlist:
    playlist_id: str
    name: str
    item_ids: list[str]


def _dump(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))


def _records(path: str | Path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise DataError(f"{path}:{lineno}: expected a JSON object")
            yield lineno, record


def _require(record: dict, keys: Sequence[str], path: str | Path, lineno: int) -> None:
    missing = [k for k in keys if k not in record]
    if missing:
        raise DataError(f"{path}:{lineno}: missing required field(s) {missing}")


def read_items(path: str | Path) -> dict[str, Item]:
    """Load the item corpus; ids must be unique and dense lengths uniform."""
    items: dict[str, Item] = {}
    dense_len: int | None = None
    for lineno, record in _records(path):
        _require(record, ("id", "title", "ts", "concepts"), path, lineno)
        item_id = str(record["id"])
        if item_id in items:
            raise DataError(f"{path}:{lineno}: duplicate item id {item_id!r}")
        dense = record.get("dense")
        if dense is not None:
            if dense_len is None:
                dense_len = len(dense)
            elif len(dense) != dense_len:
                raise DataError(
                    f"{path}:{lineno}: dense length {len(dense)} != corpus length {dense_len}"
                )
            dense = tuple(float(x) for x in dense)
        try:
            concepts = ConceptVector(record["concepts"])
            items[item_id] = Item(
                id=item_id,
                title=str(record["title"]),
                timestamp=int(record["ts"]),
                concepts=concepts,
                dense=dense,
            )
        except (InvalidVectorError, TypeError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
    return items


def write_items(path: str | Path, items: Iterable[Item]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for item in items:
            record: dict = {
                "id": item.id,
                "title": item.title,
                "ts": item.timestamp,
                "concepts": item.concepts.to_dict(),
            }
            if item.dense is not None:
                record["dense"] = list(item.dense)
            handle.write(_dump(record) + "\n")


def read_histories(
    path: str | Path, items: dict[str, Item], sort_by_ts: bool = True
) -> list[UserHistory]:
    """Load user histories, resolving item ids against the corpus.

    Items are stably sorted by timestamp (ties keep file order) unless
    ``sort_by_ts`` is disabled.
    """
    histories: list[UserHistory] = []
    for lineno, record in _records(path):
        _require(record, ("user_id", "item_ids"), path, lineno)
        resolved = []
        for item_id in record["item_ids"]:
            item = items.get(str(item_id))
            if item is None:
                raise DataError(f"{path}:{lineno}: unknown item id {item_id!r}")
            resolved.append(item)
        if sort_by_ts:
            resolved.sort(key=lambda it: it.timestamp)
        histories.append(UserHistory(str(record["user_id"]), resolved))
    return histories


def write_histories(path: str | Path, histories: Iterable[UserHistory]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for history in histories:
            record = {"user_id": history.user_id, "item_ids": [it.id for it in history.items]}
            handle.write(_dump(record) + "\n")


def read_playlists(path: str | Path) -> list[Playlist]:
    playlists = []
    seen = set()
    for lineno, record in _records(path):
        _require(record, ("playlist_id", "name", "item_ids"), path, lineno)
        pid = str(record["playlist_id"])
        if pid in seen:
            raise DataError(f"{path}:{lineno}: duplicate playlist id {pid!r}")
        seen.add(pid)
        playlists.append(Playlist(pid, str(record["name"]), [str(i) for i in record["item_ids"]]))
    return playlists


def write_playlists(path: str | Path, playlists: Iterable[Playlist]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for playlist in playlists:
            record = {
                "playlist_id": playlist.playlist_id,
                "name": playlist.name,
                "item_ids": playlist.item_ids,
            }
            handle.write(_dump(record) + "\n")


def write_journeys(
    path: str | Path, results: Iterable[ExtractionResult], top_k: int = 10
) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for result in results:
            record = {
                "user_id": result.user_id,
                "journeys": [
                    {
                        "idx": j.creation_index,
                        "item_ids": j.members,
                        "top_terms": [[t, w] for t, w in top_terms(j.representation, top_k)]
                        if j.representation
                        else [],
                    }
                    for j in result.journeys
                ],
                "pruned": result.pruned_items,
            }
            handle.write(_dump(record) + "\n")


def read_journeys(path: str | Path) -> list[dict]:
    """Raw journey records; member ids are resolved by the caller."""
    out = []
    for lineno, record in _records(path):
        _require(record, ("user_id", "journeys", "pruned"), path, lineno)
        for journey in record["journeys"]:
            if "idx" not in journey or "item_ids" not in journey:
                raise DataError(f"{path}:{lineno}: journey entry needs 'idx' and 'item_ids'")
        out.append(record)
    return out


def read_assignment(path: str | Path):
    from .baselines import GlobalAssignment

    with open(path, encoding="utf-8") as handle:
        try:
            record = json.load(handle)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: malformed JSON ({exc.msg})") from exc
    for key in ("K", "centroid_dim", "assignment"):
        if key not in record:
            raise DataError(f"{path}: missing field {key!r}")
    return GlobalAssignment(
        K=int(record["K"]),
        centroid_dim=int(record["centroid_dim"]),
        assignment={str(k): int(v) for k, v in record["assignment"].items()},
    )


def write_assignment(path: str | Path, assignment) -> None:
    record = {
        "K": assignment.K,
        "centroid_dim": assignment.centroid_dim,
        "assignment": assignment.assignment,
    }
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(_dump(record) + "\n")
