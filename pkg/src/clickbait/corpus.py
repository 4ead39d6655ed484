"""Ingestion of labeled headline files and social-media post corpora.

Labeled headlines travel as UTF-8 TSV (``label<TAB>text``); post corpora are
UTF-8 line-delimited JSON records. Loaders are pure functions of their input
files and the returned records are frozen, so concurrent loads of distinct
files are safe.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Mapping

logger = logging.getLogger(__name__)

NON_CLICKBAIT = "non_clickbait"
CLICKBAIT = "clickbait"
LABELS = (NON_CLICKBAIT, CLICKBAIT)

_LABEL_TOKENS = {
    "0": NON_CLICKBAIT,
    "1": CLICKBAIT,
    NON_CLICKBAIT: NON_CLICKBAIT,
    CLICKBAIT: CLICKBAIT,
}

CATEGORIES = (
    "broadcast",
    "print",
    "clickbait_media",
    "conspiracy",
    "junk_science",
    "satire",
)
MAINSTREAM_CATEGORIES = frozenset({"broadcast", "print"})
MEDIA_GROUPS = ("mainstream", "unreliable")
POST_TYPES = ("link", "video")
REACTION_KEYS = ("like", "love", "haha", "wow", "sad", "angry")


class CorpusFormatError(ValueError):
    """Raised for malformed input files; the message names the offending
    file and line."""


@dataclass(frozen=True, slots=True)
class LabeledHeadline:
    """One headline with its manually assigned class."""

    text: str
    label: str

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("headline text is empty after trimming")
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")


@dataclass(frozen=True, slots=True)
class Post:
    """One social-media post: identity, content, and engagement counts.

    ``body`` is only allowed for link posts, and the category must be
    consistent with the media group (broadcast/print are mainstream,
    everything else unreliable). Treat instances as read-only.
    """

    media_name: str
    media_group: str
    category: str
    post_type: str
    headline: str
    timestamp: datetime
    message: str | None = None
    body: str | None = None
    link_url: str | None = None
    reactions: Mapping[str, int] = field(default_factory=dict)
    shares: int = 0
    comments: int = 0

    def __post_init__(self) -> None:
        if self.media_group not in MEDIA_GROUPS:
            raise ValueError(f"unknown media_group {self.media_group!r}")
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}")
        mainstream = self.category in MAINSTREAM_CATEGORIES
        if mainstream != (self.media_group == "mainstream"):
            raise ValueError(
                f"category {self.category!r} is inconsistent with "
                f"media_group {self.media_group!r}"
            )
        if self.post_type not in POST_TYPES:
            raise ValueError(f"unknown post_type {self.post_type!r}")
        if self.post_type == "video" and self.body is not None:
            raise ValueError("video posts cannot carry an article body")
        for key in REACTION_KEYS:
            if self.reactions.get(key, 0) < 0:
                raise ValueError(f"negative reaction count for {key!r}")
        if self.shares < 0 or self.comments < 0:
            raise ValueError("shares and comments must be non-negative")

    @property
    def reactions_total(self) -> int:
        return sum(self.reactions.get(k, 0) for k in REACTION_KEYS)


@dataclass(frozen=True, slots=True)
class ArticleStructure:
    """First paragraph of an article body and its sentences."""

    first_paragraph: str
    sentences: tuple[str, ...]


def load_labeled_headlines(path: str, format: str = "tsv") -> list[LabeledHeadline]:
    """Read a ``label<TAB>text`` file in file order.

    Labels may be ``0``/``1`` (1 = clickbait) or the literal class names.
    Malformed lines raise :class:`CorpusFormatError` naming the line number.
    """
    if format != "tsv":
        raise ValueError(f"unsupported format {format!r}; only 'tsv' is supported")
    records: list[LabeledHeadline] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if "\t" not in line:
                raise CorpusFormatError(
                    f"{path}:{lineno}: expected 'label<TAB>text', got {line!r}"
                )
            token, text = line.split("\t", 1)
            label = _LABEL_TOKENS.get(token)
            if label is None:
                raise CorpusFormatError(
                    f"{path}:{lineno}: unknown label token {token!r}"
                )
            if not text.strip():
                raise CorpusFormatError(f"{path}:{lineno}: empty headline text")
            records.append(LabeledHeadline(text=text, label=label))
    counts = label_counts(records)
    logger.info(
        "loaded %d labeled headlines from %s (clickbait=%d, non_clickbait=%d)",
        len(records),
        path,
        counts[CLICKBAIT],
        counts[NON_CLICKBAIT],
    )
    return records


def write_labeled_headlines(records: Iterable[LabeledHeadline], path: str) -> None:
    """Write records as ``label<TAB>text`` lines; inverse of
    :func:`load_labeled_headlines`."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(f"{rec.label}\t{rec.text}\n")


def label_counts(records: Iterable[LabeledHeadline]) -> dict[str, int]:
    counts = {NON_CLICKBAIT: 0, CLICKBAIT: 0}
    for rec in records:
        counts[rec.label] += 1
    return counts


_REQUIRED_POST_KEYS = ("media_name", "media_group", "category", "post_type", "timestamp")


def _parse_timestamp(value: str) -> datetime:
    # Python 3.10 fromisoformat does not accept a trailing Z.
    ts = datetime.fromisoformat(value.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def load_posts(path: str) -> list[Post]:
    """Read a line-delimited JSON post corpus.

    Required keys: media_name, media_group, category, post_type, headline,
    timestamp. Engagement counts (like, love, haha, wow, sad, angry, shares,
    comments) default to 0 when null or absent; message, body and link_url
    are optional. Unknown keys are ignored. Any invalid record raises
    :class:`CorpusFormatError` naming its line.
    """
    posts: list[Post] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(rec, dict):
                raise CorpusFormatError(f"{path}:{lineno}: record is not an object")
            for key in _REQUIRED_POST_KEYS:
                if rec.get(key) in (None, ""):
                    raise CorpusFormatError(
                        f"{path}:{lineno}: missing required field {key!r}"
                    )
            if "headline" not in rec:
                raise CorpusFormatError(f"{path}:{lineno}: missing required field 'headline'")
            try:
                timestamp = _parse_timestamp(str(rec["timestamp"]))
            except ValueError as exc:
                raise CorpusFormatError(
                    f"{path}:{lineno}: bad timestamp {rec['timestamp']!r}"
                ) from exc
            reactions = {}
            for key in REACTION_KEYS:
                value = rec.get(key)
                reactions[key] = int(value) if value is not None else 0
            try:
                post = Post(
                    media_name=str(rec["media_name"]),
                    media_group=str(rec["media_group"]),
                    category=str(rec["category"]),
                    post_type=str(rec["post_type"]),
                    headline=str(rec["headline"]) if rec["headline"] is not None else "",
                    timestamp=timestamp,
                    message=None if rec.get("message") is None else str(rec["message"]),
                    body=None if rec.get("body") is None else str(rec["body"]),
                    link_url=None if rec.get("link_url") is None else str(rec["link_url"]),
                    reactions=reactions,
                    shares=int(rec.get("shares") or 0),
                    comments=int(rec.get("comments") or 0),
                )
            except ValueError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: {exc}") from exc
            posts.append(post)
    logger.info("loaded %d posts from %s", len(posts), path)
    return posts


def category_counts(posts: Iterable[Post]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for post in posts:
        counts[post.category] = counts.get(post.category, 0) + 1
    return counts


_PARAGRAPH_SPLIT = re.compile(r"\n[ \t]*\n")
_SENTENCE_SPLIT = re.compile(r"(?<=[.?!])\s+")


def extract_structure(body: str) -> ArticleStructure:
    """Split an article body into its first paragraph and that paragraph's
    sentences.

    The paragraph boundary is the first blank line (whole body when there is
    none). Sentences break after ``.``, ``?`` or ``!`` followed by
    whitespace, which knowingly mis-splits abbreviations such as "Dr.";
    downstream similarity uses aggregate statistics, so this error is
    accepted.
    """
    if not body or not body.strip():
        raise ValueError("article body is empty")
    normalized = body.replace("\r\n", "\n").strip()
    first = _PARAGRAPH_SPLIT.split(normalized, maxsplit=1)[0].strip()
    sentences = tuple(s for s in (p.strip() for p in _SENTENCE_SPLIT.split(first)) if s)
    if not sentences:
        sentences = (first,)
    return ArticleStructure(first_paragraph=first, sentences=sentences)
