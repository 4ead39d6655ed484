"""Corpus-scale measurements over annotated posts.

Everything here is a pure aggregation over immutable inputs: clickbait rates
by media category or outlet, clickbait-status-on-non-clickbait-link rates,
engagement comparisons, link repost frequency, and the mainstream-versus-
unreliable posts-per-day delta. Percentages are rounded half-up to two
decimals to match published tables.
"""

from __future__ import annotations

import logging
import statistics
import warnings
from dataclasses import dataclass
from datetime import date, timedelta
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence
from urllib.parse import parse_qsl, urlencode, urlsplit, urlunsplit

from .classify import ClassifierModel, predict
from .corpus import CATEGORIES, CLICKBAIT, NON_CLICKBAIT, Post
from .similar import headline_body_similarity

logger = logging.getLogger(__name__)


def percentage(part: int, rest: int) -> float:
    """``100 * part / (part + rest)`` rounded half-up to two decimals."""
    total = part + rest
    if total == 0:
        raise ValueError("cannot compute a percentage over an empty group")
    return float(
        (Decimal(part) * 100 / Decimal(total)).quantize(
            Decimal("0.01"), rounding=ROUND_HALF_UP
        )
    )


@dataclass(frozen=True, slots=True)
class AnnotatedPost:
    """A post plus model outputs: headline label and clickbait probability,
    optional status-message label, optional headline-body similarity.

    ``headline_missing`` flags posts whose headline was empty; they keep a
    default label but are excluded from rate tables.
    """

    post: Post
    headline_label: str
    headline_p: float
    status_label: str | None = None
    similarity: float | None = None
    headline_missing: bool = False


@dataclass(frozen=True, slots=True)
class RateRow:
    """Clickbait share of one group (category or media outlet)."""

    group: str
    clickbait_count: int
    non_clickbait_count: int
    percent: float


@dataclass(frozen=True, slots=True)
class StatusRow:
    """Clickbait-status share among link posts whose headline is
    non-clickbait and whose message is present; ``excluded`` marks
    categories with no such posts (percent is None there)."""

    category: str
    clickbait_status_count: int
    non_clickbait_link_count: int
    percent: float | None
    excluded: bool = False


@dataclass(frozen=True, slots=True)
class EngagementCell:
    """Engagement means and medians for one (category, headline label)
    cell."""

    category: str
    label: str
    posts: int
    reactions_mean: float
    shares_mean: float
    comments_mean: float
    reactions_median: float
    shares_median: float
    comments_median: float


@dataclass(frozen=True, slots=True)
class RepostGroup:
    """One normalized URL with its repost count and per-category /
    per-headline-label breakdowns."""

    url: str
    count: int
    by_category: dict[str, int]
    by_label: dict[str, int]


def annotate_corpus(
    posts: Sequence[Post], model: ClassifierModel
) -> list[AnnotatedPost]:
    """Run the classifier over every post: headline always, the status
    message when present, and headline-body similarity for link posts with
    bodies. Output is independent of input order (pure inference)."""
    annotated: list[AnnotatedPost] = []
    for post in posts:
        missing = not post.headline.strip()
        pred = predict(model, post.headline)
        status_label = None
        if post.message is not None and post.message.strip():
            status_label = predict(model, post.message).label
        similarity = None
        if (
            post.post_type == "link"
            and post.body is not None
            and post.body.strip()
            and not missing
        ):
            similarity = headline_body_similarity(post.headline, post.body, mode="max")
        annotated.append(
            AnnotatedPost(
                post=post,
                headline_label=pred.label,
                headline_p=pred.p_clickbait,
                status_label=status_label,
                similarity=similarity,
                headline_missing=missing,
            )
        )
    n_missing = sum(1 for a in annotated if a.headline_missing)
    if n_missing:
        logger.warning(
            "%d posts have empty headlines; they are flagged and excluded "
            "from rate tables",
            n_missing,
        )
    return annotated


def clickbait_rates(
    annotated: Sequence[AnnotatedPost],
    group_by: str = "category",
    top_n: int | None = None,
) -> list[RateRow]:
    """Clickbait/non-clickbait counts and percentage per group.

    ``group_by`` is ``"category"`` (rows in canonical category order) or
    ``"media"`` (rows by outlet name). With ``top_n`` the rows are sorted
    by percentage descending and truncated.
    """
    if group_by not in ("category", "media"):
        raise ValueError(f"group_by must be 'category' or 'media', got {group_by!r}")
    counts: dict[str, list[int]] = {}
    for a in annotated:
        if a.headline_missing:
            continue
        key = a.post.category if group_by == "category" else a.post.media_name
        pair = counts.setdefault(key, [0, 0])
        pair[0 if a.headline_label == CLICKBAIT else 1] += 1
    rows = [
        RateRow(
            group=key,
            clickbait_count=c,
            non_clickbait_count=nc,
            percent=percentage(c, nc),
        )
        for key, (c, nc) in counts.items()
    ]
    if group_by == "category":
        order = {cat: i for i, cat in enumerate(CATEGORIES)}
        rows.sort(key=lambda r: order[r.group])
    else:
        rows.sort(key=lambda r: r.group)
    if top_n is not None:
        rows.sort(key=lambda r: (-r.percent, r.group))
        rows = rows[:top_n]
    return rows


def status_vs_headline(annotated: Sequence[AnnotatedPost]) -> list[StatusRow]:
    """Per category, how often the status message is clickbait although the
    linked headline is not.

    Considers link posts with a non-clickbait headline label and a
    non-empty message; categories without such posts come back excluded.
    """
    counts: dict[str, list[int]] = {cat: [0, 0] for cat in CATEGORIES}
    present: set[str] = set()
    for a in annotated:
        if (
            a.post.post_type != "link"
            or a.headline_missing
            or a.headline_label != NON_CLICKBAIT
            or a.status_label is None
        ):
            continue
        present.add(a.post.category)
        pair = counts[a.post.category]
        pair[0 if a.status_label == CLICKBAIT else 1] += 1
    rows: list[StatusRow] = []
    for cat in CATEGORIES:
        cs, ncl = counts[cat]
        if cat not in present:
            rows.append(
                StatusRow(
                    category=cat,
                    clickbait_status_count=0,
                    non_clickbait_link_count=0,
                    percent=None,
                    excluded=True,
                )
            )
            continue
        rows.append(
            StatusRow(
                category=cat,
                clickbait_status_count=cs,
                non_clickbait_link_count=ncl,
                percent=percentage(cs, ncl),
            )
        )
    return rows


def engagement_summary(annotated: Sequence[AnnotatedPost]) -> list[EngagementCell]:
    """Arithmetic means (and medians, since engagement is heavy-tailed) of
    total reactions, shares and comments per (category, headline label)
    cell; posts with missing headlines are skipped."""
    cells: dict[tuple[str, str], list[tuple[int, int, int]]] = {}
    for a in annotated:
        if a.headline_missing:
            continue
        key = (a.post.category, a.headline_label)
        cells.setdefault(key, []).append(
            (a.post.reactions_total, a.post.shares, a.post.comments)
        )
    out: list[EngagementCell] = []
    for (category, label), rows in sorted(cells.items()):
        reactions = [r[0] for r in rows]
        shares = [r[1] for r in rows]
        comments = [r[2] for r in rows]
        out.append(
            EngagementCell(
                category=category,
                label=label,
                posts=len(rows),
                reactions_mean=statistics.fmean(reactions),
                shares_mean=statistics.fmean(shares),
                comments_mean=statistics.fmean(comments),
                reactions_median=float(statistics.median(reactions)),
                shares_median=float(statistics.median(shares)),
                comments_median=float(statistics.median(comments)),
            )
        )
    return out


def normalize_url(url: str) -> str:
    """Canonical link identity: lowercase scheme and host, drop the
    fragment and any ``utm_*`` query parameters (other parameters keep
    their order)."""
    parts = urlsplit(url.strip())
    query_pairs = [
        (k, v)
        for k, v in parse_qsl(parts.query, keep_blank_values=True)
        if not k.lower().startswith("utm_")
    ]
    return urlunsplit(
        (
            parts.scheme.lower(),
            parts.netloc.lower(),
            parts.path,
            urlencode(query_pairs),
            "",
        )
    )


def repost_frequency(
    annotated: Sequence[AnnotatedPost], min_count: int = 20
) -> list[RepostGroup]:
    """Group link posts by normalized URL and keep URLs posted at least
    ``min_count`` times, most reposted first."""
    groups: dict[str, list[AnnotatedPost]] = {}
    for a in annotated:
        if a.post.post_type != "link" or not a.post.link_url:
            continue
        groups.setdefault(normalize_url(a.post.link_url), []).append(a)
    out: list[RepostGroup] = []
    for url, members in groups.items():
        if len(members) < min_count:
            continue
        by_category: dict[str, int] = {}
        by_label: dict[str, int] = {}
        for a in members:
            by_category[a.post.category] = by_category.get(a.post.category, 0) + 1
            by_label[a.headline_label] = by_label.get(a.headline_label, 0) + 1
        out.append(
            RepostGroup(url=url, count=len(members), by_category=by_category, by_label=by_label)
        )
    out.sort(key=lambda g: (-g.count, g.url))
    return out


def posts_per_day_delta(posts: Sequence[Post]) -> list[tuple[date, float]]:
    """Daily series of (mean posts per mainstream outlet) minus (mean posts
    per unreliable outlet), on UTC calendar days.

    Days without posts count as zero; a corpus with no outlet in one group
    contributes zero for that group's mean. Empty corpus gives an empty
    series.
    """
    if not posts:
        return []
    media: dict[str, set[str]] = {"mainstream": set(), "unreliable": set()}
    daily: dict[date, list[int]] = {}
    for post in posts:
        media[post.media_group].add(post.media_name)
        day = post.timestamp.date()
        pair = daily.setdefault(day, [0, 0])
        pair[0 if post.media_group == "mainstream" else 1] += 1
    n_main = len(media["mainstream"])
    n_unrel = len(media["unreliable"])
    if n_main == 0 or n_unrel == 0:
        warnings.warn(
            "corpus lacks one media group entirely; its per-outlet mean is 0",
            stacklevel=2,
        )
    first = min(daily)
    last = max(daily)
    series: list[tuple[date, float]] = []
    day = first
    while day <= last:
        main_posts, unrel_posts = daily.get(day, (0, 0))
        mean_main = main_posts / n_main if n_main else 0.0
        mean_unrel = unrel_posts / n_unrel if n_unrel else 0.0
        series.append((day, mean_main - mean_unrel))
        day += timedelta(days=1)
    return series
