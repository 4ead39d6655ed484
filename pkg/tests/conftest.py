import random
from datetime import datetime, timezone

import pytest

from clickbait.classify import ClassifierConfig, train_classifier
from clickbait.corpus import CLICKBAIT, NON_CLICKBAIT, LabeledHeadline, Post

CLICK_WORDS = [
    "wow", "amazing", "unbelievable", "shocking", "secret", "trick",
    "weird", "crazy", "epic", "hilarious",
]
NEWS_WORDS = [
    "senate", "council", "budget", "report", "election", "policy",
    "minister", "economy", "ruling", "treaty",
]


def make_separable_dataset(n_per_class=60, seed=0, length=5):
    """Toy dataset whose classes use disjoint vocabularies."""
    rng = random.Random(seed)
    records = []
    for _ in range(n_per_class):
        records.append(
            LabeledHeadline(" ".join(rng.choices(CLICK_WORDS, k=length)), CLICKBAIT)
        )
        records.append(
            LabeledHeadline(" ".join(rng.choices(NEWS_WORDS, k=length)), NON_CLICKBAIT)
        )
    return records


def small_config(**overrides):
    params = dict(dim=16, bucket_count=512, epochs=4, seed=3)
    params.update(overrides)
    return ClassifierConfig(**params)


@pytest.fixture(scope="session")
def toy_dataset():
    return make_separable_dataset()


@pytest.fixture(scope="session")
def toy_classifier(toy_dataset):
    return train_classifier(toy_dataset, config=small_config())


def make_post(
    category="broadcast",
    post_type="link",
    headline="senate passes budget",
    message=None,
    body=None,
    link_url=None,
    media_name="outlet_a",
    timestamp="2016-03-15T12:00:00+00:00",
    reactions=None,
    shares=0,
    comments=0,
):
    group = "mainstream" if category in ("broadcast", "print") else "unreliable"
    return Post(
        media_name=media_name,
        media_group=group,
        category=category,
        post_type=post_type,
        headline=headline,
        timestamp=datetime.fromisoformat(timestamp).astimezone(timezone.utc),
        message=message,
        body=body,
        link_url=link_url,
        reactions=reactions or {},
        shares=shares,
        comments=comments,
    )
