"""Clickbait toolkit: subword skip-gram embeddings, a bag-of-embeddings
softmax classifier for clickbait headlines, the full cross-validation metric
battery, and corpus-scale analytics over social-media posts."""

__version__ = "0.1.0"

from .classify import (
    ClassifierConfig,
    ClassifierModel,
    ClickbaitClassifier,
    Prediction,
    load_classifier,
    predict,
    predict_batch,
    save_classifier,
    train_classifier,
)
from .corpus import (
    CLICKBAIT,
    LABELS,
    NON_CLICKBAIT,
    ArticleStructure,
    LabeledHeadline,
    Post,
    extract_structure,
    load_labeled_headlines,
    load_posts,
    write_labeled_headlines,
)
from .embed import (
    EmbeddingConfig,
    EmbeddingModel,
    PretrainedVectors,
    SubwordEmbedding,
    export_vectors,
    load_model,
    load_vectors,
    save_model,
    sentence_vector,
    train_embeddings,
    word_vector,
)
from .metrics import (
    ConfusionMatrix,
    MetricsReport,
    classification_metrics,
    cohens_kappa,
    cross_validate,
    kfold_split,
    roc_auc,
)
from .similar import (
    DensityCurve,
    bow_vector,
    cosine,
    density_estimate,
    headline_body_similarity,
)
from .textproc import Vocabulary, build_vocab, hash_subword, subwords, tokenize
from .topics import BitermTopicModel, BtmModel, extract_biterms, fit_btm, top_words

__all__ = [
    "__version__",
    "ClassifierConfig",
    "ClassifierModel",
    "ClickbaitClassifier",
    "Prediction",
    "load_classifier",
    "predict",
    "predict_batch",
    "save_classifier",
    "train_classifier",
    "CLICKBAIT",
    "LABELS",
    "NON_CLICKBAIT",
    "ArticleStructure",
    "LabeledHeadline",
    "Post",
    "extract_structure",
    "load_labeled_headlines",
    "load_posts",
    "write_labeled_headlines",
    "EmbeddingConfig",
    "EmbeddingModel",
    "PretrainedVectors",
    "SubwordEmbedding",
    "export_vectors",
    "load_model",
    "load_vectors",
    "save_model",
    "sentence_vector",
    "train_embeddings",
    "word_vector",
    "ConfusionMatrix",
    "MetricsReport",
    "classification_metrics",
    "cohens_kappa",
    "cross_validate",
    "kfold_split",
    "roc_auc",
    "DensityCurve",
    "bow_vector",
    "cosine",
    "density_estimate",
    "headline_body_similarity",
    "Vocabulary",
    "build_vocab",
    "hash_subword",
    "subwords",
    "tokenize",
    "BitermTopicModel",
    "BtmModel",
    "extract_biterms",
    "fit_btm",
    "top_words",
]
