"""Positive-news gate: rule-based weak labelling, one-class filtration and
trainable DTM-SVM / text-CNN classifiers that pass on only positive news."""
from ._kernels import BACKEND
from .corpus import (DocumentSet, GateLabel, NewsDocument, PolarityLabel, Vocabulary,
                     build_vocabulary, load_corpus, save_corpus, tokenize, train_test_split)
from .valence import (ScorerConfig, SentimentScore, ValenceLexicon, annotate_corpus,
                      assign_weak_label, load_lexicon, score_document)

__version__ = "0.1.0"
