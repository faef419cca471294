"""Aspect discovery and summarization (ADS) dataset synthesis and evaluation."""

__version__ = "0.1.0"

from .corpus import Article, Corpus, Sentence, corpus_stats, load_corpus, segment_sentences, write_corpus
from .evaluator import (
    EvalReport,
    Pairing,
    evaluate_dataset,
    evaluate_sample,
    normalize_count,
    pair_summaries,
    split_generated,
)
from .rouge import RougeScore, RougeScores, rouge_l, rouge_l_sum, rouge_n, rouge_suite, rouge_sum
from .sampler import Partition, SampleGroup, min_similarity_partition, random_partition
from .similarity import cosine_similarity, fit_tfidf, make_scorer, token_overlap_f1
from .synthesizer import (
    AdsDataset,
    AdsSample,
    concat_summaries,
    dataset_stats,
    merge_variable,
    order_sentences,
    read_dataset,
    synthesize_dataset,
    write_dataset,
)
from .cluster_analysis import ClusterReport, assign_sentences, best_mapping_f1, cluster_report
from .twostep import TwoStepConfig, cluster_sentences, reduce_clusters, run_two_step, summarize_cluster
