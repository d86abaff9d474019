"""Retrieve-then-summarize benchmark harness.

Turns multi-document summarization datasets into retrieval benchmarks: builds
cross-split document indices, ranks documents for pseudo-queries (BM25 or
precomputed embeddings), applies controlled retrieval-error perturbations,
calls summarizers over a small wire protocol, and scores everything with
ROUGE plus the usual significance tests.
"""

from .corpus import (
    Dataset,
    DatasetConfig,
    Document,
    DocumentIndex,
    Example,
    build_index,
    load_dataset,
    load_index,
    save_dataset,
    save_index,
)
from .retrieval import (
    Bm25Params,
    EmbeddingStore,
    ErrorTally,
    Query,
    RankedRetrieval,
    bm25_rank,
    build_pseudo_query,
    count_retrieval_errors,
    dense_rank,
    resolve_k,
    retrieval_pr_at_k,
)
from .perturb import (
    PerturbationSpec,
    PerturbedExample,
    SimilarityScorer,
    apply,
    lexical_similarity,
    n_from_fraction,
)
from .metrics import (
    MetricReport,
    RougeScore,
    TestResult,
    binomial_test,
    fleiss_kappa,
    paired_t_test,
    preprocess,
    rouge_avg,
    rouge_l,
    rouge_n,
    score_summary,
)
from .baselines import (
    all_lead,
    background_abstract,
    oracle_document,
    oracle_lead,
    random_summary,
)
from .gateway import (
    SummarizerSpec,
    SummaryRequest,
    SummaryResponse,
    summarize,
    transform_document,
    truncate_inputs,
)
from .pipeline import (
    ExperimentConfig,
    ExperimentResult,
    PerturbationGrid,
    compare,
    export_open_domain_trainset,
    load_config,
    run_baseline,
    run_open_domain,
    run_perturbation_sweep,
)

__version__ = "0.1.0"
