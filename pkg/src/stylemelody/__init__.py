"""Style-controllable lyrics-to-melody generation toolkit."""

from .corpus import (
    FILTER_BOUNDS,
    IngestResult,
    attach_style,
    build_vocabs,
    filter_samples,
    ingest_corpus,
    make_toy_corpus,
    save_corpus,
    split_samples,
)
from .embedding import EmbeddingTable, LyricEmbedding, SkipGramEmbedder, embed_lyrics, load_embedding_table
from .evaluation import (
    EvalReport,
    MetricRecord,
    SweepResult,
    attribute_histograms,
    compute_metrics,
    controllability_sweep,
    emit_report,
    self_bleu,
    self_bleu_variants,
    style_mse,
)
from .losses import (
    cross_entropy_sum,
    rsgan_losses,
    sequence_stat_loss,
    soft_sequence_mean,
    soft_sequence_variance,
)
from .lyrics import LyricsSequence, tokenize_lyrics
from .midi import midi_bytes, read_midi, write_midi
from .model import (
    BranchConfig,
    MemoryFusionGenerator,
    ModelConfig,
    SequenceDiscriminator,
    default_model_config,
    init_params,
)
from .notes import (
    ATTRIBUTES,
    AttributeVocab,
    DatasetSplit,
    MelodySequence,
    NoteEvent,
    PairedSample,
)
from .pipeline import GenerationResult, MelodyComposer, pianoroll_dict
from .sampling import GreedySampler, GumbelSampler, gumbel_softmax_st
from .style import (
    FEATURE_KEYS,
    FeatureBinner,
    StyleEncoder,
    StyleFeatures,
    StyleVector,
    extract_style_features,
)
from .training import TrainConfig, Trainer, encode_training_data, stream_seed, temperature_schedule

__version__ = "0.1.0"
