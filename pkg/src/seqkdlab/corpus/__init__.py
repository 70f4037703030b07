from .vocab import (
    BOS,
    DEFAULT_SPECIALS,
    EOS,
    LENGTH,
    MASK,
    PAD,
    UNK,
    Vocabulary,
    build_vocab,
    detokenize,
    tokenize,
)
from .data import (
    FeatureSeq,
    ParallelCorpus,
    StDataset,
    StItem,
    VARIANT_BIDIR,
    VARIANT_BWD,
    VARIANT_COMBINED,
    VARIANT_FWD,
    VARIANT_REAL,
)
from .toygen import (
    CASE_MARKER,
    SpeechSynthesizer,
    ToyGenConfig,
    build_st_dataset,
    strip_markers,
    synonym_table,
    synth_pseudo_speech,
    synth_toy_bitext,
)
from .io import (
    load_features,
    load_parallel_tsv,
    load_st_jsonl,
    load_st_tsv,
    save_features,
    save_parallel_tsv,
    save_st_jsonl,
    save_st_tsv,
)
