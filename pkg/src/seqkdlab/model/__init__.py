from .config import DecodeConfig, LossBreakdown, TrainConfig, TransformerConfig
from .transformer import Seq2SeqModel, average_checkpoints, encode, init_params
from .losses import (
    Batch,
    TargetBatch,
    ar_joint_loss,
    build_target_batch,
    cmlm_loss,
    nar_joint_loss,
    sample_cmlm_mask,
)
from .decoding import (
    Hypothesis,
    MaskPredictTrace,
    beam_search,
    beam_search_steps,
    greedy_tokens,
    mask_predict,
    remask_count,
)
from .training import (
    Sample,
    TrainLog,
    asr_samples,
    batch_greedy_decode,
    init_decoder_from,
    init_encoder_from,
    lang_tag,
    make_batch,
    mt_samples,
    pretrain_asr,
    st_samples,
    teacher_forced_accuracy,
    train_mt,
    train_seq2seq,
)
