"""Transformer encoder-decoder with a shared language-tagged decoder pair.

One parameter set serves every role in the lab: text MT (either language
direction), ASR-style pre-training and pseudo-speech translation. The
model carries an autoregressive decoder, a masked-LM (non-autoregressive)
decoder, a length-prediction head and per-language embeddings that are
added to token embeddings at every decoder position - the language tag
alone selects which language the decoder emits.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .. import tensor as T
from ..corpus.vocab import Vocabulary
from ..errors import ConfigError, ShapeError
from ..tensor import Tensor
from .config import TransformerConfig

NEG_INF = -1e9


@lru_cache(maxsize=64)
def _positional_encoding(length: int, d_model: int, dtype: str) -> np.ndarray:
    pos = np.arange(length, dtype=np.float64)[:, None]
    dim = np.arange(d_model, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, 2.0 * (dim // 2) / d_model)
    pe = np.where(dim % 2 == 0, np.sin(angle), np.cos(angle))
    return pe.astype(dtype)


def _param_spec(cfg: TransformerConfig, vocab_size: int, n_langs: int) -> list[tuple[str, tuple]]:
    """Deterministic (name, shape) list; biases and LN params init specially."""
    d, ff = cfg.d_model, cfg.d_ff
    spec: list[tuple[str, tuple]] = [
        ("tok_emb", (vocab_size, d)),
        ("lang_emb", (n_langs, d)),
        ("out_proj.w", (d, vocab_size)),
        ("out_proj.b", (vocab_size,)),
        ("len_head.w", (d, cfg.max_len)),
        ("len_head.b", (cfg.max_len,)),
    ]
    if cfg.input_mode == "features":
        spec.append(("enc_conv.0.w", (cfg.conv_kernel, cfg.feat_dim, d)))
        spec.append(("enc_conv.0.b", (d,)))
        spec.append(("enc_conv.1.w", (cfg.conv_kernel, d, d)))
        spec.append(("enc_conv.1.b", (d,)))

    def attn(prefix: str):
        out = []
        for name in ("wq", "wk", "wv", "wo"):
            out.append((f"{prefix}.{name}", (d, d)))
            out.append((f"{prefix}.{name}_b", (d,)))
        return out

    def ffn_ln(prefix: str, has_cross: bool):
        out = []
        out += attn(f"{prefix}.self")
        out += [(f"{prefix}.ln1.g", (d,)), (f"{prefix}.ln1.b", (d,))]
        if has_cross:
            out += attn(f"{prefix}.cross")
            out += [(f"{prefix}.ln2.g", (d,)), (f"{prefix}.ln2.b", (d,))]
        out += [
            (f"{prefix}.ffn.w1", (d, ff)),
            (f"{prefix}.ffn.b1", (ff,)),
            (f"{prefix}.ffn.w2", (ff, d)),
            (f"{prefix}.ffn.b2", (d,)),
            (f"{prefix}.ln3.g", (d,)),
            (f"{prefix}.ln3.b", (d,)),
        ]
        return out

    for i in range(cfg.num_encoder_layers):
        spec += ffn_ln(f"enc.{i}", has_cross=False)
    spec += [("enc.ln.g", (d,)), ("enc.ln.b", (d,))]
    for branch in ("ar", "nar"):
        for i in range(cfg.num_decoder_layers):
            spec += ffn_ln(f"{branch}.{i}", has_cross=True)
        spec += [(f"{branch}.ln.g", (d,)), (f"{branch}.ln.b", (d,))]
    return spec


class Seq2SeqModel:
    """Parameters plus forward passes for encoding and both decoders."""

    INIT_STD = 0.02

    def __init__(self, cfg: TransformerConfig, vocab: Vocabulary, params: dict[str, Tensor]):
        self.cfg = cfg
        self.vocab = vocab
        self.params = params
        self.dropout_rng: np.random.Generator | None = None   # set by trainers
        if params["lang_emb"].shape[0] != len(vocab.lang_tags):
            raise ConfigError("language embedding count != language tags")

    # -- construction -------------------------------------------------------

    @classmethod
    def init(
        cls,
        cfg: TransformerConfig,
        vocab: Vocabulary,
        seed: int,
        dtype: str = "float32",
    ) -> "Seq2SeqModel":
        """Fresh parameters: weights ~ N(0, 0.02), biases 0, LN gamma=1 beta=0."""
        if not vocab.lang_tags:
            raise ConfigError("vocabulary must declare language tags")
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0x0D0E1]))
        params: dict[str, Tensor] = {}
        for name, shape in _param_spec(cfg, len(vocab), len(vocab.lang_tags)):
            if name.endswith((".b", "_b", ".b1", ".b2")):
                data = np.zeros(shape, dtype=dtype)
            elif name.endswith(".g"):
                data = np.ones(shape, dtype=dtype)
            else:
                data = rng.normal(0.0, cls.INIT_STD, size=shape).astype(dtype)
            params[name] = Tensor(data, requires_grad=True, name=name)
        return cls(cfg, vocab, params)

    @property
    def dtype(self) -> str:
        return str(self.params["tok_emb"].dtype)

    def param_arrays(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.params.items()}

    def load_param_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for k, v in arrays.items():
            if k not in self.params:
                raise ShapeError(f"unexpected parameter {k!r}")
            if tuple(self.params[k].shape) != tuple(v.shape):
                raise ShapeError(f"shape mismatch for {k!r}")
            self.params[k].data = v.astype(self.params[k].dtype).copy()

    def copy_params_from(self, other: "Seq2SeqModel", prefixes: tuple[str, ...]) -> None:
        """Bit-exact copy of every parameter whose name starts with a prefix."""
        for name, p in other.params.items():
            if any(name.startswith(pref) for pref in prefixes):
                if name not in self.params or self.params[name].shape != p.shape:
                    raise ShapeError(f"cannot transfer parameter {name!r}")
                self.params[name].data = p.data.copy()

    def lang_index(self, tag: str) -> int:
        if tag not in self.vocab.lang_tags:
            raise ConfigError(f"unknown language tag {tag!r}")
        return self.vocab.lang_tags.index(tag)

    # -- building blocks ----------------------------------------------------

    def _p(self, name: str) -> Tensor:
        return self.params[name]

    def _dropout(self, x: Tensor) -> Tensor:
        if self.cfg.dropout > 0.0 and self.dropout_rng is not None:
            return T.dropout(x, self.cfg.dropout, self.dropout_rng)
        return x

    def _attention(self, prefix: str, q_in: Tensor, kv_in: Tensor, mask: np.ndarray | None) -> Tensor:
        """Multi-head attention; mask is additive on the attention logits."""
        d, h = self.cfg.d_model, self.cfg.num_heads
        dh = d // h
        B, Tq = q_in.shape[0], q_in.shape[1]
        Tk = kv_in.shape[1]

        def heads(x: Tensor, n: int) -> Tensor:
            return T.transpose(x.reshape(B, n, h, dh), (0, 2, 1, 3))

        q = heads(q_in @ self._p(f"{prefix}.wq") + self._p(f"{prefix}.wq_b"), Tq)
        k = heads(kv_in @ self._p(f"{prefix}.wk") + self._p(f"{prefix}.wk_b"), Tk)
        v = heads(kv_in @ self._p(f"{prefix}.wv") + self._p(f"{prefix}.wv_b"), Tk)
        logits = q @ T.transpose(k, (0, 1, 3, 2)) * (dh ** -0.5)
        if mask is not None:
            logits = logits + Tensor(mask.astype(q_in.dtype))
        attn = T.softmax(logits, axis=-1)
        ctx = T.transpose(attn @ v, (0, 2, 1, 3)).reshape(B, Tq, d)
        return self._dropout(ctx @ self._p(f"{prefix}.wo") + self._p(f"{prefix}.wo_b"))

    def _ln(self, prefix: str, x: Tensor) -> Tensor:
        return T.layer_norm(x, self._p(f"{prefix}.g"), self._p(f"{prefix}.b"))

    def _ffn(self, prefix: str, x: Tensor) -> Tensor:
        h = T.relu(x @ self._p(f"{prefix}.w1") + self._p(f"{prefix}.b1"))
        return self._dropout(h @ self._p(f"{prefix}.w2") + self._p(f"{prefix}.b2"))

    def _stack(
        self,
        branch: str,
        n_layers: int,
        x: Tensor,
        self_mask: np.ndarray | None,
        enc: Tensor | None = None,
        cross_mask: np.ndarray | None = None,
    ) -> Tensor:
        # pre-norm residual blocks with a final layer norm
        for i in range(n_layers):
            pre = f"{branch}.{i}"
            normed = self._ln(f"{pre}.ln1", x)
            x = x + self._attention(f"{pre}.self", normed, normed, self_mask)
            if enc is not None:
                x = x + self._attention(f"{pre}.cross", self._ln(f"{pre}.ln2", x), enc, cross_mask)
            x = x + self._ffn(f"{pre}.ffn", self._ln(f"{pre}.ln3", x))
        return self._ln(f"{branch}.ln", x)

    # -- encoder ------------------------------------------------------------

    def encode_text(self, ids: np.ndarray, lens: np.ndarray) -> tuple[Tensor, np.ndarray]:
        """ids [B, T] -> encoder states [B, T, d]; output length = input length."""
        B, L = ids.shape
        scale = self.cfg.d_model ** 0.5
        x = T.embedding(self._p("tok_emb"), ids) * scale
        x = x + Tensor(_positional_encoding(L, self.cfg.d_model, self.dtype))
        x = self._dropout(x)
        mask = self._pad_mask(lens, L)
        states = self._stack("enc", self.cfg.num_encoder_layers, x, mask)
        return states, lens

    def encode_features(self, frames: np.ndarray, lens: np.ndarray) -> tuple[Tensor, np.ndarray]:
        """frames [B, T, feat_dim] -> states [B, ceil(ceil(T/2)/2), d]."""
        if frames.shape[1] < 1:
            raise ShapeError("feature input must have at least one frame")
        x = Tensor(frames.astype(self.dtype))
        x = T.relu(T.conv1d(x, self._p("enc_conv.0.w"), self._p("enc_conv.0.b"), self.cfg.conv_stride))
        x = T.relu(T.conv1d(x, self._p("enc_conv.1.w"), self._p("enc_conv.1.b"), self.cfg.conv_stride))
        out_lens = np.array([self.cfg.downsampled_len(int(n)) for n in lens])
        L = x.shape[1]
        x = x + Tensor(_positional_encoding(L, self.cfg.d_model, self.dtype))
        x = self._dropout(x)
        mask = self._pad_mask(out_lens, L)
        states = self._stack("enc", self.cfg.num_encoder_layers, x, mask)
        return states, out_lens

    def encode_batch(self, enc_input: np.ndarray, lens: np.ndarray) -> tuple[Tensor, np.ndarray]:
        if self.cfg.input_mode == "text":
            return self.encode_text(enc_input, lens)
        return self.encode_features(enc_input, lens)

    @staticmethod
    def _pad_mask(lens: np.ndarray, L: int) -> np.ndarray | None:
        if np.all(lens == L):
            return None
        valid = np.arange(L)[None, :] < np.asarray(lens)[:, None]
        return np.where(valid, 0.0, NEG_INF)[:, None, None, :]  # [B,1,1,L]

    # -- decoders -----------------------------------------------------------

    def _decoder_input(self, ids: np.ndarray, lang: str) -> Tensor:
        B, L = ids.shape
        scale = self.cfg.d_model ** 0.5
        x = T.embedding(self._p("tok_emb"), ids) * scale
        lang_row = np.full((B, L), self.lang_index(lang))
        x = x + T.embedding(self._p("lang_emb"), lang_row)
        x = x + Tensor(_positional_encoding(L, self.cfg.d_model, self.dtype))
        return self._dropout(x)

    def ar_logits(
        self,
        enc: Tensor,
        enc_lens: np.ndarray,
        dec_ids: np.ndarray,
        dec_lens: np.ndarray,
        lang: str,
    ) -> Tensor:
        """Causal decoder logits [B, T_dec, V] (teacher-forced)."""
        B, L = dec_ids.shape
        x = self._decoder_input(dec_ids, lang)
        causal = np.triu(np.full((L, L), NEG_INF), k=1)[None, None, :, :]
        pad = self._pad_mask(dec_lens, L)
        self_mask = causal if pad is None else causal + pad
        cross = self._pad_mask(enc_lens, enc.shape[1])
        h = self._stack("ar", self.cfg.num_decoder_layers, x, self_mask, enc, cross)
        return h @ self._p("out_proj.w") + self._p("out_proj.b")

    def nar_logits(
        self,
        enc: Tensor,
        enc_lens: np.ndarray,
        dec_ids: np.ndarray,
        dec_lens: np.ndarray,
        lang: str,
    ) -> Tensor:
        """Bidirectional masked-LM decoder logits [B, T_dec, V]."""
        x = self._decoder_input(dec_ids, lang)
        self_mask = self._pad_mask(dec_lens, dec_ids.shape[1])
        cross = self._pad_mask(enc_lens, enc.shape[1])
        h = self._stack("nar", self.cfg.num_decoder_layers, x, self_mask, enc, cross)
        return h @ self._p("out_proj.w") + self._p("out_proj.b")

    def length_logits(self, enc: Tensor, enc_lens: np.ndarray) -> Tensor:
        """Length-class logits [B, max_len] from mean-pooled encoder states."""
        L = enc.shape[1]
        valid = (np.arange(L)[None, :] < np.asarray(enc_lens)[:, None]).astype(self.dtype)
        weights = valid / valid.sum(axis=1, keepdims=True)
        pooled = (enc * Tensor(weights[:, :, None])).sum(axis=1)
        return pooled @ self._p("len_head.w") + self._p("len_head.b")


def init_params(cfg: TransformerConfig, vocab: Vocabulary, seed: int, dtype: str = "float32") -> Seq2SeqModel:
    return Seq2SeqModel.init(cfg, vocab, seed, dtype)


def encode(model: Seq2SeqModel, single_input) -> np.ndarray:
    """Encoder states [T', d] for one utterance (FeatureSeq or token list)."""
    from ..corpus.data import FeatureSeq

    with T.no_grad():
        if isinstance(single_input, FeatureSeq):
            if model.cfg.input_mode != "features":
                raise ConfigError("text-mode model cannot encode features")
            frames = single_input.frames[None, :, :]
            states, _ = model.encode_features(frames, np.array([single_input.num_frames]))
        else:
            tokens = list(single_input)
            if not tokens:
                raise ShapeError("empty input")
            if model.cfg.input_mode != "text":
                raise ConfigError("feature-mode model cannot encode token sequences")
            ids = np.array([model.vocab.encode(tokens)])
            states, _ = model.encode_text(ids, np.array([len(tokens)]))
    return states.data[0]


def average_checkpoints(snapshots: list[dict[str, np.ndarray]]) -> dict[str, np.ndarray]:
    """Element-wise mean of >=1 parameter snapshots with identical shapes."""
    if not snapshots:
        raise ShapeError("need at least one checkpoint")
    keys = set(snapshots[0])
    for snap in snapshots[1:]:
        if set(snap) != keys:
            raise ShapeError("checkpoints carry different parameter sets")
    out = {}
    for k in snapshots[0]:
        stack = []
        for snap in snapshots:
            if snap[k].shape != snapshots[0][k].shape:
                raise ShapeError(f"shape mismatch for {k!r}")
            stack.append(snap[k].astype(np.float64))
        out[k] = np.mean(stack, axis=0).astype(snapshots[0][k].dtype)
    return out
