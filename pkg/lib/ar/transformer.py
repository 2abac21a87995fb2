"""
Causal transformer over class-conditioning slots and latent tokens

Input layout: n_cond conditioning slots (class embedding plus a learned
per-slot offset, all at grid position (0, 0)) followed by the tokens in
raster order. The hidden state read at the last slot predicts token 1, the
one read at token k predicts token k + 1.

Evaluation paths sharing the parameters:
  - forward_hidden / transformer_forward run the full sequence on the tape
    with an additive -inf causal mask;
  - step() advances one position with numpy arithmetic against a KV cache;
    recompute_hidden() reruns the whole prefix layer by layer without one.
    Both apply the same per-row kernels and agree bit for bit. The tape
    path batches its matmuls and matches them to roundoff only.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from ..tensor import MLP, DiffTensor, Embedding, Linear, Module, RMSNorm, concat, matmul, no_grad
from ..tensor.tensor import softmax_array
from .exceptions import ArError, UnknownClassError
from .flow_head import FlowHead
from .rope import apply_rope, apply_rope_tensor, rope_tables
from .tokens import TokenSequence, raster_positions

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ArModelConfig:
    token_dim: int = 16
    grid: tuple[int, int] = (2, 2)
    n_classes: int = 2
    n_cond: int = 16
    width: int = 128
    depth: int = 4
    heads: int = 4
    ffn_mult: int = 4
    head_hidden: int = 128
    head_depth: int = 3
    n_time_features: int = 16

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(int(g) for g in self.grid))
        if self.width % self.heads:
            raise ArError(f"width {self.width} is not divisible by {self.heads} heads")
        if self.n_cond < 1:
            raise ArError("at least one conditioning slot is required")

    @property
    def head_dim(self) -> int:
        return self.width // self.heads

    @property
    def max_length(self) -> int:
        return self.grid[0] * self.grid[1]


class Block(Module):
    """Pre-norm attention + MLP block with RMSNorm"""

    def __init__(self, width: int, heads: int, ffn_mult: int, rng: np.random.Generator):
        self.heads = heads
        self.norm1 = RMSNorm(width)
        self.wq = Linear(width, width, rng, bias=False)
        self.wk = Linear(width, width, rng, bias=False)
        self.wv = Linear(width, width, rng, bias=False)
        self.wo = Linear(width, width, rng, bias=False)
        self.norm2 = RMSNorm(width)
        self.ffn = MLP([width, ffn_mult * width, width], rng)


class ArModel(Module):
    def __init__(self, config: ArModelConfig, rng: np.random.Generator):
        self.config = config
        self.token_in = Linear(config.token_dim, config.width, rng)
        # the last row is the null class used by the unconditional branch
        self.class_embed = Embedding(config.n_classes + 1, config.width, rng)
        self.slot_offsets = DiffTensor(rng.normal(0.0, 0.02, size=(config.n_cond, config.width)), requires_grad=True)
        self.blocks = [Block(config.width, config.heads, config.ffn_mult, rng) for _ in range(config.depth)]
        self.final_norm = RMSNorm(config.width)
        self.head = FlowHead(
            config.token_dim,
            config.width,
            rng,
            hidden=config.head_hidden,
            depth=config.head_depth,
            n_time_features=config.n_time_features,
        )

    @property
    def null_class(self) -> int:
        return self.config.n_classes

    def check_class(self, class_id: int | None) -> int:
        if class_id is None:
            return self.null_class
        if not 0 <= int(class_id) < self.config.n_classes:
            raise UnknownClassError(int(class_id), self.config.n_classes)
        return int(class_id)


def sequence_positions(config: ArModelConfig, n_tokens: int) -> np.ndarray:
    """Grid positions of the conditioning slots followed by n_tokens tokens"""
    if n_tokens > config.max_length:
        raise ArError(f"{n_tokens} tokens exceed the {config.grid} grid")
    cond = np.zeros((config.n_cond, 2), dtype=np.int64)
    return np.concatenate([cond, raster_positions(config.grid, n_tokens)])


def _causal_mask(n: int) -> np.ndarray:
    return np.where(np.tri(n, dtype=bool), 0.0, -np.inf)


def _block_forward(block: Block, x: DiffTensor, cos: np.ndarray, sin: np.ndarray, mask: np.ndarray) -> DiffTensor:
    b, n, width = x.shape
    hd = width // block.heads

    def split(t: DiffTensor) -> DiffTensor:
        return t.reshape(b, n, block.heads, hd).transpose(0, 2, 1, 3)

    a = block.norm1.forward(x)
    q = apply_rope_tensor(split(block.wq.forward(a)), cos, sin)
    k = apply_rope_tensor(split(block.wk.forward(a)), cos, sin)
    v = split(block.wv.forward(a))
    scores = matmul(q, k.swapaxes(-1, -2)) * (1.0 / np.sqrt(hd)) + mask
    attn = matmul(scores.softmax(axis=-1), v).transpose(0, 2, 1, 3).reshape(b, n, width)
    x = x + block.wo.forward(attn)
    return x + block.ffn.forward(block.norm2.forward(x))


def _hidden_states(model: ArModel, inputs: np.ndarray, class_ids: np.ndarray) -> DiffTensor:
    """
    Run cond slots + inputs (b, m, d) and return the (b, m + 1, width) hidden
    states read at the last slot and at every input token
    """
    config = model.config
    inputs = np.asarray(inputs, dtype=np.float64)
    b, m, _ = inputs.shape
    cond = model.class_embed.forward(class_ids).reshape(b, 1, config.width) + model.slot_offsets
    parts = [cond]
    if m:
        parts.append(model.token_in.forward(DiffTensor(inputs)))
    x = concat(parts, axis=1) if len(parts) > 1 else cond
    n = config.n_cond + m
    cos, sin = rope_tables(sequence_positions(config, m), config.head_dim)
    mask = _causal_mask(n)
    for block in model.blocks:
        x = _block_forward(block, x, cos, sin, mask)
    return model.final_norm.forward(x[:, config.n_cond - 1 :, :])


def forward_hidden(model: ArModel, tokens: np.ndarray, class_ids: np.ndarray) -> DiffTensor:
    """Teacher-forced hidden states h_0 .. h_{l-1} for (b, l, d) target tokens"""
    tokens = np.asarray(tokens, dtype=np.float64)
    return _hidden_states(model, tokens[:, :-1], np.asarray(class_ids, dtype=np.int64))


def transformer_forward(
    model: ArModel, prefix: TokenSequence | np.ndarray, class_id: int | None = None
) -> np.ndarray:
    """
    Hidden states for a prefix of m tokens

    Returns:
        (m + 1, width): row k is h_k, the state that predicts token k + 1.
        class_id None selects the unconditional (null-class) slots.
    """
    ids = np.array([model.check_class(class_id)])
    tokens = prefix.tokens if isinstance(prefix, TokenSequence) else np.asarray(prefix, dtype=np.float64)
    tokens = tokens.reshape(-1, model.config.token_dim)
    with no_grad():
        return _hidden_states(model, tokens[None], ids).value[0]


# incremental decoding ---------------------------------------------------------


@dataclass
class KVCache:
    """Per-layer rotated keys and values, one (heads, head_dim) entry per position"""

    keys: list[list[np.ndarray]] = field(default_factory=list)
    values: list[list[np.ndarray]] = field(default_factory=list)

    @classmethod
    def empty(cls, depth: int) -> "KVCache":
        return cls(keys=[[] for _ in range(depth)], values=[[] for _ in range(depth)])

    @property
    def length(self) -> int:
        return len(self.keys[0]) if self.keys else 0


def _row_qkv(block: Block, a: np.ndarray, cos: np.ndarray, sin: np.ndarray) -> tuple[np.ndarray, ...]:
    """Rotated query and key plus the value of one normalized (width,) row"""
    hd = a.shape[-1] // block.heads
    q = apply_rope(block.wq.apply(a).reshape(block.heads, hd), cos, sin)
    k = apply_rope(block.wk.apply(a).reshape(block.heads, hd), cos, sin)
    return q, k, block.wv.apply(a).reshape(block.heads, hd)


def _row_update(block: Block, h: np.ndarray, q: np.ndarray, keys: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Attend from one row over (n, heads, head_dim) keys and values, then the MLP"""
    hd = q.shape[-1]
    scores = np.einsum("hd,nhd->hn", q, keys) / np.sqrt(hd)
    attn = np.einsum("hn,nhd->hd", softmax_array(scores, axis=-1), values).reshape(h.shape[-1])
    h = h + block.wo.apply(attn)
    return h + block.ffn.apply(block.norm2.apply(h))


def step(model: ArModel, x: np.ndarray, position: np.ndarray, cache: KVCache) -> np.ndarray:
    """Advance one position: x is the (width,) input embedding; returns the normalized hidden state"""
    cos, sin = rope_tables(np.asarray(position).reshape(1, 2), model.config.head_dim)
    h = np.asarray(x, dtype=np.float64)
    for i, block in enumerate(model.blocks):
        q, k, v = _row_qkv(block, block.norm1.apply(h), cos, sin)
        cache.keys[i].append(k)
        cache.values[i].append(v)
        h = _row_update(block, h, q, np.stack(cache.keys[i]), np.stack(cache.values[i]))
    return model.final_norm.apply(h)


def condition_inputs(model: ArModel, class_id: int | None) -> np.ndarray:
    """(n_cond, width) conditioning slot embeddings"""
    cid = model.check_class(class_id)
    return model.class_embed.apply(np.array([cid]))[0] + model.slot_offsets.value


def prime(model: ArModel, class_id: int | None, cache: KVCache) -> np.ndarray:
    """Feed the conditioning slots; returns h_0"""
    h = None
    for slot in condition_inputs(model, class_id):
        h = step(model, slot, np.zeros(2, dtype=np.int64), cache)
    return h


def recompute_hidden(model: ArModel, class_id: int | None, tokens: list[np.ndarray]) -> np.ndarray:
    """
    Uncached path: rerun the conditioning slots and every token layer by
    layer with no KV cache; returns the last hidden state

    Rows go through the same per-row kernels as step(), so the result
    matches cached decoding bit for bit.
    """
    config = model.config
    positions = sequence_positions(config, len(tokens))
    tables = [rope_tables(p.reshape(1, 2), config.head_dim) for p in positions]
    h = list(condition_inputs(model, class_id))
    h += [model.token_in.apply(np.asarray(t, dtype=np.float64)) for t in tokens]
    for block in model.blocks:
        qkv = [_row_qkv(block, block.norm1.apply(row), cos, sin) for row, (cos, sin) in zip(h, tables, strict=True)]
        keys = np.stack([k for _, k, _ in qkv])
        values = np.stack([v for _, _, v in qkv])
        h = [_row_update(block, row, qkv[p][0], keys[: p + 1], values[: p + 1]) for p, row in enumerate(h)]
    return model.final_norm.apply(h[-1])
