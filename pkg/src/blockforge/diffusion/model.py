"""Permutation-equivariant transformer denoiser.

Box rows are independent tokens: there is no positional encoding anywhere,
so permuting input rows permutes the output rows identically.  Spatial
information enters through a learned projection of each box's noised
center added to its token embedding.  Timestep conditioning modulates
every block through zero-initialized adaptive layer norm (scale, shift and
gate per residual branch), which makes each block the identity at
initialization; the output head is also zero-initialized.
"""
from __future__ import annotations

import math

import torch
import torch.nn.functional as F
from torch import nn

from . import textenc


def sinusoidal_embedding(t: torch.Tensor, dim: int,
                         max_period: float = 10000.0) -> torch.Tensor:
    """Standard transformer timestep embedding, (B,) -> (B, dim)."""
    half = dim // 2
    freqs = torch.exp(
        -math.log(max_period)
        * torch.arange(half, dtype=torch.float64, device=t.device) / half
    )
    args = t.to(torch.float64)[:, None] * freqs[None, :]
    emb = torch.cat([torch.cos(args), torch.sin(args)], dim=-1)
    if dim % 2 == 1:
        emb = torch.cat([emb, torch.zeros_like(emb[:, :1])], dim=-1)
    return emb


def modulate(x: torch.Tensor, scale: torch.Tensor, shift: torch.Tensor) -> torch.Tensor:
    return x * (1 + scale.unsqueeze(1)) + shift.unsqueeze(1)


class Attention(nn.Module):
    """Multi-head attention over (B, N, d) sequences, no positions."""

    def __init__(self, d: int, heads: int):
        super().__init__()
        if d % heads:
            raise ValueError("d must be divisible by heads")
        self.heads = heads
        self.q_proj = nn.Linear(d, d)
        self.k_proj = nn.Linear(d, d)
        self.v_proj = nn.Linear(d, d)
        self.out_proj = nn.Linear(d, d)

    def forward(self, q: torch.Tensor, kv: torch.Tensor) -> torch.Tensor:
        b, n, d = q.shape
        hd = d // self.heads

        def split(x):
            return x.view(b, -1, self.heads, hd).transpose(1, 2)

        out = F.scaled_dot_product_attention(
            split(self.q_proj(q)), split(self.k_proj(kv)), split(self.v_proj(kv)))
        return self.out_proj(out.transpose(1, 2).reshape(b, n, d))


class DenoiserBlock(nn.Module):
    """Self-attention over box tokens, cross-attention to text, MLP.

    All three residual branches are modulated by AdaLN scale/shift and
    gated; the modulation projection starts at zero so the block is the
    identity before training.
    """

    def __init__(self, d: int, heads: int):
        super().__init__()
        self.norm1 = nn.LayerNorm(d, elementwise_affine=False)
        self.self_attn = Attention(d, heads)
        self.norm2 = nn.LayerNorm(d, elementwise_affine=False)
        self.cross_attn = Attention(d, heads)
        self.norm3 = nn.LayerNorm(d, elementwise_affine=False)
        self.mlp = nn.Sequential(
            nn.Linear(d, 2 * d), nn.GELU(), nn.Linear(2 * d, d))
        self.adaln = nn.Sequential(nn.SiLU(), nn.Linear(d, 9 * d))
        nn.init.zeros_(self.adaln[-1].weight)
        nn.init.zeros_(self.adaln[-1].bias)

    def forward(self, x: torch.Tensor, ctx: torch.Tensor,
                t_emb: torch.Tensor) -> torch.Tensor:
        (shift_sa, scale_sa, gate_sa,
         shift_ca, scale_ca, gate_ca,
         shift_ff, scale_ff, gate_ff) = self.adaln(t_emb).chunk(9, dim=-1)
        h = modulate(self.norm1(x), scale_sa, shift_sa)
        x = x + gate_sa.unsqueeze(1) * self.self_attn(h, h)
        h = modulate(self.norm2(x), scale_ca, shift_ca)
        x = x + gate_ca.unsqueeze(1) * self.cross_attn(h, ctx)
        h = modulate(self.norm3(x), scale_ff, shift_ff)
        x = x + gate_ff.unsqueeze(1) * self.mlp(h)
        return x


class DenoiserModel(nn.Module):
    """Predicts the per-row noise of a padded layout tensor.

    Args:
        row_dim: width of a box row (6 geometry dims + one-hot classes).
        d: token dimension.
        L: number of transformer blocks.
        heads: attention heads per block.
        spatial_encoding: add the learned center projection to each token.
        vocab_size / max_tokens: hashing text-encoder shape.
    """

    def __init__(self, row_dim: int = 20, d: int = 128, L: int = 4,
                 heads: int = 4, spatial_encoding: bool = True,
                 vocab_size: int = textenc.VOCAB_SIZE,
                 max_tokens: int = textenc.MAX_TOKENS):
        super().__init__()
        self.row_dim = row_dim
        self.d = d
        self.spatial_encoding = spatial_encoding
        self.vocab_size = vocab_size
        self.max_tokens = max_tokens

        self.input_proj = nn.Linear(row_dim, d)
        self.spatial_proj = nn.Linear(3, d)
        self.time_mlp = nn.Sequential(nn.Linear(d, d), nn.SiLU(), nn.Linear(d, d))
        self.token_embed = nn.Embedding(vocab_size, d)
        self.null_ctx = nn.Parameter(torch.randn(d) * 0.02)
        self.blocks = nn.ModuleList(DenoiserBlock(d, heads) for _ in range(L))
        self.norm_out = nn.LayerNorm(d, elementwise_affine=False)
        self.adaln_out = nn.Sequential(nn.SiLU(), nn.Linear(d, 2 * d))
        self.head = nn.Linear(d, row_dim)
        nn.init.zeros_(self.adaln_out[-1].weight)
        nn.init.zeros_(self.adaln_out[-1].bias)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    def encode_text(self, prompts: list[str]) -> torch.Tensor:
        """Map prompts to context vectors, padded with the null vector.

        An empty prompt yields a single null vector; a batch pads every
        prompt to the longest with null vectors so attention shapes agree.
        """
        device = self.null_ctx.device
        bucket_lists = [
            textenc.token_buckets(p, self.vocab_size, self.max_tokens)
            for p in prompts
        ]
        width = max(1, max(len(b) for b in bucket_lists))
        rows = []
        for buckets in bucket_lists:
            if buckets:
                vecs = self.token_embed(
                    torch.as_tensor(buckets, dtype=torch.long, device=device))
            else:
                vecs = self.null_ctx.unsqueeze(0)
            if len(vecs) < width:
                pad = self.null_ctx.unsqueeze(0).expand(width - len(vecs), -1)
                vecs = torch.cat([vecs, pad], dim=0)
            rows.append(vecs)
        return torch.stack(rows)

    def token_embeddings(self, xt: torch.Tensor) -> torch.Tensor:
        tokens = self.input_proj(xt)
        if self.spatial_encoding:
            tokens = tokens + self.spatial_proj(xt[..., :3])
        return tokens

    def output_head(self, tokens: torch.Tensor, t_emb: torch.Tensor) -> torch.Tensor:
        shift, scale = self.adaln_out(t_emb).chunk(2, dim=-1)
        return self.head(modulate(self.norm_out(tokens), scale, shift))

    def forward(self, xt: torch.Tensor, t, ctx: torch.Tensor | None = None
                ) -> torch.Tensor:
        """xt: (B, N, row_dim); t: int or (B,) tensor of 1-indexed steps."""
        if xt.ndim != 3 or xt.shape[-1] != self.row_dim:
            raise ValueError(
                f"expected (B, N, {self.row_dim}) input, got {tuple(xt.shape)}")
        if not torch.is_tensor(t):
            t = torch.full((xt.shape[0],), int(t), dtype=torch.long,
                           device=xt.device)
        if ctx is None:
            ctx = self.encode_text([""] * xt.shape[0])
        t_emb = self.time_mlp(
            sinusoidal_embedding(t, self.d).to(xt.dtype))
        x = self.token_embeddings(xt)
        for block in self.blocks:
            x = block(x, ctx.to(xt.dtype), t_emb)
        return self.output_head(x, t_emb)
