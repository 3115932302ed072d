import numpy as np
import pytest
import torch

from blockforge.diffusion.model import DenoiserModel, sinusoidal_embedding


def tiny_model(spatial=True, seed=0, d=16, L=2, heads=2):
    torch.manual_seed(seed)
    return DenoiserModel(row_dim=20, d=d, L=L, heads=heads,
                         spatial_encoding=spatial)


def test_permutation_equivariance_50_cases():
    model = tiny_model()
    model.eval()
    gen = torch.Generator().manual_seed(3)
    # untrained gates are zero; randomize all parameters so the blocks
    # actually transform the tokens
    with torch.no_grad():
        for p in model.parameters():
            p.add_(torch.randn(p.shape, generator=gen) * 0.05)
    ctx = model.encode_text(["a stone tower"])
    with torch.no_grad():
        for case in range(50):
            x = torch.randn((1, 8, 20), generator=gen)
            t = int(torch.randint(1, 1001, (1,), generator=gen))
            perm = torch.randperm(8, generator=gen)
            out = model(x, t, ctx)
            out_perm = model(x[:, perm], t, ctx)
            assert (out[:, perm] - out_perm).abs().max().item() < 1e-5


def test_zero_gate_identity_at_init():
    model = tiny_model()
    model.eval()
    x = torch.randn((2, 6, 20), generator=torch.Generator().manual_seed(5))
    with torch.no_grad():
        out_t1 = model(x, 1)
        out_t999 = model(x, 999)
        # blocks are identity residuals; output head is zero-initialized
        assert torch.equal(out_t1, out_t999)
        assert out_t1.abs().max().item() == 0.0
        # with a non-zero head the output equals head(tokens), independent of t
        torch.nn.init.ones_(model.head.weight)
        tokens = model.token_embeddings(x)
        t_emb = model.time_mlp(sinusoidal_embedding(
            torch.tensor([42, 42]), model.d).to(x.dtype))
        want = model.output_head(tokens, t_emb)
        assert (model(x, 7) - want).abs().max().item() < 1e-6
        assert (model(x, 904) - want).abs().max().item() < 1e-6


def test_spatial_encoding_distinguishes_centers():
    # two rows identical except center: tokens equal only when the flag is off
    row_a = torch.zeros(20)
    row_b = torch.zeros(20)
    row_a[0:3] = torch.tensor([0.2, 0.3, 0.4])
    row_b[0:3] = torch.tensor([0.7, 0.3, 0.4])
    row_a[3:6] = row_b[3:6] = torch.tensor([0.1, 0.1, 0.1])
    row_a[6] = row_b[6] = 1.0
    x = torch.stack([row_a, row_b]).unsqueeze(0)

    off = tiny_model(spatial=False, seed=1)
    on = tiny_model(spatial=True, seed=1)
    with torch.no_grad():
        # size+class identical, centers differ: the plain projection still
        # sees the center dims, so compare the *spatial term* in isolation
        toks_off = off.token_embeddings(x)
        toks_on = on.token_embeddings(x)
        plain = off.input_proj(x)
        assert torch.equal(toks_off, plain)
        spatial_term = toks_on - on.input_proj(x)
        assert (spatial_term[0, 0] - spatial_term[0, 1]).abs().max() > 1e-4


def test_encode_text_shapes():
    model = tiny_model()
    ctx = model.encode_text([""])
    assert ctx.shape == (1, 1, model.d)
    assert torch.equal(ctx[0, 0], model.null_ctx)
    ctx2 = model.encode_text(["a big house", ""])
    assert ctx2.shape == (2, 3, model.d)
    # short prompt padded with the null vector
    assert torch.equal(ctx2[1, 0], model.null_ctx)
    assert torch.equal(ctx2[1, 2], model.null_ctx)


def test_encode_text_deterministic():
    model = tiny_model()
    a = model.encode_text(["red roof"])
    b = model.encode_text(["red ROOF."])
    assert torch.equal(a, b)


def test_forward_shape_check():
    model = tiny_model()
    with pytest.raises(ValueError):
        model(torch.zeros(2, 4, 19), 1)


def test_sinusoidal_embedding_shape():
    emb = sinusoidal_embedding(torch.tensor([1, 500, 1000]), 16)
    assert emb.shape == (3, 16)
    assert not torch.equal(emb[0], emb[1])
