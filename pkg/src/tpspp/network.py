"""Forward-only rectification networks.

The chain for a 1x32x128 input:

  toy_backbone -> (32x32x128, 64x16x64, 96x16x64)
  msfa_forward -> encoded 64x4x16 (after the channel/spatial gate),
                  decoded 64x16x64
  aipe_forward -> 64 control-point offsets and a 1024x64 score matrix

All forwards are pure functions of (input, weights); no state is kept.
Convolutions are cross-correlations with zero padding; linear layers use
the out-by-in convention y = W @ x + b.
"""

from dataclasses import dataclass

import numpy as np

from . import tensor
from .errors import MissingParameterError, ShapeError
from .warp import AttentionMatrix

D = 64                 # shared channel width of encoded/decoded features
ENC_H, ENC_W = 4, 16   # encoded spatial extent = control grid
DEC_H, DEC_W = 16, 64  # decoded spatial extent = output lattice
CBAM_REDUCTION = 16
INPUT_H, INPUT_W = 32, 128


class WeightStore:
    """Immutable name -> float32 tensor map for network parameters."""

    def __init__(self, tensors):
        store = {}
        for name, arr in tensors.items():
            arr = np.ascontiguousarray(arr, dtype=np.float32)
            arr.flags.writeable = False
            store[name] = arr
        self._tensors = store

    def __getitem__(self, name):
        try:
            return self._tensors[name]
        except KeyError:
            raise MissingParameterError(f"weight {name!r} not found") from None

    def __contains__(self, name):
        return name in self._tensors

    def __iter__(self):
        return iter(sorted(self._tensors))

    def __len__(self):
        return len(self._tensors)

    def items(self):
        return ((k, self._tensors[k]) for k in sorted(self._tensors))

    def parameter_count(self, prefixes=None):
        total = 0
        for name, arr in self.items():
            if prefixes is None or any(name.startswith(p) for p in prefixes):
                total += arr.size
        return total


@dataclass(frozen=True)
class FeatureBundle:
    """Outputs of the three backbone stages, channels-first."""

    f1: np.ndarray  # 32 x 32 x 128
    f2: np.ndarray  # 64 x 16 x 64
    f3: np.ndarray  # 96 x 16 x 64


@dataclass(frozen=True)
class EncodedDecodedPair:
    f_e: np.ndarray  # D x 4 x 16
    f_d: np.ndarray  # D x 16 x 64
    d: int = D


# name -> shape of every parameter the forward passes read.
WEIGHT_MANIFEST = {
    "backbone.conv1.weight": (32, 1, 3, 3),
    "backbone.conv1.bias": (32,),
    "backbone.conv2.weight": (64, 32, 3, 3),
    "backbone.conv2.bias": (64,),
    "backbone.conv3.weight": (96, 64, 3, 3),
    "backbone.conv3.bias": (96,),
    "msfa.align1.weight": (D, 32, 1, 1),
    "msfa.align1.bias": (D,),
    "msfa.align2.weight": (D, 64, 1, 1),
    "msfa.align2.bias": (D,),
    "msfa.align3.weight": (D, 96, 1, 1),
    "msfa.align3.bias": (D,),
    "msfa.layer1.weight": (D, 3 * D, 1, 1),
    "msfa.layer1.bias": (D,),
    "msfa.layer2.weight": (D, D, 3, 3),
    "msfa.layer2.bias": (D,),
    "msfa.layer3.weight": (D, D, 3, 3),
    "msfa.layer3.bias": (D,),
    "msfa.cbam.mlp1.weight": (D // CBAM_REDUCTION, D),
    "msfa.cbam.mlp1.bias": (D // CBAM_REDUCTION,),
    "msfa.cbam.mlp2.weight": (D, D // CBAM_REDUCTION),
    "msfa.cbam.mlp2.bias": (D,),
    "msfa.cbam.spatial.weight": (1, 2, 7, 7),
    "msfa.cbam.spatial.bias": (1,),
    "msfa.layer5.weight": (D, D, 3, 3),
    "msfa.layer5.bias": (D,),
    "msfa.layer6.weight": (D, D, 3, 3),
    "msfa.layer6.bias": (D,),
    "msfa.layer7.weight": (D, D, 3, 3),
    "msfa.layer7.bias": (D,),
    "dgab.seq_w.weight": (DEC_W, DEC_W + ENC_H * ENC_W),
    "dgab.seq_w.bias": (DEC_W,),
    "dgab.seq_h.weight": (DEC_H, DEC_H + ENC_H * ENC_W),
    "dgab.seq_h.bias": (DEC_H,),
    "dgab.gate_w.weight": (D,),
    "dgab.gate_w.bias": (1,),
    "dgab.gate_h.weight": (D,),
    "dgab.gate_h.bias": (1,),
    "aipe.offset1.weight": (D, D),
    "aipe.offset1.bias": (D,),
    "aipe.offset2.weight": (2, D),
    "aipe.offset2.bias": (2,),
}

RECTIFIER_PREFIXES = ("msfa.", "dgab.", "aipe.")


def init_weights(seed=0):
    """Deterministic uniform [-0.05, 0.05] weights for self-tests.

    The final offset layer starts at zero so an untrained network yields
    the identity rectification.
    """
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in WEIGHT_MANIFEST.items():
        if name.startswith("aipe.offset2."):
            tensors[name] = np.zeros(shape, dtype=np.float32)
        else:
            tensors[name] = rng.uniform(-0.05, 0.05, size=shape).astype(np.float32)
    return WeightStore(tensors)


def zero_weights():
    return WeightStore({name: np.zeros(shape, dtype=np.float32)
                        for name, shape in WEIGHT_MANIFEST.items()})


def rectifier_parameter_count(w=None):
    """Parameters of the rectifier proper (backbone stub excluded)."""
    if w is None:
        return sum(int(np.prod(shape)) for name, shape in WEIGHT_MANIFEST.items()
                   if name.startswith(RECTIFIER_PREFIXES))
    return w.parameter_count(RECTIFIER_PREFIXES)


def _conv(x, w, name, stride=1, pad=0, act=True):
    out = tensor.conv2d(x, w[f"{name}.weight"], w[f"{name}.bias"], stride=stride, pad=pad)
    return tensor.relu(out) if act else out


def _linear(x, weight, bias):
    # x: (..., in); weight: (out, in)
    return tensor.matmul(x, weight.T) + bias


def toy_backbone(image, w):
    """Fixed three-stage conv stub standing in for a real backbone.

    Stage strides 1, 2, 1 with 3x3 kernels and pad 1 give channel counts
    (32, 64, 96) at spatial extents (32x128, 16x64, 16x64).
    """
    image = np.asarray(image)
    if image.shape != (1, INPUT_H, INPUT_W):
        raise ShapeError(f"expected (1, {INPUT_H}, {INPUT_W}) input, got {image.shape}")
    f1 = _conv(image, w, "backbone.conv1", stride=1, pad=1)
    f2 = _conv(f1, w, "backbone.conv2", stride=2, pad=1)
    f3 = _conv(f2, w, "backbone.conv3", stride=1, pad=1)
    return FeatureBundle(f1, f2, f3)


def _avgpool2x2(x):
    c, h, w_ = x.shape
    return x.reshape(c, h // 2, 2, w_ // 2, 2).mean(axis=(2, 4), dtype=np.float64).astype(x.dtype)


def cbam_forward(x, w, prefix="msfa.cbam"):
    """Channel gate then spatial gate, both multiplicative."""
    x = np.asarray(x)
    c = x.shape[0]
    if c % CBAM_REDUCTION != 0:
        raise ShapeError(f"channels {c} not divisible by reduction {CBAM_REDUCTION}")

    def mlp(v):
        h = tensor.relu(_linear(v[None, :], w[f"{prefix}.mlp1.weight"], w[f"{prefix}.mlp1.bias"]))
        return _linear(h, w[f"{prefix}.mlp2.weight"], w[f"{prefix}.mlp2.bias"])[0]

    avg = x.mean(axis=(1, 2), dtype=np.float64).astype(x.dtype)
    mx = x.max(axis=(1, 2))
    gate_c = tensor.sigmoid(mlp(avg) + mlp(mx))
    x = x * gate_c[:, None, None]

    stat = np.stack([x.mean(axis=0, dtype=np.float64).astype(x.dtype), x.max(axis=0)])
    gate_s = tensor.sigmoid(tensor.conv2d(stat, w[f"{prefix}.spatial.weight"],
                                          w[f"{prefix}.spatial.bias"], stride=1, pad=3))
    return x * gate_s[0]


def msfa_forward(bundle, w):
    """Encoder-decoder aggregation of the three backbone maps."""
    if bundle.f1.shape != (32, 32, 128) or bundle.f2.shape != (64, 16, 64) \
            or bundle.f3.shape != (96, 16, 64):
        raise ShapeError(f"unexpected bundle shapes {bundle.f1.shape}, {bundle.f2.shape}, {bundle.f3.shape}")
    a1 = _avgpool2x2(_conv(bundle.f1, w, "msfa.align1"))
    a2 = _conv(bundle.f2, w, "msfa.align2")
    a3 = _conv(bundle.f3, w, "msfa.align3")
    x = tensor.concat(tensor.concat(a1, a2, axis=0), a3, axis=0)  # 192 x 16 x 64

    x = _conv(x, w, "msfa.layer1")                       # 64 x 16 x 64
    x = _conv(x, w, "msfa.layer2", stride=2, pad=1)      # 64 x 8 x 32
    x = _conv(x, w, "msfa.layer3", stride=2, pad=1)      # 64 x 4 x 16
    f_e = cbam_forward(x, w)                             # 64 x 4 x 16

    x = _conv(tensor.upsample_x2(f_e), w, "msfa.layer5", pad=1)  # 64 x 8 x 32
    x = _conv(tensor.upsample_x2(x), w, "msfa.layer6", pad=1)    # 64 x 16 x 64
    f_d = _conv(x, w, "msfa.layer7", pad=1, act=False)           # signed output
    return EncodedDecodedPair(f_e, f_d)


def _encoded_sequence(f_e):
    # D x H_e x W_e -> K x D, row-major over (row, col)
    d, h, w_ = f_e.shape
    return f_e.transpose(1, 2, 0).reshape(h * w_, d)


def dgab_forward(pair, w):
    """Gated attention over the decoded map, guided by the encoded one.

    Column/row summaries of f_d are concatenated with the encoded
    sequence, realigned by a linear layer, gated by a per-column/row
    sigmoid importance weight, softmax-normalized over channels,
    broadcast back, summed, and multiplied into the raw f_d.
    """
    f_d = np.asarray(pair.f_d)
    f_e = np.asarray(pair.f_e)
    if f_d.shape != (D, DEC_H, DEC_W) or f_e.shape != (D, ENC_H, ENC_W):
        raise ShapeError(f"unexpected pair shapes {f_e.shape}, {f_d.shape}")
    fe_seq = _encoded_sequence(f_e)  # K x D

    def branch(summary, name):
        # summary: (len, D) sequence; realign (len + K) -> len
        cat = tensor.concat(summary, fe_seq, axis=0)
        aligned = tensor.matmul(w[f"dgab.seq_{name}.weight"], cat) \
            + w[f"dgab.seq_{name}.bias"][:, None].astype(np.float32)
        gate = tensor.sigmoid(aligned @ w[f"dgab.gate_{name}.weight"]
                              + w[f"dgab.gate_{name}.bias"][0])
        return tensor.softmax(aligned, axis=1) * gate[:, None]

    s_w = branch(f_d.mean(axis=1, dtype=np.float64).astype(f_d.dtype).T, "w")  # W_d x D
    s_h = branch(f_d.mean(axis=2, dtype=np.float64).astype(f_d.dtype).T, "h")  # H_d x D

    merged = s_w.T[:, None, :] + s_h.T[:, :, None]  # D x H_d x W_d
    return (merged * f_d).astype(f_d.dtype)


def aipe_forward(pair, w, grid):
    """Predict control-point offsets and the attention score matrix."""
    if grid.k != ENC_H * ENC_W:
        raise ShapeError(f"grid K={grid.k} does not match encoded extent {ENC_H * ENC_W}")
    fe_seq = _encoded_sequence(np.asarray(pair.f_e))  # K x D

    h = tensor.relu(_linear(fe_seq, w["aipe.offset1.weight"], w["aipe.offset1.bias"]))
    offsets = _linear(h, w["aipe.offset2.weight"], w["aipe.offset2.bias"])  # K x 2

    gated = dgab_forward(pair, w)  # D x H_d x W_d
    m_seq = gated.transpose(1, 2, 0).reshape(DEC_H * DEC_W, D)
    scores = np.tanh(m_seq.astype(np.float64) @ fe_seq.astype(np.float64).T / np.sqrt(D))
    # tanh rounds to +/-1.0 in floating point beyond |x| ~ 19; keep the
    # open-interval contract
    scores = np.clip(scores, np.nextafter(-1.0, 0.0), np.nextafter(1.0, 0.0))
    return grid.with_offsets(offsets.astype(np.float64)), AttentionMatrix(scores)


def rectification_forward(image, w, grid):
    """Full chain: backbone, aggregation, parameter estimation."""
    pair = msfa_forward(toy_backbone(image, w), w)
    regressed_grid, attention = aipe_forward(pair, w, grid)
    return pair, regressed_grid, attention
