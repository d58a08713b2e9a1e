"""Reverse-mode autograd over numpy arrays.

Each op returns a new Tensor whose _backward closure accumulates gradients
into its parents. backward() runs an iterative topological sort, so deep
decoder graphs never hit the recursion limit. Two precision modes: float32
for training, float64 (via the precision() context) for gradient checks.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

from ..errors import ShapeError, UsageError

_DTYPE = np.float32
_GRAD_ENABLED = True


def default_dtype():
    return _DTYPE


@contextmanager
def precision(dtype):
    """Temporarily switch the dtype new tensors are created with."""
    global _DTYPE
    dtype = np.dtype(dtype).type
    if dtype not in (np.float32, np.float64):
        raise UsageError("precision must be float32 or float64")
    prev = _DTYPE
    _DTYPE = dtype
    try:
        yield
    finally:
        _DTYPE = prev


@contextmanager
def no_grad():
    """Skip graph construction (generation / evaluation)."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data)
        if not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(_DTYPE)
        self.data = arr
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def needs_grad(self) -> bool:
        return self.requires_grad or bool(self._parents)

    def ensure_grad(self) -> np.ndarray:
        if self.grad is None or self.grad.shape != self.data.shape:
            self.grad = np.zeros_like(self.data)
        return self.grad

    def zero_grad(self) -> None:
        self.grad = None

    def item(self) -> float:
        return float(self.data)

    def backward(self) -> None:
        if self.data.size != 1:
            raise UsageError("backward() requires a scalar tensor")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        self.ensure_grad()[...] = 1.0
        for node in reversed(topo):
            if node._backward is not None:
                node._backward()

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, grad={self.requires_grad})"


def _make(data, parents, backward) -> Tensor:
    out = Tensor(data)
    if _GRAD_ENABLED and any(p.needs_grad for p in parents):
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(np.asarray(value, dtype=_DTYPE))


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# --- elementwise -----------------------------------------------------------


def add(x: Tensor, y) -> Tensor:
    y = _as_tensor(y)
    out_data = x.data + y.data

    def backward():
        g = out.grad
        if x.needs_grad:
            x.ensure_grad()[...] += _unbroadcast(g, x.data.shape)
        if y.needs_grad:
            y.ensure_grad()[...] += _unbroadcast(g, y.data.shape)

    out = _make(out_data, (x, y), backward)
    return out


def mul(x: Tensor, y) -> Tensor:
    """Elementwise (broadcasting) product; y may be a scalar."""
    y = _as_tensor(y)
    out_data = x.data * y.data

    def backward():
        g = out.grad
        if x.needs_grad:
            x.ensure_grad()[...] += _unbroadcast(g * y.data, x.data.shape)
        if y.needs_grad:
            y.ensure_grad()[...] += _unbroadcast(g * x.data, y.data.shape)

    out = _make(out_data, (x, y), backward)
    return out


elemwise_mul = mul


def neg(x: Tensor) -> Tensor:
    def backward():
        if x.needs_grad:
            x.ensure_grad()[...] -= out.grad

    out = _make(-x.data, (x,), backward)
    return out


def one_minus(x: Tensor) -> Tensor:
    def backward():
        if x.needs_grad:
            x.ensure_grad()[...] -= out.grad

    out = _make(1.0 - x.data, (x,), backward)
    return out


def relu(x: Tensor) -> Tensor:
    out_data = np.maximum(x.data, 0.0)

    def backward():
        if x.needs_grad:
            x.ensure_grad()[...] += (x.data > 0) * out.grad

    out = _make(out_data, (x,), backward)
    return out


def sigmoid(x: Tensor) -> Tensor:
    d = x.data
    out_data = np.where(d >= 0, 1.0 / (1.0 + np.exp(-np.abs(d))), np.exp(-np.abs(d)) / (1.0 + np.exp(-np.abs(d))))
    out_data = out_data.astype(d.dtype, copy=False)

    def backward():
        if x.needs_grad:
            x.ensure_grad()[...] += out.data * (1.0 - out.data) * out.grad

    out = _make(out_data, (x,), backward)
    return out


def tanh(x: Tensor) -> Tensor:
    out_data = np.tanh(x.data)

    def backward():
        if x.needs_grad:
            x.ensure_grad()[...] += (1.0 - out.data * out.data) * out.grad

    out = _make(out_data, (x,), backward)
    return out


def log(x: Tensor) -> Tensor:
    out_data = np.log(x.data)

    def backward():
        if x.needs_grad:
            x.ensure_grad()[...] += out.grad / x.data

    out = _make(out_data, (x,), backward)
    return out


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=axis, keepdims=True)

    def backward():
        if x.needs_grad:
            g = out.grad
            inner = (g * out.data).sum(axis=axis, keepdims=True)
            x.ensure_grad()[...] += out.data * (g - inner)

    out = _make(out_data, (x,), backward)
    return out


# --- shape ops -------------------------------------------------------------


def reshape(x: Tensor, shape) -> Tensor:
    def backward():
        if x.needs_grad:
            x.ensure_grad()[...] += out.grad.reshape(x.data.shape)

    out = _make(x.data.reshape(shape), (x,), backward)
    return out


def flatten(x: Tensor) -> Tensor:
    """(B, ...) -> (B, prod(...))."""
    return reshape(x, (x.data.shape[0], -1))


def concat(xs, axis: int = -1) -> Tensor:
    xs = list(xs)
    out_data = np.concatenate([t.data for t in xs], axis=axis)
    sizes = [t.data.shape[axis] for t in xs]
    offsets = np.cumsum([0] + sizes)

    def backward():
        g = out.grad
        for t, lo, hi in zip(xs, offsets[:-1], offsets[1:]):
            if t.needs_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                t.ensure_grad()[...] += g[tuple(idx)]

    out = _make(out_data, tuple(xs), backward)
    return out


def slice_cols(x: Tensor, start: int, stop: int) -> Tensor:
    """Columns [start, stop) of a 2-D tensor."""
    if x.data.ndim != 2:
        raise ShapeError("slice_cols", x.data.shape)
    out_data = x.data[:, start:stop].copy()

    def backward():
        if x.needs_grad:
            x.ensure_grad()[:, start:stop] += out.grad

    out = _make(out_data, (x,), backward)
    return out


def tensor_sum(x: Tensor) -> Tensor:
    def backward():
        if x.needs_grad:
            x.ensure_grad()[...] += out.grad

    out = _make(x.data.sum(), (x,), backward)
    return out


# --- dense / embedding -------------------------------------------------------


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """x (B, n) @ w (n, m) [+ b (m,)]."""
    if x.data.ndim != 2 or w.data.ndim != 2 or x.data.shape[1] != w.data.shape[0]:
        raise ShapeError("linear", x.data.shape, w.data.shape)
    out_data = x.data @ w.data
    if b is not None:
        out_data = out_data + b.data

    def backward():
        g = out.grad
        if x.needs_grad:
            x.ensure_grad()[...] += g @ w.data.T
        if w.needs_grad:
            w.ensure_grad()[...] += x.data.T @ g
        if b is not None and b.needs_grad:
            b.ensure_grad()[...] += g.sum(axis=0)

    parents = (x, w) if b is None else (x, w, b)
    out = _make(out_data, parents, backward)
    return out


def embed(indices, e: Tensor) -> Tensor:
    """Row lookup: indices (any int shape) into e (V, D)."""
    idx = np.asarray(indices)
    if not np.issubdtype(idx.dtype, np.integer):
        raise ShapeError("embed", idx.dtype)
    out_data = e.data[idx]

    def backward():
        if e.needs_grad:
            np.add.at(e.ensure_grad(), idx, out.grad)

    out = _make(out_data, (e,), backward)
    return out


# --- convolution -------------------------------------------------------------

# FFT pays off once the kernel is large; direct im2col wins for small kernels.
_FFT_MIN_KERNEL = 36
_FFT_MIN_IMAGE = 24


def conv2d(
    x: Tensor,
    k: Tensor,
    b: Tensor | None = None,
    stride: int = 1,
    pad: int = 0,
    method: str = "auto",
) -> Tensor:
    """2-D cross-correlation. x (B,H,W,Cin), k (kh,kw,Cin,Cout), b (Cout,).

    method: "direct" (im2col), "fft" (stride 1 only) or "auto".
    """
    if x.data.ndim != 4 or k.data.ndim != 4 or x.data.shape[3] != k.data.shape[2]:
        raise ShapeError("conv2d", x.data.shape, k.data.shape)
    kh, kw = k.data.shape[:2]
    if method == "auto":
        use_fft = (
            stride == 1
            and kh * kw >= _FFT_MIN_KERNEL
            and min(x.data.shape[1], x.data.shape[2]) >= _FFT_MIN_IMAGE
        )
        method = "fft" if use_fft else "direct"
    if method == "fft":
        if stride != 1:
            raise UsageError("conv2d fft path requires stride 1")
        return _conv2d_fft(x, k, b, pad)
    if method != "direct":
        raise UsageError(f"unknown conv2d method {method!r}")
    return _conv2d_direct(x, k, b, stride, pad)


def _pad_hw(data: np.ndarray, pad: int) -> np.ndarray:
    if pad == 0:
        return data
    return np.pad(data, ((0, 0), (pad, pad), (pad, pad), (0, 0)))


def _conv2d_direct(x: Tensor, k: Tensor, b: Tensor | None, stride: int, pad: int) -> Tensor:
    kh, kw, cin, cout = k.data.shape
    xp = _pad_hw(x.data, pad)
    bsz, hp, wp, _ = xp.shape
    ho = (hp - kh) // stride + 1
    wo = (wp - kw) // stride + 1
    if ho <= 0 or wo <= 0:
        raise ShapeError("conv2d", x.data.shape, k.data.shape)
    sb, sh, sw, sc = xp.strides
    windows = np.lib.stride_tricks.as_strided(
        xp,
        shape=(bsz, ho, wo, kh, kw, cin),
        strides=(sb, sh * stride, sw * stride, sh, sw, sc),
    )
    cols = windows.reshape(bsz * ho * wo, kh * kw * cin)
    out_data = cols @ k.data.reshape(kh * kw * cin, cout)
    if b is not None:
        out_data = out_data + b.data
    out_data = out_data.reshape(bsz, ho, wo, cout)

    def backward():
        g = out.grad.reshape(bsz * ho * wo, cout)
        if k.needs_grad:
            k.ensure_grad()[...] += (cols.T @ g).reshape(k.data.shape)
        if b is not None and b.needs_grad:
            b.ensure_grad()[...] += g.sum(axis=0)
        if x.needs_grad:
            dcols = (g @ k.data.reshape(kh * kw * cin, cout).T).reshape(
                bsz, ho, wo, kh, kw, cin
            )
            dxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    dxp[:, i : i + ho * stride : stride, j : j + wo * stride : stride, :] += dcols[
                        :, :, :, i, j, :
                    ]
            if pad:
                dxp = dxp[:, pad:-pad, pad:-pad, :]
            x.ensure_grad()[...] += dxp

    out = _make(out_data, (x, k) if b is None else (x, k, b), backward)
    return out


def _fft_corr(a: np.ndarray, kern: np.ndarray, flip: bool) -> np.ndarray:
    """Valid-region correlation of a (B,H,W,Ci) with kern (kh,kw,Ci,Co) via FFT.

    flip=True correlates with the spatially flipped kernel, i.e. a linear
    convolution, which is what the input-gradient pass needs.
    """
    bsz, h, w, ci = a.shape
    kh, kw, _, co = kern.shape
    ho, wo = h - kh + 1, w - kw + 1
    if not flip:
        kern = kern[::-1, ::-1]
    fa = np.fft.rfft2(a, s=(h, w), axes=(1, 2))
    fk = np.fft.rfft2(kern, s=(h, w), axes=(0, 1))
    nf = fa.shape[1] * fa.shape[2]
    lhs = fa.transpose(1, 2, 0, 3).reshape(nf, bsz, ci)
    rhs = fk.reshape(nf, ci, co)
    prod = lhs @ rhs
    prod = prod.reshape(fa.shape[1], fa.shape[2], bsz, co).transpose(2, 0, 1, 3)
    full = np.fft.irfft2(prod, s=(h, w), axes=(1, 2))
    out = full[:, kh - 1 : kh - 1 + ho, kw - 1 : kw - 1 + wo, :]
    return np.ascontiguousarray(out, dtype=a.dtype)


def _conv2d_fft(x: Tensor, k: Tensor, b: Tensor | None, pad: int) -> Tensor:
    kh, kw, cin, cout = k.data.shape
    xp = _pad_hw(x.data, pad)
    bsz, hp, wp, _ = xp.shape
    ho, wo = hp - kh + 1, wp - kw + 1
    if ho <= 0 or wo <= 0:
        raise ShapeError("conv2d", x.data.shape, k.data.shape)
    out_data = _fft_corr(xp, k.data, flip=False)
    if b is not None:
        out_data = out_data + b.data

    def backward():
        g = out.grad
        if b is not None and b.needs_grad:
            b.ensure_grad()[...] += g.sum(axis=(0, 1, 2))
        if k.needs_grad:
            # dK[di,dj,c,o] = sum_{b,i,j} x[b,i+di,j+dj,c] * g[b,i,j,o]:
            # correlate x with g, contracting the batch axis.
            xa = xp.transpose(3, 1, 2, 0)  # (Ci,Hp,Wp,B)
            ga = g.transpose(1, 2, 0, 3)  # (Ho,Wo,B,Co)
            dk = _fft_corr(xa, ga, flip=False)  # (Ci,kh,kw,Co)
            k.ensure_grad()[...] += dk.transpose(1, 2, 0, 3)
        if x.needs_grad:
            # full correlation of g with the un-flipped kernel gives dX
            gp = np.pad(g, ((0, 0), (kh - 1, kh - 1), (kw - 1, kw - 1), (0, 0)))
            dxp = _fft_corr(gp, k.data.transpose(0, 1, 3, 2), flip=True)
            if pad:
                dxp = dxp[:, pad:-pad, pad:-pad, :]
            x.ensure_grad()[...] += dxp

    out = _make(out_data, (x, k) if b is None else (x, k, b), backward)
    return out


# --- pooling -----------------------------------------------------------------


def maxpool2(x: Tensor) -> Tensor:
    """2x2 max pooling with stride 2; odd trailing rows/cols are dropped."""
    if x.data.ndim != 4:
        raise ShapeError("maxpool2", x.data.shape)
    bsz, h, w, c = x.data.shape
    h2, w2 = h // 2, w // 2
    if h2 == 0 or w2 == 0:
        raise ShapeError("maxpool2", x.data.shape)
    win = (
        x.data[:, : h2 * 2, : w2 * 2, :]
        .reshape(bsz, h2, 2, w2, 2, c)
        .transpose(0, 1, 3, 2, 4, 5)
        .reshape(bsz, h2, w2, 4, c)
    )
    idx = win.argmax(axis=3)
    out_data = np.take_along_axis(win, idx[:, :, :, None, :], axis=3)[:, :, :, 0, :]

    def backward():
        if not x.needs_grad:
            return
        gwin = np.zeros_like(win)
        np.put_along_axis(gwin, idx[:, :, :, None, :], out.grad[:, :, :, None, :], axis=3)
        gx = (
            gwin.reshape(bsz, h2, w2, 2, 2, c)
            .transpose(0, 1, 3, 2, 4, 5)
            .reshape(bsz, h2 * 2, w2 * 2, c)
        )
        xg = x.ensure_grad()
        xg[:, : h2 * 2, : w2 * 2, :] += gx

    out = _make(out_data, (x,), backward)
    return out


# --- batch normalization -------------------------------------------------------


def batchnorm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> Tensor:
    """Per-channel (last axis) normalization. Train mode uses batch statistics
    and updates the running buffers in place; eval mode reads the buffers."""
    c = x.data.shape[-1]
    if gamma.data.shape != (c,) or beta.data.shape != (c,):
        raise ShapeError("batchnorm", x.data.shape, gamma.data.shape)
    axes = tuple(range(x.data.ndim - 1))
    if training:
        mean = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        running_mean[...] = (1.0 - momentum) * running_mean + momentum * mean
        running_var[...] = (1.0 - momentum) * running_var + momentum * var
    else:
        mean = running_mean.astype(x.data.dtype, copy=False)
        var = running_var.astype(x.data.dtype, copy=False)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mean) * inv_std
    out_data = gamma.data * xhat + beta.data

    def backward():
        g = out.grad
        if gamma.needs_grad:
            gamma.ensure_grad()[...] += (g * xhat).sum(axis=axes)
        if beta.needs_grad:
            beta.ensure_grad()[...] += g.sum(axis=axes)
        if x.needs_grad:
            if training:
                dxhat = g * gamma.data
                term2 = dxhat.mean(axis=axes)
                term3 = xhat * (dxhat * xhat).mean(axis=axes)
                x.ensure_grad()[...] += inv_std * (dxhat - term2 - term3)
            else:
                x.ensure_grad()[...] += g * gamma.data * inv_std

    out = _make(out_data, (x, gamma, beta), backward)
    return out


# --- loss ---------------------------------------------------------------------


def nll_loss(y_seq, v_seq, pad_mask=None) -> Tensor:
    """Negative log likelihood summed over steps and vocabulary.

    y_seq: per-step probability Tensors (B, V); v_seq: matching one-hot
    numpy arrays; pad_mask: optional (B, T) with 1 where the step counts.
    Each probability row must sum to 1 within 1e-6.
    """
    if len(y_seq) != len(v_seq):
        raise ShapeError("nll_loss", len(y_seq), len(v_seq))
    if not y_seq:
        raise UsageError("nll_loss needs at least one step")
    total = None
    for t, (y, v) in enumerate(zip(y_seq, v_seq)):
        v = np.asarray(v)
        if y.data.shape != v.shape:
            raise ShapeError("nll_loss", y.data.shape, v.shape)
        sums = y.data.sum(axis=-1)
        if np.abs(sums - 1.0).max() > 1e-6:
            raise UsageError("nll_loss expects probability rows summing to 1")
        weight = v
        if pad_mask is not None:
            weight = v * np.asarray(pad_mask)[:, t : t + 1]
        term = tensor_sum(mul(log(y), Tensor(weight.astype(y.data.dtype))))
        total = term if total is None else add(total, term)
    return neg(total)
