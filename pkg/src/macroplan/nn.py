"""Parameters, LSTM cells, Adagrad, gradient checking and checkpoint I/O."""

from __future__ import annotations

import struct

import numpy as np

from .autodiff import ShapeError, Tape, Tensor

__all__ = [
    "Parameter",
    "ParamStore",
    "lstm_param_shapes",
    "lstm_step",
    "bilstm_encode",
    "adagrad_step",
    "grad_check",
    "save_params",
    "load_params",
]

ADAGRAD_EPS = 1e-10
INIT_RANGE = 0.1


class Parameter:
    __slots__ = ("name", "data", "accumulator")

    def __init__(self, name: str, data: np.ndarray):
        self.name = name
        self.data = np.asarray(data, dtype=np.float64)
        self.accumulator = np.zeros_like(self.data)


class ParamStore:
    """Named parameter collection.  ``bind(tape)`` produces leaf tensors for
    one forward/backward episode; gradients land on those tensors and are
    consumed by :func:`adagrad_step`."""

    def __init__(self):
        self._params: dict[str, Parameter] = {}
        self._bound: dict[str, Tensor] = {}

    def create(self, name: str, shape, rng: np.random.Generator,
               init: str = "uniform") -> Parameter:
        if name in self._params:
            raise ValueError(f"duplicate parameter {name!r}")
        if init == "uniform":
            data = rng.uniform(-INIT_RANGE, INIT_RANGE, size=shape)
        elif init == "zeros":
            data = np.zeros(shape)
        else:
            raise ValueError(f"unknown init {init!r}")
        p = Parameter(name, data)
        self._params[name] = p
        return p

    def create_lstm(self, prefix: str, input_dim: int, hidden: int,
                    rng: np.random.Generator) -> None:
        """Fused-gate LSTM weights; forget-gate bias initialized to 1."""
        self.create(f"{prefix}.W", (input_dim + hidden, 4 * hidden), rng)
        b = self.create(f"{prefix}.b", (4 * hidden,), rng, init="zeros")
        b.data[hidden:2 * hidden] = 1.0

    def __contains__(self, name):
        return name in self._params

    def __getitem__(self, name) -> Parameter:
        return self._params[name]

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def bind(self, tape: Tape) -> None:
        self._bound = {name: Tensor(p.data, tape)
                       for name, p in self._params.items()}

    def t(self, name: str) -> Tensor:
        return self._bound[name]

    def grads(self) -> dict[str, np.ndarray]:
        return {name: t.grad for name, t in self._bound.items()
                if t.grad is not None}


def lstm_param_shapes(input_dim: int, hidden: int) -> dict[str, tuple]:
    return {"W": (input_dim + hidden, 4 * hidden), "b": (4 * hidden,)}


def lstm_step(tape: Tape, x: Tensor, h: Tensor, c: Tensor,
              W: Tensor, b: Tensor) -> tuple[Tensor, Tensor]:
    """One step of a fused-gate LSTM; gate order i, f, o, g along the last axis.

    ``x`` is (B, in) or (in,); ``h``/``c`` match with hidden width H.
    """
    hidden = h.data.shape[-1]
    if W.data.shape != (x.data.shape[-1] + hidden, 4 * hidden):
        raise ShapeError(
            f"lstm_step: weight shape {W.data.shape} does not match "
            f"input {x.data.shape} / hidden {hidden}")
    z = tape.add(tape.matmul(tape.concat([x, h], axis=-1), W), b)
    i = tape.sigmoid(tape.slice_last(z, 0, hidden))
    f = tape.sigmoid(tape.slice_last(z, hidden, 2 * hidden))
    o = tape.sigmoid(tape.slice_last(z, 2 * hidden, 3 * hidden))
    g = tape.tanh(tape.slice_last(z, 3 * hidden, 4 * hidden))
    c_new = tape.add(tape.mul(f, c), tape.mul(i, g))
    h_new = tape.mul(o, tape.tanh(c_new))
    return h_new, c_new


def bilstm_encode(tape: Tape, seq: list[Tensor], W_f: Tensor, b_f: Tensor,
                  W_b: Tensor, b_b: Tensor, hidden: int) -> list[Tensor]:
    """Per-position concat of forward and backward hidden states (width 2H)."""
    if not seq:
        raise ValueError("bilstm_encode: empty sequence")
    batchless = seq[0].data.ndim == 1
    state_shape = (hidden,) if batchless else (seq[0].data.shape[0], hidden)

    def run(inputs, W, b):
        h, c = tape.zeros(state_shape), tape.zeros(state_shape)
        states = []
        for x in inputs:
            h, c = lstm_step(tape, x, h, c, W, b)
            states.append(h)
        return states

    fwd = run(seq, W_f, b_f)
    bwd = run(list(reversed(seq)), W_b, b_b)[::-1]
    return [tape.concat([f, b], axis=-1) for f, b in zip(fwd, bwd)]


def adagrad_step(store: ParamStore, lr: float,
                 clip: float | None = None) -> None:
    """accumulator += grad^2; param -= lr * grad / (sqrt(accumulator) + eps).

    With ``clip`` set, gradients are first rescaled so their global L2 norm
    does not exceed it.
    """
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    grads = store.grads()
    if clip is not None:
        norm = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
        if norm > clip:
            grads = {n: g * (clip / norm) for n, g in grads.items()}
    for name, grad in grads.items():
        p = store[name]
        p.accumulator += grad * grad
        p.data -= lr * grad / (np.sqrt(p.accumulator) + ADAGRAD_EPS)


def grad_check(loss_fn, store: ParamStore, h: float = 1e-5,
               max_coords: int | None = None,
               rng: np.random.Generator | None = None,
               floor: float = 1e-5) -> float:
    """Compare analytic gradients of ``loss_fn`` (a zero-argument callable
    returning a scalar Tensor whose tape has the store bound) against central
    finite differences.  Returns the worst relative error.

    ``floor`` bounds the denominator of the relative error from below so that
    coordinates whose true gradient sits at the cancellation noise level of
    the finite difference (about machine-eps times the loss magnitude over
    ``h``) do not register as spurious mismatches."""
    loss = loss_fn()
    if not np.isfinite(loss.data).all():
        raise ValueError("loss is not finite")
    loss.tape.backward(loss)
    analytic = {}
    for name, _ in store.items():
        t = store._bound.get(name)
        analytic[name] = (t.grad.copy() if t is not None and t.grad is not None
                          else np.zeros_like(store[name].data))

    worst = 0.0
    for name, p in store.items():
        flat = p.data.reshape(-1)
        n = flat.size
        if max_coords is not None and n > max_coords:
            if rng is None:
                rng = np.random.default_rng(0)
            coords = rng.choice(n, size=max_coords, replace=False)
        else:
            coords = range(n)
        a_flat = analytic[name].reshape(-1)
        for idx in coords:
            orig = flat[idx]
            flat[idx] = orig + h
            f_plus = float(loss_fn().data)
            flat[idx] = orig - h
            f_minus = float(loss_fn().data)
            flat[idx] = orig
            numeric = (f_plus - f_minus) / (2.0 * h)
            a = a_flat[idx]
            rel = abs(a - numeric) / max(abs(a), abs(numeric), floor)
            worst = max(worst, rel)
    return worst


# ---------------------------------------------------------------------------
# Checkpoints: magic "MPLN", version u32, then per-parameter records of
# (name length u32, UTF-8 name, rank u32, dims u64..., little-endian f64 data).

MAGIC = b"MPLN"
FORMAT_VERSION = 1


def save_params(path, store: ParamStore) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        for name, p in store.items():
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", p.data.ndim))
            fh.write(struct.pack(f"<{p.data.ndim}Q", *p.data.shape))
            fh.write(p.data.astype("<f8").tobytes())


def load_params(path) -> ParamStore:
    store = ParamStore()
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        while True:
            head = fh.read(4)
            if not head:
                break
            (name_len,) = struct.unpack("<I", head)
            name = fh.read(name_len).decode("utf-8")
            (rank,) = struct.unpack("<I", fh.read(4))
            dims = struct.unpack(f"<{rank}Q", fh.read(8 * rank)) if rank else ()
            count = int(np.prod(dims)) if dims else 1
            data = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(dims)
            store._params[name] = Parameter(name, data.copy())
    return store
