"""Attention + copy text generator conditioned on a linearized macro plan.

The encoder is a BiLSTM over the plan tokens; the decoder is an LSTM with
bilinear attention, a tanh combination layer, and a scalar copy gate that
mixes vocabulary generation with copying from plan positions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .autodiff import Tape, Tensor
from .nn import ParamStore, adagrad_step, bilstm_encode, lstm_step
from .verbalize import strip_marker

log = logging.getLogger(__name__)

__all__ = [
    "GeneratorHyper",
    "GeneratorModel",
    "train_generator",
    "generate",
]

UNK = "<unk>"
BOS = "<s>"
EOS = "</s>"


@dataclass(frozen=True)
class GeneratorHyper:
    emb_dim: int = 64
    hidden: int = 128          # per direction; encoder state width is 2x
    lr: float = 0.02
    epochs: int = 6
    seed: int = 29
    grad_clip: float = 5.0
    stop_tol: float | None = None  # stop early once epoch NLL drops below
    trunc: int = 100           # BPTT truncation window (decoder steps)
    max_len: int = 400
    beam_size: int = 5

    @property
    def rep_dim(self) -> int:
        return 2 * self.hidden


class GeneratorModel:
    def __init__(self, store: ParamStore, vocab: dict[str, int],
                 hyper: GeneratorHyper):
        self.store = store
        self.vocab = vocab
        self.id_to_token = {i: t for t, i in vocab.items()}
        self.hyper = hyper

    @staticmethod
    def init(vocab: dict[str, int], hyper: GeneratorHyper,
             rng: np.random.Generator) -> "GeneratorModel":
        store = ParamStore()
        n = hyper.rep_dim
        v = len(vocab)
        store.create("emb", (v, hyper.emb_dim), rng)
        store.create_lstm("enc_f", hyper.emb_dim, hyper.hidden, rng)
        store.create_lstm("enc_b", hyper.emb_dim, hyper.hidden, rng)
        store.create("W_init", (n, n), rng)
        store.create_lstm("dec", hyper.emb_dim, n, rng)
        store.create("W_att", (n, n), rng)
        store.create("W_comb", (2 * n, n), rng)
        store.create("b_comb", (n,), rng, init="zeros")
        store.create("W_out", (n, v), rng)
        store.create("b_out", (v,), rng, init="zeros")
        store.create("w_copy", (n,), rng)
        store.create("b_copy", (), rng, init="zeros")
        return GeneratorModel(store, vocab, hyper)

    def token_id(self, token: str) -> int:
        return self.vocab.get(token, self.vocab[UNK])


def build_gen_vocab(pairs) -> dict[str, int]:
    vocab = {UNK: 0, BOS: 1, EOS: 2}
    for plan_tokens, target_tokens in pairs:
        for tok in list(plan_tokens) + list(target_tokens):
            if tok not in vocab:
                vocab[tok] = len(vocab)
    return vocab


# ---------------------------------------------------------------------------
# Forward pieces


def encode_plan(tape: Tape, model: GeneratorModel, plan_ids: list[int]):
    """Returns (encoder states (L, n), initial decoder h, initial c)."""
    if not plan_ids:
        raise ValueError("cannot encode an empty plan")
    store = model.store
    emb = store.t("emb")
    inputs = [tape.row(emb, i) for i in plan_ids]
    states = bilstm_encode(tape, inputs, store.t("enc_f.W"), store.t("enc_f.b"),
                           store.t("enc_b.W"), store.t("enc_b.b"),
                           model.hyper.hidden)
    S = tape.stack_rows(states)
    hidden = model.hyper.hidden
    fwd_last = tape.slice_last(states[-1], 0, hidden)
    bwd_first = tape.slice_last(states[0], hidden, 2 * hidden)
    h0 = tape.tanh(tape.matmul(tape.concat([fwd_last, bwd_first], axis=0),
                               store.t("W_init")))
    c0 = tape.zeros(h0.data.shape)
    return S, h0, c0


def decode_step(tape: Tape, model: GeneratorModel, S: Tensor, prev_id: int,
                h: Tensor, c: Tensor):
    """One decoder step.  Returns (h, c, combined state, attention weights)."""
    store = model.store
    x = tape.row(store.t("emb"), prev_id)
    h, c = lstm_step(tape, x, h, c, store.t("dec.W"), store.t("dec.b"))
    logits = tape.matmul(S, tape.matmul(h, store.t("W_att")))
    alpha = tape.softmax(logits, axis=0)
    ctx = tape.matmul(alpha, S)
    comb = tape.tanh(tape.add(tape.matmul(tape.concat([h, ctx], axis=0),
                                          store.t("W_comb")),
                              store.t("b_comb")))
    return h, c, comb, alpha


def _output_dists(tape: Tape, model: GeneratorModel, comb: Tensor):
    """Vocabulary distribution and copy-gate probability."""
    store = model.store
    p_gen = tape.softmax(tape.add(tape.matmul(comb, store.t("W_out")),
                                  store.t("b_out")), axis=0)
    p_copy = tape.sigmoid(tape.add(tape.matmul(comb, store.t("w_copy")),
                                   store.t("b_copy")))
    return p_gen, p_copy


def _copy_mask(plan_tokens: list[str], target: str) -> np.ndarray:
    """1.0 at plan positions whose marker-stripped surface equals ``target``."""
    return np.array([1.0 if strip_marker(t) == target else 0.0
                     for t in plan_tokens])


def instance_loss(tape: Tape, model: GeneratorModel, plan_tokens: list[str],
                  target_tokens: list[str], trunc: int | None = None) -> Tensor:
    """Teacher-forced NLL of the target under the generate/copy mixture.

    The decoder recurrent state is detached every ``trunc`` steps so
    gradients do not flow across segment boundaries (truncated BPTT); the
    encoder still receives gradient from every step through attention.
    """
    trunc = trunc or model.hyper.trunc
    plan_ids = [model.token_id(t) for t in plan_tokens]
    S, h, c = encode_plan(tape, model, plan_ids)
    targets = list(target_tokens) + [EOS]
    prev = BOS
    loss = None
    for step, target in enumerate(targets):
        if step > 0 and step % trunc == 0:
            h = tape.tensor(h.data)
            c = tape.tensor(c.data)
        h, c, comb, alpha = decode_step(tape, model, S, model.token_id(prev),
                                        h, c)
        p_gen, p_copy = _output_dists(tape, model, comb)
        gen_p = tape.pick(p_gen, model.token_id(target))
        mask = _copy_mask(plan_tokens, target)
        copy_p = tape.matmul(alpha, tape.tensor(mask))
        keep = tape.add_const(tape.neg(p_copy), 1.0)
        p = tape.add(tape.mul(keep, gen_p), tape.mul(p_copy, copy_p))
        step_loss = tape.neg(tape.log(tape.add_const(p, 1e-12)))
        loss = step_loss if loss is None else tape.add(loss, step_loss)
        prev = target
    return loss


def train_generator(pairs, hyper: GeneratorHyper
                    ) -> tuple[GeneratorModel, list[float]]:
    """``pairs`` is a list of (plan tokens, target subword tokens).  Returns
    the trained model and the per-epoch mean per-token NLL."""
    if not pairs:
        raise ValueError("empty generator training set")
    for idx, (plan_tokens, target_tokens) in enumerate(pairs):
        if not plan_tokens or not target_tokens:
            raise ValueError(f"instance {idx}: empty plan or target")
    vocab = build_gen_vocab(pairs)
    rng = np.random.default_rng(hyper.seed)
    model = GeneratorModel.init(vocab, hyper, rng)

    trace = []
    order = np.arange(len(pairs))
    for _epoch in range(hyper.epochs):
        rng.shuffle(order)
        total = 0.0
        tokens = 0
        for i in order:
            plan_tokens, target_tokens = pairs[i]
            tape = Tape()
            model.store.bind(tape)
            loss = instance_loss(tape, model, plan_tokens, target_tokens)
            tape.backward(loss)
            adagrad_step(model.store, hyper.lr, clip=hyper.grad_clip)
            total += float(loss.data)
            tokens += len(target_tokens) + 1
        trace.append(total / tokens)
        if hyper.stop_tol is not None and trace[-1] < hyper.stop_tol:
            break
    return model, trace


# ---------------------------------------------------------------------------
# Inference


@dataclass
class _Hyp:
    tokens: tuple[str, ...]
    logprob: float
    h: np.ndarray
    c: np.ndarray
    prev: str

    def score(self) -> float:
        return self.logprob / max(len(self.tokens), 1)


def _surface_dist(model: GeneratorModel, plan_tokens, p_gen, p_copy, alpha
                  ) -> dict[str, float]:
    pc = float(p_copy)
    dist: dict[str, float] = {}
    gen = (1.0 - pc) * p_gen
    for tok, idx in model.vocab.items():
        dist[tok] = float(gen[idx])
    for pos, plan_tok in enumerate(plan_tokens):
        surface = strip_marker(plan_tok)
        dist[surface] = dist.get(surface, 0.0) + pc * float(alpha[pos])
    dist.pop(UNK, None)
    dist.pop(BOS, None)
    return dist


def generate(plan_tokens: list[str], model: GeneratorModel,
             beam_size: int | None = None,
             max_len: int | None = None) -> list[str]:
    """Beam-search decode a token sequence (EOS excluded) for the plan.

    Copy emissions surface as the marker-stripped plan token.  Final ranking
    is by length-normalized log probability.
    """
    beam_size = model.hyper.beam_size if beam_size is None else beam_size
    max_len = model.hyper.max_len if max_len is None else max_len
    if beam_size < 1:
        raise ValueError("beam_size must be >= 1")
    tape = Tape()
    model.store.bind(tape)
    plan_ids = [model.token_id(t) for t in plan_tokens]
    S, h0, c0 = encode_plan(tape, model, plan_ids)

    beams = [_Hyp((), 0.0, h0.data, c0.data, BOS)]
    finished: list[_Hyp] = []
    for _step in range(max_len):
        expansions: list[_Hyp] = []
        for hyp in beams:
            h, c, comb, alpha = decode_step(
                tape, model, S, model.token_id(hyp.prev),
                tape.tensor(hyp.h), tape.tensor(hyp.c))
            p_gen, p_copy = _output_dists(tape, model, comb)
            dist = _surface_dist(model, plan_tokens, p_gen.data,
                                 p_copy.data, alpha.data)
            top = sorted(dist.items(), key=lambda kv: (-kv[1], kv[0]))
            for tok, prob in top[:beam_size + 1]:
                logp = hyp.logprob + float(np.log(max(prob, 1e-300)))
                if tok == EOS:
                    if hyp.tokens:
                        finished.append(_Hyp(hyp.tokens, logp, h.data, c.data,
                                             tok))
                    continue
                expansions.append(_Hyp(hyp.tokens + (tok,), logp, h.data,
                                       c.data, tok))
        if not expansions:
            break
        expansions.sort(key=lambda b: (-b.logprob, b.tokens))
        beams = expansions[:beam_size]

    if finished:
        finished.sort(key=lambda b: (-b.score(), b.tokens))
        return list(finished[0].tokens)
    if beams:
        log.warning("generation hit the length cap without end-of-sequence")
        beams.sort(key=lambda b: (-b.score(), b.tokens))
        return list(beams[0].tokens)
    return []
