"""Pointer-network macro planner: candidate representation, contextualization
with a content-selection gate, pointer decoding, training and beam inference."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tape, Tensor
from .nn import ParamStore, adagrad_step, bilstm_encode, lstm_step
from .verbalize import PARAGRAPH_SEP, ParagraphPlanSpec

log = logging.getLogger(__name__)

__all__ = [
    "MacroPlan",
    "PlannerHyper",
    "PlannerModel",
    "encode_candidates",
    "contextualize",
    "pointer_step",
    "train_planner",
    "infer_plan",
    "greedy_plan",
    "linearize",
]

UNK = "<unk>"


@dataclass(frozen=True)
class MacroPlan:
    pointer_sequence: tuple[int, ...]
    terminated: bool = True


@dataclass(frozen=True)
class PlannerHyper:
    emb_dim: int = 64
    hidden: int = 128          # per direction; candidate representation is 2x
    lr: float = 0.02
    epochs: int = 6
    seed: int = 13
    grad_clip: float = 5.0
    stop_tol: float | None = None  # stop early once epoch NLL drops below
    max_plan_len: int = 20
    beam_size: int = 5

    @property
    def rep_dim(self) -> int:
        return 2 * self.hidden


class PlannerModel:
    """Parameter container for the planning network plus the subword
    vocabulary the candidate encoder reads."""

    def __init__(self, store: ParamStore, vocab: dict[str, int],
                 hyper: PlannerHyper):
        self.store = store
        self.vocab = vocab
        self.hyper = hyper

    @staticmethod
    def init(vocab: dict[str, int], hyper: PlannerHyper,
             rng: np.random.Generator) -> "PlannerModel":
        store = ParamStore()
        n = hyper.rep_dim
        store.create("emb", (len(vocab), hyper.emb_dim), rng)
        store.create_lstm("enc_f", hyper.emb_dim, hyper.hidden, rng)
        store.create_lstm("enc_b", hyper.emb_dim, hyper.hidden, rng)
        store.create("query_d", (n,), rng)
        store.create("W_a", (n, n), rng)
        store.create("W_g", (2 * n, n), rng)
        store.create("W_b", (n, n), rng)
        store.create_lstm("dec", n, n, rng)
        store.create("eom", (n,), rng)
        store.create("start", (n,), rng)
        return PlannerModel(store, vocab, hyper)

    def token_ids(self, tokens) -> list[int]:
        unk = self.vocab[UNK]
        return [self.vocab.get(t, unk) for t in tokens]


def build_vocab(token_seqs) -> dict[str, int]:
    vocab = {UNK: 0}
    for seq in token_seqs:
        for tok in seq:
            if tok not in vocab:
                vocab[tok] = len(vocab)
    return vocab


# ---------------------------------------------------------------------------
# Forward pieces


def encode_candidates(tape: Tape, model: PlannerModel,
                      id_seqs: list[list[int]]) -> Tensor:
    """Attention-pooled BiLSTM representations, one row per candidate (K, n).

    Sequences of equal length are encoded as a batch.
    """
    if any(len(s) == 0 for s in id_seqs):
        raise ValueError("cannot encode an empty candidate")
    store = model.store
    hidden = model.hyper.hidden
    emb = store.t("emb")
    d = store.t("query_d")

    by_len: dict[int, list[int]] = {}
    for idx, seq in enumerate(id_seqs):
        by_len.setdefault(len(seq), []).append(idx)

    pooled: dict[int, Tensor] = {}
    for length, members in sorted(by_len.items()):
        ids = np.array([id_seqs[i] for i in members], dtype=np.int64)  # (B, T)
        inputs = [tape.gather_rows(emb, ids[:, t]) for t in range(length)]
        states = bilstm_encode(tape, inputs, store.t("enc_f.W"), store.t("enc_f.b"),
                               store.t("enc_b.W"), store.t("enc_b.b"), hidden)
        scores = tape.stack_cols([tape.matmul(s, d) for s in states])  # (B, T)
        alpha = tape.softmax(scores, axis=1)
        acc = tape.mul(tape.column(alpha, 0), states[0])
        for t in range(1, length):
            acc = tape.add(acc, tape.mul(tape.column(alpha, t), states[t]))
        for pos, idx in enumerate(members):
            pooled[idx] = tape.row(acc, pos)
    return tape.stack_rows([pooled[i] for i in range(len(id_seqs))])


def contextualize(tape: Tape, model: PlannerModel, reps: Tensor) -> Tensor:
    """Content-selection gating: attention over the other candidates feeds a
    sigmoid gate applied elementwise to each representation."""
    store = model.store
    k = reps.data.shape[0]
    if k == 1:
        # the cross-candidate sum is empty; zero context is the only
        # consistent completion
        ctx = tape.zeros((1, reps.data.shape[1]))
    else:
        scores = tape.matmul(tape.matmul(reps, store.t("W_a")),
                             tape.transpose(reps))
        mask = ~np.eye(k, dtype=bool)
        beta = tape.softmax(scores, axis=1, mask=mask)
        ctx = tape.matmul(beta, reps)
    att = tape.matmul(tape.concat([reps, ctx], axis=1), store.t("W_g"))
    gate = tape.sigmoid(att)
    return tape.mul(gate, reps)


def pointer_step(tape: Tape, model: PlannerModel, h: Tensor,
                 reps_c_with_eom: Tensor) -> Tensor:
    """Distribution over candidates plus EOM given decoder state ``h``."""
    logits = tape.matmul(reps_c_with_eom,
                         tape.matmul(h, model.store.t("W_b")))
    return tape.softmax(logits, axis=0)


def _reps_with_eom(tape: Tape, model: PlannerModel, reps_c: Tensor) -> Tensor:
    eom_row = tape.stack_rows([model.store.t("eom")])
    return tape.concat([reps_c, eom_row], axis=0)


def _forward_reps(tape: Tape, model: PlannerModel, id_seqs):
    reps = encode_candidates(tape, model, id_seqs)
    reps_c = contextualize(tape, model, reps)
    return reps_c


# ---------------------------------------------------------------------------
# Training


def instance_loss(tape: Tape, model: PlannerModel, id_seqs,
                  pointer_seq: list[int]) -> Tensor:
    """Teacher-forced negative log likelihood of the plan (EOM included)."""
    store = model.store
    reps_c = _forward_reps(tape, model, id_seqs)
    all_reps = _reps_with_eom(tape, model, reps_c)
    k = len(id_seqs)
    h = tape.mean(reps_c, axis=0)
    c = tape.zeros(h.data.shape)
    x = store.t("start")
    loss = None
    for target in list(pointer_seq) + [k]:
        h, c = lstm_step(tape, x, h, c, store.t("dec.W"), store.t("dec.b"))
        dist = pointer_step(tape, model, h, all_reps)
        step_loss = tape.nll_pick(dist, target)
        loss = step_loss if loss is None else tape.add(loss, step_loss)
        if target < k:
            x = tape.row(reps_c, target)
    return loss


def train_planner(dataset, hyper: PlannerHyper,
                  bpe_model=None) -> tuple[PlannerModel, list[float]]:
    """``dataset`` is a list of (candidate token sequences, gold pointer
    sequence).  Returns the trained model and the per-epoch mean NLL."""
    if not dataset:
        raise ValueError("empty planner training set")
    for idx, (seqs, pointers) in enumerate(dataset):
        for z in pointers:
            if not 0 <= z < len(seqs):
                raise ValueError(f"instance {idx}: pointer {z} outside "
                                 f"candidate set of size {len(seqs)}")
    vocab = build_vocab(seq for seqs, _ in dataset for seq in seqs)
    rng = np.random.default_rng(hyper.seed)
    model = PlannerModel.init(vocab, hyper, rng)
    id_data = [([model.token_ids(s) for s in seqs], list(pointers))
               for seqs, pointers in dataset]

    trace = []
    order = np.arange(len(id_data))
    for _epoch in range(hyper.epochs):
        rng.shuffle(order)
        total = 0.0
        steps = 0
        for i in order:
            id_seqs, pointers = id_data[i]
            tape = Tape()
            model.store.bind(tape)
            loss = instance_loss(tape, model, id_seqs, pointers)
            tape.backward(loss)
            adagrad_step(model.store, hyper.lr, clip=hyper.grad_clip)
            total += float(loss.data)
            steps += len(pointers) + 1
        trace.append(total / steps)
        if hyper.stop_tol is not None and trace[-1] < hyper.stop_tol:
            break
    return model, trace


# ---------------------------------------------------------------------------
# Inference


@dataclass
class BeamHypothesis:
    pointers: tuple[int, ...]
    logprob: float
    h: np.ndarray
    c: np.ndarray
    finished: bool = False

    def score(self) -> float:
        return self.logprob / max(len(self.pointers), 1)


def _has_blocked_bigram(prefix: tuple[int, ...], nxt: int) -> bool:
    if not prefix:
        return False
    bigram = (prefix[-1], nxt)
    return any((a, b) == bigram for a, b in zip(prefix, prefix[1:]))


def infer_plan(candidate_token_seqs, model: PlannerModel, beam_size: int = 5,
               unigram_cap: bool = False,
               max_len: int | None = None) -> MacroPlan:
    """Beam search over pointer sequences with bigram blocking, an optional
    two-occurrence unigram cap, and length-normalized final ranking."""
    if beam_size < 1:
        raise ValueError("beam_size must be >= 1")
    max_len = max_len or model.hyper.max_plan_len
    id_seqs = [model.token_ids(s) for s in candidate_token_seqs]
    tape = Tape()
    store = model.store
    store.bind(tape)
    reps_c = _forward_reps(tape, model, id_seqs)
    all_reps = _reps_with_eom(tape, model, reps_c)
    k = len(id_seqs)

    h0 = reps_c.data.mean(axis=0)
    beams = [BeamHypothesis((), 0.0, h0, np.zeros_like(h0))]
    finished: list[BeamHypothesis] = []
    for _step in range(max_len + 1):
        expansions: list[BeamHypothesis] = []
        for hyp in beams:
            x = store.t("start") if not hyp.pointers \
                else tape.row(reps_c, hyp.pointers[-1])
            h_t, c_t = lstm_step(tape, x, Tensor(hyp.h, tape), Tensor(hyp.c, tape),
                                 store.t("dec.W"), store.t("dec.b"))
            dist = pointer_step(tape, model, h_t, all_reps).data
            for i in range(k + 1):
                logp = hyp.logprob + float(np.log(max(dist[i], 1e-300)))
                if i == k:
                    if hyp.pointers:
                        finished.append(BeamHypothesis(
                            hyp.pointers, logp, h_t.data, c_t.data, True))
                    continue
                if _has_blocked_bigram(hyp.pointers, i):
                    continue
                if unigram_cap and hyp.pointers.count(i) >= 2:
                    continue
                expansions.append(BeamHypothesis(
                    hyp.pointers + (i,), logp, h_t.data, c_t.data))
        if not expansions:
            break
        expansions.sort(key=lambda b: (-b.logprob, b.pointers))
        beams = expansions[:beam_size]

    if finished:
        finished.sort(key=lambda b: (-b.score(), b.pointers))
        return MacroPlan(finished[0].pointers, terminated=True)
    if beams:
        log.warning("beam search exhausted without EOM; returning best "
                    "unfinished hypothesis")
        beams.sort(key=lambda b: (-b.score(), b.pointers))
        return MacroPlan(beams[0].pointers, terminated=False)
    log.warning("all hypotheses pruned before any finished")
    return MacroPlan((), terminated=False)


def greedy_plan(candidate_token_seqs, model: PlannerModel,
                unigram_cap: bool = False,
                max_len: int | None = None) -> MacroPlan:
    """Stepwise argmax decode under the same blocking constraints."""
    max_len = max_len or model.hyper.max_plan_len
    id_seqs = [model.token_ids(s) for s in candidate_token_seqs]
    tape = Tape()
    store = model.store
    store.bind(tape)
    reps_c = _forward_reps(tape, model, id_seqs)
    all_reps = _reps_with_eom(tape, model, reps_c)
    k = len(id_seqs)

    h = tape.tensor(reps_c.data.mean(axis=0))
    c = tape.zeros(h.data.shape)
    x = store.t("start")
    pointers: tuple[int, ...] = ()
    for _step in range(max_len + 1):
        h, c = lstm_step(tape, x, h, c, store.t("dec.W"), store.t("dec.b"))
        dist = pointer_step(tape, model, h, all_reps).data.copy()
        for i in range(k):
            if _has_blocked_bigram(pointers, i):
                dist[i] = -1.0
            elif unigram_cap and pointers.count(i) >= 2:
                dist[i] = -1.0
        best = int(np.argmax(dist))
        if best == k:
            if pointers:
                return MacroPlan(pointers, terminated=True)
            dist[k] = -1.0
            best = int(np.argmax(dist))
            if dist[best] < 0:
                return MacroPlan((), terminated=False)
        pointers = pointers + (best,)
        x = tape.row(reps_c, best)
    log.warning("greedy decode hit the plan length cap")
    return MacroPlan(pointers, terminated=False)


def linearize(plan: MacroPlan, specs: list[ParagraphPlanSpec]) -> list[str]:
    """Concatenate verbalized paragraph plans in pointer order with ``<P>``
    between consecutive plans."""
    tokens: list[str] = []
    for pos, idx in enumerate(plan.pointer_sequence):
        if pos > 0:
            tokens.append(PARAGRAPH_SEP)
        tokens.extend(specs[idx].tokens)
    return tokens
