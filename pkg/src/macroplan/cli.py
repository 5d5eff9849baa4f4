"""Pipeline orchestration: file-based stages (synth, derive-plans, enumerate,
train-planner, train-generator, plan, generate, evaluate, gradcheck), each
rerunnable from its input artifacts and byte-deterministic under fixed seeds."""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import bpe as bpe_mod
from .baselines import templ_summary
from .candidates import augment_with_gold, enumerate_candidates
from .data import (AliasTable, Game, SummaryDoc, SYNTH_SCHEMA,
                   load_alias_table, load_games, save_games)
from .generator import (GeneratorHyper, GeneratorModel, build_gen_vocab,
                        generate, train_generator)
from .metrics import (DEFAULT_EXTRACTION_LEXICON, ExtractionLexicon,
                      evaluate_summaries, intrinsic_plan_eval,
                      plan_fidelity, plan_identifiers)
from .nn import grad_check, load_params, save_params
from .oracle import (DEFAULT_INNING_LEXICON, InningLexicon, derive_macro_plan)
from .planner import (MacroPlan, PlannerHyper, PlannerModel, infer_plan,
                      linearize, train_planner)
from .synth import SynthConfig, synth_league
from .verbalize import PARAGRAPH_SEP, ParagraphPlanSpec, render_spec, \
    verbalize_plan

__all__ = ["RunConfig", "main", "run",
           "format_plan_line", "parse_plan_line"]


class StageError(RuntimeError):
    """A stage was invoked before the stages it depends on."""


@dataclass(frozen=True)
class RunConfig:
    games: int = 100
    innings: int = 4
    batters_per_team: int = 2
    pitchers_per_team: int = 1
    kind: str = "event-rich"
    seed: int = 7
    holdout: int = 10
    merge_probability: float = 0.25
    planner_epochs: int = 6
    planner_lr: float = 0.02
    planner_emb: int = 64
    planner_hidden: int = 128
    planner_merges: int = 300
    generator_epochs: int = 6
    generator_lr: float = 0.02
    generator_emb: int = 64
    generator_hidden: int = 128
    generator_merges: int = 600
    generator_trunc: int = 100
    generator_max_len: int = 400
    beam: int = 5
    alias_path: str | None = None
    extraction_lexicon_path: str | None = None
    inning_lexicon_path: str | None = None

    @staticmethod
    def from_file(path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        known = set(RunConfig.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return RunConfig(**obj)

    def aliases(self) -> AliasTable:
        if self.alias_path:
            return load_alias_table(self.alias_path)
        return AliasTable()

    def extraction_lexicon(self) -> ExtractionLexicon:
        if self.extraction_lexicon_path:
            return ExtractionLexicon.from_file(self.extraction_lexicon_path)
        return DEFAULT_EXTRACTION_LEXICON

    def inning_lexicon(self) -> InningLexicon:
        if self.inning_lexicon_path:
            return InningLexicon.from_file(self.inning_lexicon_path)
        return DEFAULT_INNING_LEXICON

    def validate_paths(self) -> None:
        for p in (self.alias_path, self.extraction_lexicon_path,
                  self.inning_lexicon_path):
            if p and not Path(p).exists():
                raise FileNotFoundError(p)


# ---------------------------------------------------------------------------
# Plan file format: one line per game —
#   game_id <TAB> V(...) <P> V(...) ... <TAB> # i1 i2 ...


_EVENT_REF = re.compile(r"^\d+-[TB]$")


def format_plan_line(game_id: str, plan: MacroPlan,
                     specs: list[ParagraphPlanSpec]) -> str:
    rendering = f" {PARAGRAPH_SEP} ".join(
        render_spec(specs[i]) for i in plan.pointer_sequence)
    pointers = " ".join(str(i) for i in plan.pointer_sequence)
    return f"{game_id}\t{rendering}\t# {pointers}"


def parse_plan_line(line: str):
    """Returns (game_id, [(entity_refs, event_refs), ...], pointer list)."""
    game_id, rendering, comment = line.rstrip("\n").split("\t")
    pointers = [int(x) for x in comment.lstrip("# ").split()] \
        if comment.strip("# ") else []
    paragraphs = []
    for part in rendering.split(PARAGRAPH_SEP):
        entity_refs: list[str] = []
        event_refs: list[tuple[int, str]] = []
        for inner in re.findall(r"V\(([^)]*)\)", part):
            items = [x.strip() for x in inner.split(",")]
            if all(_EVENT_REF.match(x) for x in items):
                for x in items:
                    inning, half = x.split("-")
                    event_refs.append((int(inning), half))
            else:
                entity_refs.append(inner)
        paragraphs.append((tuple(entity_refs), tuple(event_refs)))
    return game_id, paragraphs, pointers


def _spec_from_refs(entity_refs, event_refs, game: Game) -> ParagraphPlanSpec:
    from .oracle import _classify_spec
    spec = _classify_spec(entity_refs, event_refs)
    if spec is None:
        raise ValueError("plan paragraph references nothing")
    return verbalize_plan(spec, game)


def read_plan_file(path, games: list[Game]):
    """game id -> list of verbalized ParagraphPlanSpec, in plan order."""
    by_id = {g.id: g for g in games}
    plans: dict[str, list[ParagraphPlanSpec]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            game_id, paragraphs, _ = parse_plan_line(line)
            game = by_id[game_id]
            plans[game_id] = [_spec_from_refs(e, v, game)
                              for e, v in paragraphs]
    return plans


# ---------------------------------------------------------------------------
# Artifact helpers


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _update_manifest(out: Path, stage: str, inputs: list[Path]) -> None:
    manifest_path = out / "manifest.json"
    manifest = {}
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text())
    manifest[stage] = {p.name: _sha256(p) for p in sorted(inputs)}
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True)
                             + "\n")


def _require(out: Path, stage: str, *names: str) -> list[Path]:
    paths = []
    for name in names:
        p = out / name
        if not p.exists():
            raise StageError(
                f"stage {stage!r} requires artifact {name!r} in {out}; run "
                f"the producing stage first")
        paths.append(p)
    return paths


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("MACROPLAN_THREADS", "1")))
    except ValueError:
        return 1


def _save_model(out: Path, prefix: str, store, vocab: dict,
                bpe_model) -> None:
    save_params(out / f"{prefix}.mpln", store)
    (out / f"{prefix}_vocab.json").write_text(
        json.dumps(vocab, indent=0, sort_keys=True) + "\n")
    bpe_mod.save_bpe(out / f"{prefix}.bpe", bpe_model)


def _load_vocab(path: Path) -> dict[str, int]:
    return {k: int(v) for k, v in json.loads(path.read_text()).items()}


# ---------------------------------------------------------------------------
# Stages


def stage_synth(cfg: RunConfig, out: Path) -> None:
    scfg = SynthConfig(games=cfg.games, innings=cfg.innings,
                       batters_per_team=cfg.batters_per_team,
                       pitchers_per_team=cfg.pitchers_per_team,
                       seed=cfg.seed, kind=cfg.kind,
                       merge_probability=cfg.merge_probability)
    pairs = synth_league(scfg)
    save_games(out / "games.jsonl", [g for g, _ in pairs])
    _update_manifest(out, "synth", [out / "games.jsonl"])
    print(f"synth: wrote {len(pairs)} games to {out / 'games.jsonl'}")


def _load_corpus(cfg: RunConfig, out: Path, stage: str) -> list[Game]:
    (path,) = _require(out, stage, "games.jsonl")
    return load_games(path, SYNTH_SCHEMA)


def stage_derive_plans(cfg: RunConfig, out: Path) -> None:
    games = _load_corpus(cfg, out, "derive-plans")
    aliases, lexicon = cfg.aliases(), cfg.inning_lexicon()
    lines = []
    for game in games:
        plan, specs = derive_macro_plan(game, aliases, lexicon)
        lines.append(format_plan_line(game.id, plan, specs))
    (out / "plans_gold.txt").write_text("\n".join(lines) + "\n")
    _update_manifest(out, "derive-plans",
                     [out / "games.jsonl", out / "plans_gold.txt"])
    print(f"derive-plans: wrote {len(lines)} gold plans")


def stage_enumerate(cfg: RunConfig, out: Path) -> None:
    games = _load_corpus(cfg, out, "enumerate")
    lines = []
    for game in games:
        for idx, spec in enumerate(enumerate_candidates(game)):
            lines.append(f"{game.id}\t{idx}\t{render_spec(spec)}")
    (out / "candidates.txt").write_text("\n".join(lines) + "\n")
    _update_manifest(out, "enumerate",
                     [out / "games.jsonl", out / "candidates.txt"])
    print(f"enumerate: wrote candidate sets for {len(games)} games")


def _train_split(cfg: RunConfig, games: list[Game]) -> list[Game]:
    if cfg.holdout >= len(games):
        raise ValueError("holdout leaves no training games")
    return games[:len(games) - cfg.holdout] if cfg.holdout else games


def _planner_dataset(cfg: RunConfig, out: Path, stage: str):
    games = _load_corpus(cfg, out, stage)
    (gold_path,) = _require(out, stage, "plans_gold.txt")
    plans = read_plan_file(gold_path, games)
    train_games = _train_split(cfg, games)

    corpus = []
    per_game = []
    for game in train_games:
        cands = augment_with_gold(enumerate_candidates(game), plans[game.id])
        pointers = []
        index = {c.identity(): i for i, c in enumerate(cands)}
        for spec in plans[game.id]:
            if spec.identity() not in index:
                raise ValueError(
                    f"game {game.id}: gold paragraph plan unresolvable in "
                    f"augmented candidate set")
            pointers.append(index[spec.identity()])
        per_game.append((cands, pointers))
        corpus.extend(list(c.tokens) for c in cands)
    model = bpe_mod.learn_bpe(corpus, cfg.planner_merges)
    dataset = [([bpe_mod.encode(model, list(c.tokens)) for c in cands],
                pointers)
               for cands, pointers in per_game]
    return games, dataset, model


def stage_train_planner(cfg: RunConfig, out: Path) -> None:
    _, dataset, bpe_model = _planner_dataset(cfg, out, "train-planner")
    hyper = PlannerHyper(emb_dim=cfg.planner_emb, hidden=cfg.planner_hidden,
                         lr=cfg.planner_lr, epochs=cfg.planner_epochs,
                         seed=cfg.seed, beam_size=cfg.beam)
    model, trace = train_planner(dataset, hyper)
    _save_model(out, "planner", model.store, model.vocab, bpe_model)
    (out / "planner_loss.json").write_text(
        json.dumps({"per_epoch_nll": trace}, indent=2) + "\n")
    _update_manifest(out, "train-planner",
                     [out / "planner.mpln", out / "planner_vocab.json",
                      out / "planner.bpe", out / "planner_loss.json"])
    print(f"train-planner: final per-step NLL {trace[-1]:.4f}")


def _load_planner(cfg: RunConfig, out: Path, stage: str):
    _require(out, stage, "planner.mpln", "planner_vocab.json", "planner.bpe")
    store = load_params(out / "planner.mpln")
    vocab = _load_vocab(out / "planner_vocab.json")
    bpe_model = bpe_mod.load_bpe(out / "planner.bpe")
    hyper = PlannerHyper(emb_dim=cfg.planner_emb, hidden=cfg.planner_hidden,
                         beam_size=cfg.beam)
    return PlannerModel(store, vocab, hyper), bpe_model


def stage_plan(cfg: RunConfig, out: Path) -> None:
    games = _load_corpus(cfg, out, "plan")
    model, bpe_model = _load_planner(cfg, out, "plan")
    lines = []
    for game in games:
        cands = enumerate_candidates(game)
        seqs = [bpe_mod.encode(bpe_model, list(c.tokens)) for c in cands]
        plan = infer_plan(seqs, model, beam_size=cfg.beam,
                          unigram_cap=game.kind == "event-rich")
        lines.append(format_plan_line(game.id, plan, cands))
    (out / "plans_pred.txt").write_text("\n".join(lines) + "\n")
    _update_manifest(out, "plan", [out / "plans_pred.txt"])
    print(f"plan: wrote {len(lines)} predicted plans")


def _generator_pairs(cfg: RunConfig, games: list[Game], plans,
                     merges: int):
    protected = {PARAGRAPH_SEP}
    for game in games:
        for e in game.entities:
            protected.add(e.name)
            protected.update(v for _, v in e.attributes)
    summaries = []
    for game in games:
        tokens: list[str] = []
        for i, p in enumerate(game.summary.paragraphs):
            if i > 0:
                tokens.append(PARAGRAPH_SEP)
            tokens.extend(p)
        summaries.append(tokens)
    bpe_model = bpe_mod.learn_bpe(summaries, merges, protected=protected)
    pairs = []
    for game, tokens in zip(games, summaries):
        specs = plans[game.id]
        plan = MacroPlan(tuple(range(len(specs))))
        pairs.append((linearize(plan, specs), bpe_mod.encode(bpe_model,
                                                             tokens)))
    return pairs, bpe_model


def stage_train_generator(cfg: RunConfig, out: Path) -> None:
    games = _load_corpus(cfg, out, "train-generator")
    (gold_path,) = _require(out, "train-generator", "plans_gold.txt")
    plans = read_plan_file(gold_path, games)
    train_games = _train_split(cfg, games)
    pairs, bpe_model = _generator_pairs(cfg, train_games, plans,
                                        cfg.generator_merges)
    hyper = GeneratorHyper(emb_dim=cfg.generator_emb,
                           hidden=cfg.generator_hidden,
                           lr=cfg.generator_lr, epochs=cfg.generator_epochs,
                           seed=cfg.seed + 1, trunc=cfg.generator_trunc,
                           max_len=cfg.generator_max_len, beam_size=cfg.beam)
    model, trace = train_generator(pairs, hyper)
    _save_model(out, "generator", model.store, model.vocab, bpe_model)
    (out / "generator_loss.json").write_text(
        json.dumps({"per_epoch_nll": trace}, indent=2) + "\n")
    _update_manifest(out, "train-generator",
                     [out / "generator.mpln", out / "generator_vocab.json",
                      out / "generator.bpe", out / "generator_loss.json"])
    print(f"train-generator: final per-token NLL {trace[-1]:.4f}")


def _load_generator(cfg: RunConfig, out: Path, stage: str):
    _require(out, stage, "generator.mpln", "generator_vocab.json",
             "generator.bpe")
    store = load_params(out / "generator.mpln")
    vocab = _load_vocab(out / "generator_vocab.json")
    bpe_model = bpe_mod.load_bpe(out / "generator.bpe")
    hyper = GeneratorHyper(emb_dim=cfg.generator_emb,
                           hidden=cfg.generator_hidden,
                           trunc=cfg.generator_trunc,
                           max_len=cfg.generator_max_len, beam_size=cfg.beam)
    return GeneratorModel(store, vocab, hyper), bpe_model


def _summary_from_tokens(bpe_model, tokens: list[str]) -> SummaryDoc:
    paragraphs: list[list[str]] = [[]]
    for tok in tokens:
        if tok == PARAGRAPH_SEP:
            paragraphs.append([])
        else:
            paragraphs[-1].append(tok)
    paragraphs = [bpe_mod.decode(bpe_model, p) for p in paragraphs if p]
    if not paragraphs:
        paragraphs = [["."]]
    return SummaryDoc.from_lists(paragraphs)


def stage_generate(cfg: RunConfig, out: Path) -> None:
    games = _load_corpus(cfg, out, "generate")
    (pred_path,) = _require(out, "generate", "plans_pred.txt")
    model, bpe_model = _load_generator(cfg, out, "generate")
    plans = read_plan_file(pred_path, games)

    def one(game: Game):
        specs = plans[game.id]
        plan = MacroPlan(tuple(range(len(specs))))
        tokens = generate(linearize(plan, specs), model, beam_size=cfg.beam)
        return game.id, _summary_from_tokens(bpe_model, tokens)

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(one, games))

    jsonl, flat, readable = [], [], []
    for game_id, doc in results:
        jsonl.append(json.dumps(
            {"id": game_id, "paragraphs": [list(p) for p in doc.paragraphs]},
            sort_keys=True))
        flat.append(game_id + "\t" + " ".join(doc.tokens()))
        readable.append(game_id + "\n" + "\n\n".join(
            " ".join(p) for p in doc.paragraphs))
    (out / "summaries.jsonl").write_text("\n".join(jsonl) + "\n")
    (out / "summaries.txt").write_text("\n".join(flat) + "\n")
    (out / "summaries_readable.txt").write_text(
        "\n\n----\n\n".join(readable) + "\n")
    _update_manifest(out, "generate",
                     [out / "summaries.jsonl", out / "summaries.txt",
                      out / "summaries_readable.txt"])
    print(f"generate: wrote {len(results)} summaries")


def stage_evaluate(cfg: RunConfig, out: Path) -> None:
    games = _load_corpus(cfg, out, "evaluate")
    _require(out, "evaluate", "summaries.jsonl", "plans_pred.txt")
    by_id = {g.id: g for g in games}
    docs: dict[str, SummaryDoc] = {}
    with open(out / "summaries.jsonl", encoding="utf-8") as fh:
        for line in fh:
            obj = json.loads(line)
            docs[obj["id"]] = SummaryDoc.from_lists(obj["paragraphs"])
    plans = read_plan_file(out / "plans_pred.txt", games)
    gold_plans = None
    if (out / "plans_gold.txt").exists():
        gold_plans = read_plan_file(out / "plans_gold.txt", games)

    ids = [g.id for g in games if g.id in docs]
    aliases = cfg.aliases()
    lexicon = cfg.extraction_lexicon()
    inning_lex = cfg.inning_lexicon()

    def fidelity(game_id):
        return plan_fidelity(docs[game_id], plans[game_id], by_id[game_id],
                             aliases, lexicon=inning_lex)

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        fid = list(pool.map(fidelity, ids))
    fid_cs = sum(f for f, _ in fid) / len(fid) if fid else 100.0
    fid_co = sum(c for _, c in fid) / len(fid) if fid else 100.0

    report = evaluate_summaries([docs[i] for i in ids],
                                [by_id[i] for i in ids],
                                lexicon=lexicon, aliases=aliases,
                                plan_scores=(fid_cs, fid_co))
    payload = json.loads(report.to_json())
    if gold_plans is not None:
        p, r, f, co_val = intrinsic_plan_eval(
            [plan_identifiers(plans[i]) for i in ids],
            [plan_identifiers(gold_plans[i]) for i in ids])
        payload["intrinsic_plan"] = {"cs_precision": p, "cs_recall": r,
                                     "cs_f": f, "co": co_val}
    (out / "report.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n")
    _update_manifest(out, "evaluate", [out / "report.json"])
    print(json.dumps(payload, indent=2, sort_keys=True))


def stage_gradcheck(cfg: RunConfig, out: Path) -> None:
    from .planner import build_vocab, instance_loss as planner_loss
    from .generator import build_gen_vocab, instance_loss as gen_loss
    from .autodiff import Tape

    rng = np.random.default_rng(cfg.seed)
    worst = 0.0

    seqs = [["<TEAM>A", "<TR>3"], ["<PLAYER>B", "<AB>4", "<BH>2"],
            ["<TEAM>C"]]
    vocab = build_vocab(seqs)
    hyper = PlannerHyper(emb_dim=5, hidden=4)
    pmodel = PlannerModel.init(vocab, hyper, rng)
    ids = [pmodel.token_ids(s) for s in seqs]

    def ploss():
        tape = Tape()
        pmodel.store.bind(tape)
        return planner_loss(tape, pmodel, ids, [1, 0])

    worst = max(worst, grad_check(ploss, pmodel.store, max_coords=4, rng=rng))

    pairs = [(["<TEAM>A", "<TR>3", PARAGRAPH_SEP, "<PLAYER>B"],
              ["A", "scored", "3", "."])]
    gvocab = build_gen_vocab(pairs)
    ghyper = GeneratorHyper(emb_dim=5, hidden=4)
    gmodel = GeneratorModel.init(gvocab, ghyper, rng)

    def gloss():
        tape = Tape()
        gmodel.store.bind(tape)
        return gen_loss(tape, gmodel, pairs[0][0], pairs[0][1])

    worst = max(worst, grad_check(gloss, gmodel.store, max_coords=4, rng=rng))
    print(f"gradcheck: max relative error {worst:.3e}")
    if worst > 1e-4:
        raise SystemExit(f"gradient check failed: {worst:.3e} > 1e-4")


STAGES = {
    "synth": stage_synth,
    "derive-plans": stage_derive_plans,
    "enumerate": stage_enumerate,
    "train-planner": stage_train_planner,
    "train-generator": stage_train_generator,
    "plan": stage_plan,
    "generate": stage_generate,
    "evaluate": stage_evaluate,
    "gradcheck": stage_gradcheck,
}


def run(subcommand: str, cfg: RunConfig, out: Path) -> int:
    if subcommand not in STAGES:
        print(f"unknown subcommand {subcommand!r}", file=sys.stderr)
        return 2
    out.mkdir(parents=True, exist_ok=True)
    try:
        cfg.validate_paths()
        STAGES[subcommand](cfg, out)
    except (StageError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="macroplan",
        description="Macro-planned data-to-text pipeline")
    parser.add_argument("subcommand", choices=sorted(STAGES))
    parser.add_argument("--config", type=str, default=None,
                        help="JSON RunConfig file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", type=str, default="out")
    parser.add_argument("--beam", type=int, default=None)
    parser.add_argument("--kind", choices=["event-rich", "event-free"],
                        default=None)
    args = parser.parse_args(argv)

    try:
        cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    except (OSError, ValueError, TypeError) as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return 1
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.beam is not None:
        overrides["beam"] = args.beam
    if args.kind is not None:
        overrides["kind"] = args.kind
    if overrides:
        cfg = replace(cfg, **overrides)
    return run(args.subcommand, cfg, Path(args.out))


if __name__ == "__main__":
    sys.exit(main())
