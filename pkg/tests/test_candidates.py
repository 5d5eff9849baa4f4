from macroplan.candidates import augment_with_gold, enumerate_candidates
from macroplan.verbalize import ParagraphPlanSpec


def _kinds(cands):
    return [c.kind for c in cands]


class TestEnumerate:
    def test_count_event_rich(self, demo_game):
        # 2 teams + 6 players + 4 halves + team-pair + 2*6 team+player
        # + 6 player+both-teams = 31
        cands = enumerate_candidates(demo_game)
        assert len(cands) == 31

    def test_all_verbalized(self, demo_game):
        assert all(c.tokens for c in enumerate_candidates(demo_game))

    def test_singletons_precede_combinations(self, demo_game):
        kinds = _kinds(enumerate_candidates(demo_game))
        last_single = max(i for i, k in enumerate(kinds)
                          if k in ("entity-singleton", "event-group"))
        first_combo = min(i for i, k in enumerate(kinds) if k == "entity-pair")
        assert last_single < first_combo

    def test_event_groups_follow_halves_order(self, demo_game):
        groups = [c.event_refs for c in enumerate_candidates(demo_game)
                  if c.kind == "event-group"]
        assert groups == [((1, "T"),), ((1, "B"),), ((2, "T"),), ((4, "B"),)]

    def test_player_pairs_only_for_event_free(self, demo_game):
        rich = enumerate_candidates(demo_game)
        free = enumerate_candidates(demo_game, kind="event-free")
        def pairs(cands):
            return [c for c in cands if c.kind == "entity-pair"
                    and len(c.entity_refs) == 2
                    and not any(r in ("Royals", "Orioles")
                                for r in c.entity_refs)]
        assert not pairs(rich)
        assert len(pairs(free)) == 15  # C(6, 2)

    def test_player_pairs_override(self, demo_game):
        cands = enumerate_candidates(demo_game, player_pairs=True)
        assert any(c.entity_refs == ("W.Merrifield", "R.O'Hearn")
                   for c in cands)

    def test_deterministic(self, demo_game):
        a = enumerate_candidates(demo_game)
        b = enumerate_candidates(demo_game)
        assert [c.identity() for c in a] == [c.identity() for c in b]


class TestAugment:
    def test_novel_gold_appended(self, demo_game):
        cands = enumerate_candidates(demo_game)
        gold = [ParagraphPlanSpec("event-group", (),
                                  ((1, "T"), (1, "B")))]  # merged, not enumerated
        out = augment_with_gold(cands, gold)
        assert len(out) == len(cands) + 1
        assert out[-1].identity() == gold[0].identity()

    def test_present_gold_not_duplicated(self, demo_game):
        cands = enumerate_candidates(demo_game)
        gold = [ParagraphPlanSpec("entity-singleton", ("C.Mullins",))]
        out = augment_with_gold(cands, gold)
        assert len(out) == len(cands)

    def test_original_list_unmodified(self, demo_game):
        cands = enumerate_candidates(demo_game)
        n = len(cands)
        augment_with_gold(cands, [ParagraphPlanSpec(
            "event-group", (), ((1, "T"), (2, "T")))])
        assert len(cands) == n
