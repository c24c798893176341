import pytest

from wsnids.traffic import (AttackKind, AttackSpec, Behavior, TrafficGenerator, TrafficModel,
                            draw, poisson_table)

SENSORS = [7, 8, 9]


def _ticks(attacks, seed=11, n=50):
    base = TrafficGenerator(TrafficModel(2.0), SENSORS, seed)
    hit = TrafficGenerator(TrafficModel(2.0), SENSORS, seed, attacks)
    for tick in range(n):
        yield (base.records_for_tick(tick, lambda s: 3), hit.records_for_tick(tick, lambda s: 3))


def test_flood_multiplies_baseline():
    a = AttackSpec(8, AttackKind.FLOOD, 10, 30, multiplier=5)
    for tick, (plain, flooded) in enumerate(_ticks([a])):
        for p, f in zip(plain, flooded):
            if p.src == 8 and a.active(tick):
                assert f.size == 5 * p.size and Behavior.FLOOD in f.tags
            else:
                assert f.size == p.size


def test_full_drop_rate_drops_every_obligation():
    a = AttackSpec(7, AttackKind.PACKET_DROP, 0, 50, rate=1.0)
    seen = 0
    for plain, hit in _ticks([a]):
        rec = hit[0]
        assert rec.dropped == rec.obligations and Behavior.DROP in rec.tags
        seen += rec.obligations
    assert seen > 0


def test_known_signature_tags_every_record():
    a = AttackSpec(9, AttackKind.KNOWN_SIGNATURE, 5, 20, signature="s7")
    for tick, (_, hit) in enumerate(_ticks([a])):
        rec = hit[2]
        assert (rec.signatures == ("s7",)) == a.active(tick)
        assert "KnownSignature:s7" in dict(rec.log_fields())["tags"] or not a.active(tick)


def test_replay_marks_duplicates():
    a = AttackSpec(7, AttackKind.REPLAY, 0, 50)
    for _, hit in _ticks([a]):
        assert hit[0].replayed == hit[0].size


def test_attack_randomness_does_not_shift_baseline():
    a = AttackSpec(7, AttackKind.PACKET_DROP, 0, 50, rate=0.5)
    for plain, hit in _ticks([a]):
        assert [r.size for r in plain] == [r.size for r in hit]
        assert [r.obligations for r in plain] == [r.obligations for r in hit]


@pytest.mark.parametrize("kw", [
    dict(kind=AttackKind.FLOOD, start=5, stop=5),
    dict(kind=AttackKind.PACKET_DROP, start=0, stop=5, rate=1.5),
    dict(kind=AttackKind.FLOOD, start=0, stop=5, multiplier=0.5),
    dict(kind=AttackKind.KNOWN_SIGNATURE, start=0, stop=5),
])
def test_attack_definition_validation(kw):
    with pytest.raises(ValueError):
        AttackSpec(7, **kw)


def test_poisson_table_shape():
    t = poisson_table(2.0)
    assert t[-1] == 1.0 and all(a <= b for a, b in zip(t, t[1:]))
    assert draw(t, 0.0) == 0
    assert draw(t, 0.5) == 2  # P(X<=1) = 0.406, P(X<=2) = 0.677
    assert draw(t, 1.0) == len(t) - 1
    assert poisson_table(0.0) == [1.0]


def test_model_rejects_nonpositive_rate():
    with pytest.raises(ValueError):
        TrafficModel(0.0)
