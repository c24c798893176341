import pytest

from wsnids.scenario import parse_scenario

PROFILE = ("kind=profile scope=all k=3 pkt_rate=2.0/0.4472 drop_ratio=0/0.05 "
           "fwd_ratio=1/0.05 dup_count=0/0.5")


def scenario_text(*, regions=2, clusters=2, sensors=3, adjacency="R1-R2", policies=(),
                  attacks=(), failures=(), length=1000, window=10, extra_run=(), traffic=()):
    lines = ["[topology]", f"regions = {regions}", f"clusters_per_region = {clusters}",
             f"sensors_per_cluster = {sensors}"]
    if adjacency:
        lines.append(f"region_adjacency = {adjacency}")
    lines += ["", "[traffic]", "rate = 2.0", *traffic]
    lines += ["", "[policies]", *policies]
    lines += ["", "[attacks]", *attacks]
    lines += ["", "[failures]", *failures]
    lines += ["", "[run]", f"length = {length}", f"window = {window}", *extra_run]
    return "\n".join(lines) + "\n"


def make_scenario(**kw):
    return parse_scenario(scenario_text(**kw))


@pytest.fixture
def signature_policies():
    return [f"at=0 {PROFILE}", "at=0 kind=signature scope=all id=s7 match=tag:s7"]
