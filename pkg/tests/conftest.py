import hypothesis.strategies as st
from hypothesis import HealthCheck, settings

from hflop.topology import Device, EdgeNode, HflopInstance, Topology

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def make_instance(cost, cloud, lam, cap, l=1, T=None):
    devices = tuple(Device(i, float(x)) for i, x in enumerate(lam))
    edges = tuple(EdgeNode(j, float(r), float(c)) for j, (r, c) in enumerate(zip(cap, cloud)))
    return HflopInstance(Topology(devices, edges, cost), l=l, T=len(lam) if T is None else T)


@st.composite
def small_instances(draw, max_n=6, max_m=3, unit_costs=False):
    """Random instances in the oracle range; cost grids in halves, rates in tenths."""
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(1, max_m))
    if unit_costs:
        cost_val = st.sampled_from([0.0, 1.0])
        cloud = [1.0] * m
    else:
        cost_val = st.integers(0, 8).map(lambda k: k / 2)
        cloud = draw(st.lists(st.integers(0, 10).map(float), min_size=m, max_size=m))
    cost = draw(st.lists(st.lists(cost_val, min_size=m, max_size=m), min_size=n, max_size=n))
    lam = draw(st.lists(st.integers(0, 50).map(lambda k: k / 10), min_size=n, max_size=n))
    cap = draw(st.lists(st.one_of(st.integers(0, 120).map(lambda k: k / 10), st.just(float("inf"))),
                        min_size=m, max_size=m))
    l = draw(st.integers(1, 3))
    T = draw(st.integers(0, n))
    return make_instance(cost, cloud, lam, cap, l, T)


ACCEPTANCE = {}  # criterion number -> (passed, summary line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, line = ACCEPTANCE[k]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {k}: {line}")
