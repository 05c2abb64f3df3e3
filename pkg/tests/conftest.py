import os

from hypothesis import HealthCheck, settings

from spatialprobe.relations import RelationContext
from spatialprobe.scene import Entity

settings.register_profile("default", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def ent(i, x=0.0, y=0.0, color=75, size=2):
    return Entity(i, float(x), float(y), color, size)


def make_ctx(subjects=(), objects=(), no_object=False, others=()):
    """Context whose view is subjects + objects + others (deduplicated by id)."""
    view = {e.id: e for e in (*subjects, *objects, *others)}
    return RelationContext(tuple(subjects), tuple(objects), no_object, tuple(view.values()))


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
