import numpy as np
import pytest

WORKED = [1.0, 0.9, 0.5, 0.2, 0.1, 0.05]


def curve_fixture(values, order=None, dim=2):
    """CLS and visual embeddings whose softmax similarities are proportional to ``values``.

    With ``cls = e_0`` each logit is ``row[0] / sqrt(dim)``; setting that to
    ``log(value)`` makes the softmax a positive rescaling of ``values``.
    ``order`` permutes the visual rows so sorted and original order differ.
    """
    v = np.asarray(values, dtype=np.float64)
    order = np.arange(len(v)) if order is None else np.asarray(order)
    cls = np.zeros((1, dim), dtype=np.float32)
    cls[0, 0] = 1.0
    visual = np.zeros((len(v), dim), dtype=np.float32)
    visual[order, 0] = np.sqrt(dim) * np.log(v)
    return cls, visual


@pytest.fixture
def worked_tokens():
    # value WORKED[k] sits at visual row order[k]
    order = [3, 0, 5, 1, 4, 2]
    cls, visual = curve_fixture(WORKED, order)
    return cls, visual, order


# -- acceptance criteria report -----------------------------------------------

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    detail = dict(item.user_properties).get("detail", "")
    ok = call.excinfo is None
    if not ok:
        first = (str(call.excinfo.value).splitlines() or [""])[0][:160]
        detail = f"{detail} | {call.excinfo.typename}: {first}".strip(" |")
    _criteria[number] = (title, ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok, detail = _criteria[number]
        terminalreporter.write_line(f"AC{number} {'PASS' if ok else 'FAIL'}  {title}  [{detail}]")
