import numpy as np
import pytest

from bmpoincare import SupportFunction, build_quadrature

BALL = {"type": "ball", "radius": 1}
ELLIPSOID = {"type": "ellipsoid", "semiaxes": [1, 1.5, 2]}
PERTURBED = {"type": "harmonic_perturbation", "base": BALL, "coefficients": {"2,0": 0.08}}
OVERPERTURBED = {"type": "harmonic_perturbation", "base": BALL, "coefficients": {"4,0": 0.5}}


@pytest.fixture(scope="session")
def quad2():
    return build_quadrature(2, 128)


@pytest.fixture(scope="session")
def quad3():
    return build_quadrature(3, 32)


@pytest.fixture(scope="session")
def quad3_coarse():
    return build_quadrature(3, 24)


@pytest.fixture(scope="session")
def ball3():
    return SupportFunction(BALL)


@pytest.fixture(scope="session")
def ellipsoid3():
    return SupportFunction(ELLIPSOID)


@pytest.fixture(scope="session")
def perturbed3():
    return SupportFunction(PERTURBED)


def geodesic(u, e, t):
    return np.cos(t) * u + np.sin(t) * e


def fd_gradient(f, u, frame, eps=1e-5):
    """Central differences of f along great circles through u."""
    return np.array([(f(geodesic(u, e, eps)) - f(geodesic(u, e, -eps))) / (2 * eps) for e in frame])


def fd_hessian(f, u, frame, eps=1e-4):
    """Second differences along great circles; off-diagonals by polarization."""
    k = len(frame)
    f0 = f(u)

    def second(e):
        return (f(geodesic(u, e, eps)) - 2 * f0 + f(geodesic(u, e, -eps))) / eps**2

    H = np.empty((k, k))
    for i in range(k):
        H[i, i] = second(frame[i])
    for i in range(k):
        for j in range(i + 1, k):
            d = (frame[i] + frame[j]) / np.sqrt(2)
            H[i, j] = H[j, i] = second(d) - 0.5 * (H[i, i] + H[j, j])
    return H


def random_directions(rng, n, count):
    u = rng.standard_normal((count, n))
    return u / np.linalg.norm(u, axis=1)[:, None]


def random_pairs(count=20, seed=11):
    """(dim, body doc, phi key) with valid bodies and moderate perturbation directions."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        dim = 3 if k % 4 else 2
        a = rng.uniform(0.8, 2.0, dim)
        doc = {"type": "translate", "inner": {"type": "ellipsoid", "semiaxes": a.tolist()},
               "vector": rng.uniform(-1, 1, dim).tolist()}
        if k % 3 == 0:
            key = f"{2}," + str(rng.integers(-2, 3)) if dim == 3 else str(rng.choice([-3, 3]))
            doc = {"type": "harmonic_perturbation", "base": doc, "coefficients": {key: 0.03}}
        l = int(rng.integers(1, 5))
        phi = f"{l},{rng.integers(-l, l + 1)}" if dim == 3 else str(int(rng.choice([-1, 1]) * l))
        out.append((dim, doc, phi))
    return out


_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, {"title": title, "ok": True, "tests": 0})
    if rep.when == "call":
        entry["tests"] += 1
    if rep.failed:
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        status = "PASS" if e["ok"] else "FAIL"
        checks = f"{e['tests']} check" + ("" if e["tests"] == 1 else "s")
        terminalreporter.write_line(f"criterion {number:2d} {status}  {e['title']} ({checks})")
