import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from kronprec.covariance import SymMatrix
from kronprec.data import ReplicateTensor

settings.register_profile(
    "kronprec", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("kronprec")


def random_correlation(rng, p, n=None, labels=None):
    """Sample correlation of ``n`` draws from a random linear model (PD for n > p)."""
    n = n or 2 * p + 5
    X = rng.standard_normal((n, p)) @ rng.standard_normal((p, p)) * 0.5 + rng.standard_normal((n, p))
    S = X.T @ X / n
    d = np.sqrt(np.diag(S))
    G = S / np.outer(d, d)
    G = 0.5 * (G + G.T)
    np.fill_diagonal(G, 1.0)
    return SymMatrix(G, "correlation", labels or [f"v{i}" for i in range(p)])


def random_tensor(rng, n_s=3, n_w=4, n_r=2, n_t=5, scale=1.0, offset=0.0):
    values = offset + scale * rng.standard_normal((n_s, n_w, n_r, n_t))
    return ReplicateTensor(
        values, tuple(f"s{i}" for i in range(n_s)), tuple(f"w{j}" for j in range(n_w))
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


METADATA_HEADER = "word,vowel,vowel_length,onset,coda_first,coda_last,consonant_class\n"


@pytest.fixture
def metadata_csv(tmp_path):
    rows = [
        "met,ɛ,short,m,t,t,nasal",
        "man,a,short,m,n,n,nasal",
        "baat,a,long,b,t,t,labial",
        "deur,œ,long,d,r,r,alveolar",
        "vaal,a,long,f,l,l,fricative",
    ]
    path = tmp_path / "meta.csv"
    path.write_text(METADATA_HEADER + "\n".join(rows) + "\n", encoding="utf-8")
    return path


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
