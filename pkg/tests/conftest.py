"""测试公共设置：把 scripts/ 加入 sys.path，提供常用嵌入与群字策略。"""

import sys
from pathlib import Path

import pytest
from hypothesis import strategies as st

SCRIPTS_DIR = Path(__file__).resolve().parent.parent / "scripts"
if str(SCRIPTS_DIR) not in sys.path:
    sys.path.insert(0, str(SCRIPTS_DIR))

from embeddings import make_spec  # noqa: E402
from sl2z import GroupWord  # noqa: E402


def group_words(max_terms: int = 6, max_exp: int = 3):
    """R、S 上的随机群字。"""
    term = st.tuples(st.sampled_from(("R", "S")),
                     st.integers(-max_exp, max_exp).filter(lambda e: e != 0))
    return st.lists(term, max_size=max_terms).map(lambda ts: GroupWord(tuple(ts)))


@pytest.fixture(scope="session")
def theta_s():
    return make_spec("theta_s")


@pytest.fixture(scope="session")
def theta_minus():
    return make_spec("theta_minus")


@pytest.fixture(scope="session")
def theta_eps2():
    return make_spec("theta_eps", eps=2)


@pytest.fixture(scope="session")
def theta_p():
    return make_spec("theta_P")


@pytest.fixture(scope="session")
def theta_k2():
    return make_spec("theta_k", k=2, mu=5)
