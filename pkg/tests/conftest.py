import pathlib
import sys

import pytest

TESTS_DIR = pathlib.Path(__file__).parent
PROGRAMS_DIR = TESTS_DIR / "programs"
sys.path.insert(0, str(TESTS_DIR))

SUITE = ["const", "letchain", "branch", "casetest", "observe", "failtest",
         "mutual", "pcfg", "pcfgw"]
# programs where every if/case code path has nonzero weight, so derivation
# trees and interpreter code paths are in bijection (pcfgw's string
# constraint gives some trees weight zero)
BRANCHING_SUITE = [n for n in SUITE if n != "pcfgw"]


def load_program(name):
    from fggc.params import load_params
    source = (PROGRAMS_DIR / f"{name}.ppl").read_text()
    params = load_params(str(PROGRAMS_DIR / f"{name}.params.json"))
    return source, params


@pytest.fixture
def programs_dir():
    return PROGRAMS_DIR
