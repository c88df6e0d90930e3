import pytest

from multiclp.cnn import builtin_alexnet
from multiclp.cost import GIB, ResourceBudget, make_design

# reference AlexNet designs: ((Tn, Tm), [(layer, (Tr, Tc)), ...]) per CLP
SINGLE_485T = [((7, 64), [("1a", (14, 19)), ("1b", (14, 19)), ("2a", (14, 27)), ("2b", (14, 27)),
                          ("3a", (13, 13)), ("3b", (13, 13)), ("4a", (13, 13)), ("4b", (13, 13)),
                          ("5a", (13, 13)), ("5b", (13, 13))])]
SINGLE_690T = [((9, 64), [("1a", (11, 19)), ("1b", (11, 19)), ("2a", (14, 27)), ("2b", (14, 27)),
                          ("3a", (13, 13)), ("3b", (13, 13)), ("4a", (13, 13)), ("4b", (13, 13)),
                          ("5a", (13, 13)), ("5b", (13, 13))])]
MULTI_485T = [
    ((3, 24), [("1a", (28, 28)), ("1b", (28, 28))]),
    ((8, 19), [("2a", (27, 27)), ("2b", (27, 27))]),
    ((7, 32), [("3a", (13, 13)), ("3b", (13, 13)), ("4a", (13, 13)), ("4b", (13, 13)),
               ("5a", (13, 13)), ("5b", (13, 13))]),
]
MULTI_690T = [
    ((1, 48), [("1a", (14, 28))]),
    ((3, 48), [("1b", (11, 28)), ("4a", (13, 13)), ("4b", (13, 13))]),
    ((1, 128), [("2a", (9, 27)), ("5a", (13, 13))]),
    ((4, 64), [("2b", (9, 27)), ("3a", (13, 13)), ("3b", (13, 13)), ("5b", (13, 13))]),
]

BUDGET_485T = ResourceBudget(2240, 1648, 4.5 * GIB)
BUDGET_690T = ResourceBudget(2880, 2352, 4.5 * GIB)


@pytest.fixture(scope="session")
def alexnet():
    return builtin_alexnet()


@pytest.fixture(scope="session")
def reference(alexnet):
    return {
        "485t-single": make_design(alexnet, SINGLE_485T),
        "690t-single": make_design(alexnet, SINGLE_690T),
        "485t-multi": make_design(alexnet, MULTI_485T),
        "690t-multi": make_design(alexnet, MULTI_690T),
    }


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.lines():
        terminalreporter.write_line(line)
