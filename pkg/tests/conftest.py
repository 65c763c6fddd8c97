import pytest

from condpred import EngineSettings, build_grid, make_model

CRITERIA = []


@pytest.fixture(scope="session")
def settings():
    return EngineSettings()


@pytest.fixture(scope="session")
def gamma_exp():
    return make_model("gamma-exp", {"lambda": 1.0})


@pytest.fixture(scope="session")
def two_coin():
    return make_model("two-coin")


@pytest.fixture(scope="session")
def binormal():
    return make_model("binormal", {"mu": 0.0, "tau": 1.0, "sigma": 1.0, "rho": 0.5})


@pytest.fixture(scope="session")
def models(gamma_exp, two_coin, binormal):
    return {"gamma-exp": gamma_exp, "two-coin": two_coin, "binormal": binormal}


@pytest.fixture(scope="session")
def grids(models):
    return {kind: build_grid(model, 4096) for kind, model in models.items()}


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)
