"""Shared fixtures. The expensive pipeline pieces (landscape scan, the eps
ladder) run once per session and are reused by the solver, verification and
acceptance tests."""

import sys
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from cnls.config import load_config  # noqa: E402
from cnls.epssolver import concentration_series  # noqa: E402
from cnls.landscape import scan_landscape  # noqa: E402
from cnls.shooting import unit_energy  # noqa: E402

CONFIG_DIR = REPO / "configs"


@pytest.fixture(scope="session")
def e1():
    return unit_energy()


@pytest.fixture(scope="session")
def std_config():
    return load_config(CONFIG_DIR / "single_well.toml")


@pytest.fixture(scope="session")
def const_config():
    return load_config(CONFIG_DIR / "constant.toml")


@pytest.fixture(scope="session")
def std_landscape(std_config):
    cfg = std_config
    lmap = scan_landscape(cfg.domain, cfg.potentials, cfg.couplings,
                          spacing=cfg.spacing(), grid_n=cfg.landscape_n,
                          beta0=cfg.beta0)
    return lmap


@pytest.fixture(scope="session")
def std_ladder(std_config, std_landscape):
    cfg = std_config
    rows = concentration_series(cfg.potentials, cfg.domain, cfg.couplings,
                                cfg.eps_ladder, std_landscape, h=cfg.eps_h,
                                tol=cfg.solver_tol)
    assert not any(r["failed"] for r in rows)
    return rows


@pytest.fixture(scope="session")
def const_landscape(const_config):
    cfg = const_config
    return scan_landscape(cfg.domain, cfg.potentials, cfg.couplings,
                          spacing=cfg.spacing(), grid_n=cfg.landscape_n,
                          beta0=cfg.beta0)


@pytest.fixture(scope="session")
def const_ladder(const_config, const_landscape):
    cfg = const_config
    rows = concentration_series(cfg.potentials, cfg.domain, cfg.couplings,
                                cfg.eps_ladder, const_landscape, h=cfg.eps_h,
                                tol=cfg.solver_tol)
    assert not any(r["failed"] for r in rows)
    return rows
