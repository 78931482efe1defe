import math

import numpy as np
import pytest

import spectra_pde as sp

DIRICHLET = lambda g: {e: f"dirichlet: {g}" for e in ("left", "right", "down", "up")}


def test_poisson_manufactured():
    # u = sin(pi x) sin(pi y), laplacian(u) = -2 pi^2 u
    sol = sp.solve("laplacian(u)", DIRICHLET("0"), rhs="-2*pi^2*sin(pi*x)*sin(pi*y)")
    xs = np.linspace(-1, 1, 9)
    vals = sol.grid(list(xs), list(xs))
    exact = np.outer(np.sin(np.pi * xs), np.sin(np.pi * xs))
    assert np.max(np.abs(vals - exact)) < 1e-12
    d = sol.diagnostics
    assert d["resolved"] and d["splitting_rank"] == 2 and d["path"] == "k2"
    assert sol.coeffs.dtype == np.complex128


def test_call_and_domain():
    sol = sp.solve("laplacian(u)", DIRICHLET("x + y"), domain=(0.0, 2.0, -1.0, 3.0))
    assert sol.domain == (0.0, 2.0, -1.0, 3.0)
    assert abs(sol(1.5, 2.0) - 3.5) < 1e-13


def test_splitting_rank_table():
    assert sp.splitting_rank("laplacian(u) + 1000*u")[0] == 2
    assert sp.splitting_rank("biharmonic(u)")[0] == 3
    k, sv = sp.splitting_rank("laplacian(u) + (x^2+(y+1)^2)*sin(x*(y+1))^2*u")
    assert k == 9 and sv[0] >= sv[-1]


def test_errors_map_to_python():
    corner = {"left": "dirichlet: 0", "right": "dirichlet: 0", "down": "dirichlet: 1", "up": "dirichlet: 0"}
    with pytest.raises(sp.CompatibilityError):
        sp.solve("laplacian(u)", corner)
    with pytest.raises(sp.IllPosedError):
        sp.solve("laplacian(u)", corner)
    with pytest.raises(sp.ParseError):
        sp.solve("laplacian(u", DIRICHLET("0"))
    with pytest.raises(sp.UnresolvedError):
        w = 10 * math.pi
        sp.solve(f"laplacian(u) + {2 * w * w!r}*u", DIRICHLET(f"cos({w!r}*x)*cos({w!r}*y)"), max_n=17)
    with pytest.raises(ValueError):
        sp.solve("laplacian(u)", {"north": "dirichlet: 0"})


def test_relaxed_compatibility():
    corner = {"left": "dirichlet: 0", "right": "dirichlet: 0", "down": "dirichlet: 1", "up": "dirichlet: 0"}
    sol = sp.solve("laplacian(u)", corner, tol=1e-3, strict=False)
    assert abs(sol(0.0, 0.0) - 0.25) < 1e-3
    assert sol.diagnostics["compat_defect"] > 0.5


def test_ode():
    c = sp.solve_ode("diff(u,x,1)", ["u(-1)=1"])
    assert len(c) == 1 and abs(c[0] - 1) < 1e-14
    # u'' = -u, u(0) = 0, u(pi/2) = 1 -> sin(x)
    c = sp.solve_ode("diff(u,x,2) + u", ["u(0)=0", "u(pi/2)=1"], domain=(0.0, math.pi / 2))
    t = np.cos(np.arange(len(c)) * np.arccos(0.0))  # T_k at the midpoint pi/4
    assert abs(np.dot(c, t) - math.sin(math.pi / 4)) < 1e-13


def test_solution_json_round_trip(tmp_path):
    sol = sp.solve("laplacian(u)", DIRICHLET("x*y"))
    text = sol.to_json()
    assert '"schema": "spectra-pde/1"' in text
