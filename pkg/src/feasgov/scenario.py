"""Scenario configuration (INI) and the offline synthesis pipeline.

A scenario file has the sections ``[system]``, ``[constraints]``, ``[mpc]``,
``[governor]`` and ``[sim]``. Matrices use the ``"1 0.1; 0 1"`` text form.
Continuous-time plants give ``Ac``/``Bc`` instead of ``A``/``B`` and are
discretized by zero-order hold with ``ts``.
"""
import configparser
import hashlib
import io
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import AssumptionError
from .numerics import format_matrix, parse_matrix, zoh_discretize
from .plant import (
    ConstraintSet,
    LtiModel,
    admissible_reference_set,
    equilibrium_basis,
    select_v_star,
    sigma_set,
)
from .mpc import feasible_set_block_from, feasible_set_recursive
from .polyhedra import canonical, read_poly, write_poly
from .terminal import controllability_index, synthesize_terminal

FIXTURES = Path(__file__).parent / "fixtures"

_SYSTEM_KEYS = ("A", "B", "Ac", "Bc", "C", "D", "E", "F")


def _vec(text):
    return parse_matrix(text).reshape(-1)


def _fmt_vec(v):
    return " ".join(repr(float(x)) for x in np.asarray(v, dtype=float).reshape(-1))


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    system: dict  # matrix name -> ndarray, as written in the file
    ts: float
    constraints: dict  # either {"Y", "h"} or {"lower", "upper"}
    units: str
    N: int
    Q: np.ndarray
    R: np.ndarray
    eps_T: float
    eps: float
    F_spec: str
    x0: np.ndarray
    r: np.ndarray
    steps: int
    seed: int = 0
    extra: dict = field(default_factory=dict)  # unrecognized keys, kept for round-trip

    @property
    def continuous(self):
        return "Ac" in self.system

    def model(self):
        s = self.system
        if self.continuous:
            A, B = zoh_discretize(s["Ac"], s["Bc"], self.ts)
        else:
            A, B = s["A"], s["B"]
        return LtiModel(A, B, s["C"], s["D"], s["E"], s["F"], ts=self.ts)

    def constraint_set(self):
        c = self.constraints
        conv = np.deg2rad if self.units == "deg" else (lambda v: v)
        if "Y" in c:
            return ConstraintSet(c["Y"], conv(c["h"]))
        return ConstraintSet.box(conv(c["lower"]), conv(c["upper"]))

    def with_(self, **kw):
        return replace(self, **kw)


def parse_scenario(text, name="scenario"):
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.read_string(text)
    for sec in ("system", "constraints", "mpc", "governor", "sim"):
        if not cp.has_section(sec):
            raise ValueError(f"scenario is missing section [{sec}]")
    sysd = cp["system"]
    system = {k: parse_matrix(sysd[k]) for k in _SYSTEM_KEYS if k in sysd}
    if not ({"A", "B"} <= system.keys() or {"Ac", "Bc"} <= system.keys()):
        raise ValueError("[system] needs A and B, or Ac and Bc")
    con = cp["constraints"]
    if "Y" in con:
        constraints = {"Y": parse_matrix(con["Y"]), "h": _vec(con["h"])}
    else:
        constraints = {"lower": _vec(con["lower"]), "upper": _vec(con["upper"])}
    mpc, gov, sim = cp["mpc"], cp["governor"], cp["sim"]
    known = {
        "system": set(_SYSTEM_KEYS) | {"ts"},
        "constraints": {"Y", "h", "lower", "upper", "units"},
        "mpc": {"N", "Q", "R", "eps_T"},
        "governor": {"eps", "F"},
        "sim": {"x0", "r", "steps", "seed"},
    }
    extra = {
        (sec, k): cp[sec][k]
        for sec in cp.sections()
        for k in cp[sec]
        if k not in known.get(sec, set())
    }
    return Scenario(
        name=name,
        system=system,
        ts=float(sysd.get("ts", "1.0")),
        constraints=constraints,
        units=con.get("units", "").strip(),
        N=int(mpc["N"]),
        Q=parse_matrix(mpc["Q"]),
        R=parse_matrix(mpc["R"]),
        eps_T=float(mpc["eps_T"]),
        eps=float(gov["eps"]),
        F_spec=gov.get("F", "gamma:0").strip(),
        x0=_vec(sim["x0"]),
        r=_vec(sim["r"]),
        steps=int(sim.get("steps", "600")),
        seed=int(sim.get("seed", "0")),
        extra=extra,
    )


def load_scenario(path):
    path = Path(path)
    if not path.exists() and (FIXTURES / f"{path.name}.ini").exists():
        path = FIXTURES / f"{path.name}.ini"
    return parse_scenario(path.read_text(), name=path.stem)


def format_scenario(sc):
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp["system"] = {k: format_matrix(v) for k, v in sc.system.items()}
    cp["system"]["ts"] = repr(sc.ts)
    c = {k: (format_matrix(v) if k == "Y" else _fmt_vec(v)) for k, v in sc.constraints.items()}
    if sc.units:
        c["units"] = sc.units
    cp["constraints"] = c
    cp["mpc"] = {"N": str(sc.N), "Q": format_matrix(sc.Q), "R": format_matrix(sc.R), "eps_T": repr(sc.eps_T)}
    cp["governor"] = {"eps": repr(sc.eps), "F": sc.F_spec}
    cp["sim"] = {"x0": _fmt_vec(sc.x0), "r": _fmt_vec(sc.r), "steps": str(sc.steps), "seed": str(sc.seed)}
    for (sec, k), v in sc.extra.items():
        if not cp.has_section(sec):
            cp.add_section(sec)
        cp[sec][k] = v
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def scenarios_equal(a, b):
    def same(x, y):
        if isinstance(x, dict):
            return x.keys() == y.keys() and all(same(x[k], y[k]) for k in x)
        if isinstance(x, np.ndarray):
            return x.shape == y.shape and np.array_equal(x, y)
        return x == y

    names = [f for f in Scenario.__dataclass_fields__ if f != "name"]
    return all(same(getattr(a, f), getattr(b, f)) for f in names)


@dataclass(frozen=True, eq=False)
class Synthesis:
    """Offline data shared by every controller of a scenario."""

    scenario: Scenario
    model: LtiModel
    basis: object
    Yset: ConstraintSet
    Veps: object
    Reps: object
    Sigma: object
    terminal: object  # TerminalIngredients
    v_star: np.ndarray
    nu_ctrb: int

    @property
    def Q(self):
        return np.atleast_2d(self.scenario.Q)

    @property
    def R(self):
        return np.atleast_2d(self.scenario.R)


def synthesize(sc):
    """Model, equilibrium basis, reference sets and terminal ingredients."""
    model = sc.model()
    model.check_stabilizable()
    Yset = sc.constraint_set()
    basis = equilibrium_basis(model)
    Veps, Reps = admissible_reference_set(basis, Yset, sc.eps)
    Q, R = np.atleast_2d(sc.Q), np.atleast_2d(sc.R)
    if Q.shape != (model.n_x, model.n_x) or R.shape != (model.n_u, model.n_u):
        raise AssumptionError("invalid_weights", f"Q is {Q.shape}, R is {R.shape}")
    ing = synthesize_terminal(model, basis, Yset, Q, R, sc.eps_T)
    nu = controllability_index(model.A, model.B)
    if sc.r.size != model.n_z:
        raise ValueError(f"r has {sc.r.size} entries, expected {model.n_z}")
    if sc.x0.size != model.n_x:
        raise ValueError(f"x0 has {sc.x0.size} entries, expected {model.n_x}")
    v_star = select_v_star(basis, Veps, sc.r)
    return Synthesis(
        scenario=sc, model=model, basis=basis, Yset=Yset, Veps=Veps, Reps=Reps,
        Sigma=sigma_set(basis, Veps), terminal=ing, v_star=v_star, nu_ctrb=nu,
    )


_GAMMA_CACHE = {}
SHIPPED_SETS = FIXTURES / "sets"


def cache_dir():
    """Where computed Gamma_i files are stored; ``FEASGOV_CACHE_DIR`` overrides."""
    env = os.environ.get("FEASGOV_CACHE_DIR")
    return Path(env) if env else Path.home() / ".cache" / "feasgov"


def sets_key(sc):
    """Digest of everything Gamma_i depends on (plant, constraints, terminal data)."""
    parts = [f"{k}={format_matrix(v)}" for k, v in sorted(sc.system.items())]
    parts += [f"ts={sc.ts!r}", f"units={sc.units}"]
    parts += [f"{k}={format_matrix(v)}" for k, v in sorted(sc.constraints.items())]
    parts += [f"Q={format_matrix(sc.Q)}", f"R={format_matrix(sc.R)}", f"eps_T={sc.eps_T!r}"]
    return hashlib.sha256("\n".join(parts).encode()).hexdigest()[:16]


def _load_cached(key, N):
    out = []
    for root in (SHIPPED_SETS, cache_dir()):
        d = root / key
        i = len(out)
        while i <= N and (d / f"gamma_{i}.poly").exists():
            out.append(read_poly(d / f"gamma_{i}.poly"))
            i += 1
    return out


def _store(key, gammas, start):
    d = cache_dir() / key
    try:
        d.mkdir(parents=True, exist_ok=True)
        for i in range(start, len(gammas)):
            write_poly(gammas[i], d / f"gamma_{i}.poly", f"N={i}")
    except OSError:
        pass  # a read-only home only costs recomputation


def feasible_sets(syn, N, log=None, use_disk=True):
    """``[Gamma_0, ..., Gamma_N]`` by the recursive method.

    Results are memoized in memory and, with ``use_disk``, as ``.poly`` files
    keyed by :func:`sets_key` (shipped fixtures first, then the user cache).
    Every returned set has canonical row order, however it was obtained.
    """
    key = sets_key(syn.scenario)
    cached = _GAMMA_CACHE.get(key, [])
    if len(cached) <= N and use_disk:
        disk = _load_cached(key, N)
        if len(disk) > len(cached):
            cached = disk
    if len(cached) > N:
        _GAMMA_CACHE[key] = list(cached)
        return cached[: N + 1]
    gammas = list(cached) if cached else [canonical(syn.terminal.T)]
    _GAMMA_CACHE[key] = gammas
    stored = len(cached)
    # one step at a time so a failure (e.g. projection blowup) keeps the
    # horizons already finished, both in memory and on disk
    while len(gammas) <= N:
        nxt = feasible_set_recursive(syn.model, syn.basis, syn.Yset, gammas[-1], 1, log=log)[1]
        gammas.append(canonical(nxt))
        if use_disk:
            _store(key, gammas, stored)
            stored = len(gammas)
    return gammas[: N + 1]


def computed_sets(syn):
    """Whatever ``[Gamma_0, ...]`` prefix is memoized for this scenario."""
    return list(_GAMMA_CACHE.get(sets_key(syn.scenario), []))


def feasible_set(syn, N, method="recursive", log=None):
    if method == "recursive":
        return feasible_sets(syn, N, log=log)[N]
    if method == "block":
        return feasible_set_block_from(syn.model, syn.Yset, syn.terminal.T, N, log=log)
    raise ValueError(f"unknown method {method!r}")
