"""INI run configuration with strict key checking.

::

    [problem]
    initial = rp1           ; registry name
    system = euler          ; optional, must match the problem
    domain = -0.5, 0.5      ; optional override
    bc = dirichlet          ; optional, must match the problem
    gamma = 1.4

    [scheme]
    kind = fv               ; dg | fv | pnpm
    variant = adaptive      ; classic | adaptive
    M = 3
    N = 1                   ; pnpm only
    cfl = 0.5
    tolerance = none        ; classic only; none means M + 1 fixed iterations
    criterion = on
    growth = time
    reconstruction = cweno

    [run]
    t_final = 0.14
    n_cells = 400           ; or: meshes = 16, 32, 64, 128
    output = out
    snapshot_every = 0
    deterministic = yes
    threads = 1
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from .driver import PROBLEMS, Problem, RunConfig, get_problem
from .errors import ConfigurationError

KEYS = {
    "problem": {"initial", "system", "domain", "bc", "gamma"},
    "scheme": {"kind", "variant", "m", "n", "cfl", "tolerance", "criterion", "growth", "reconstruction"},
    "run": {"t_final", "n_cells", "meshes", "output", "snapshot_every", "deterministic", "threads"},
}

_NONE = {"", "none", "off"}


@dataclass(frozen=True)
class RunSpec:
    """Everything a CLI command needs: problem, scheme configuration and run control."""

    problem: Problem
    config: RunConfig
    meshes: tuple[int, ...]
    output: Optional[str] = None
    deterministic: bool = True

    @property
    def n_cells(self) -> int:
        return self.meshes[0]


def _parser() -> configparser.ConfigParser:
    # default optionxform lower-cases keys, so ``M`` and ``m`` are the same key
    return configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)


def _number(section, key, kind, default):
    raw = section.get(key)
    if raw is None:
        return default
    try:
        return kind(raw)
    except ValueError:
        raise ConfigurationError(f"[{section.name}] {key}: cannot parse {raw!r} as {kind.__name__}") from None


def _flag(section, key, default: bool) -> bool:
    if key not in section:
        return default
    try:
        return section.getboolean(key)
    except ValueError:
        raise ConfigurationError(f"[{section.name}] {key}: expected on/off, got {section[key]!r}") from None


def _int_list(section, key) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in section[key].replace(",", " ").split())
    except ValueError:
        raise ConfigurationError(f"[{section.name}] {key}: expected integers, got {section[key]!r}") from None


def parse_config(text: str) -> RunSpec:
    cp = _parser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config: {exc}".splitlines()[0]) from None
    for name in cp.sections():
        if name not in KEYS:
            raise ConfigurationError(f"unknown section [{name}]")
        unknown = sorted(set(cp[name]) - KEYS[name])
        if unknown:
            raise ConfigurationError(f"unknown key '{unknown[0]}' in [{name}]")
    for name in KEYS:
        if not cp.has_section(name):
            cp.add_section(name)
    prob_s, scheme_s, run_s = cp["problem"], cp["scheme"], cp["run"]

    if "initial" not in prob_s:
        raise ConfigurationError(f"[problem] initial is required; known: {', '.join(PROBLEMS)}")
    problem = get_problem(prob_s["initial"].strip().lower())
    gamma = _number(prob_s, "gamma", float, 1.4)
    sys = problem.make_system(gamma)
    if "system" in prob_s and prob_s["system"].strip().lower() != sys.name:
        raise ConfigurationError(f"[problem] system {prob_s['system']!r} does not match {problem.name!r} ({sys.name})")
    if "bc" in prob_s and prob_s["bc"].strip().lower() != problem.bc:
        raise ConfigurationError(f"[problem] bc {prob_s['bc']!r} does not match {problem.name!r} ({problem.bc})")
    if "domain" in prob_s:
        try:
            lo, hi = (float(v) for v in prob_s["domain"].split(","))
        except ValueError:
            raise ConfigurationError(f"[problem] domain: expected 'x_min, x_max', got {prob_s['domain']!r}") from None
        if not hi > lo:
            raise ConfigurationError("[problem] domain: x_max must exceed x_min")
        problem = replace(problem, x_min=lo, x_max=hi)

    if "t_final" not in run_s:
        raise ConfigurationError("[run] t_final is required")
    has_n, has_list = "n_cells" in run_s, "meshes" in run_s
    if has_n == has_list:
        raise ConfigurationError("[run] needs exactly one of n_cells or meshes")
    meshes = (_number(run_s, "n_cells", int, None),) if has_n else _int_list(run_s, "meshes")
    if not meshes or min(meshes) < 1:
        raise ConfigurationError("[run] mesh sizes must be positive")

    tol_raw = scheme_s.get("tolerance", "none").strip().lower()
    tol = None if tol_raw in _NONE else _number(scheme_s, "tolerance", float, None)
    n_raw = scheme_s.get("n", "").strip().lower()
    deterministic = _flag(run_s, "deterministic", True)
    threads = _number(run_s, "threads", int, 1)
    if deterministic:
        threads = 1
    config = RunConfig(
        scheme=scheme_s.get("kind", "dg").strip().lower(),
        M=_number(scheme_s, "m", int, 2),
        N=None if n_raw in _NONE else _number(scheme_s, "n", int, None),
        variant=scheme_s.get("variant", "adaptive").strip().lower(),
        tol=tol,
        cfl=_number(scheme_s, "cfl", float, 0.5),
        t_final=_number(run_s, "t_final", float, None),
        criterion=_flag(scheme_s, "criterion", False),
        reconstruction=scheme_s.get("reconstruction", "cweno").strip().lower(),
        gamma=gamma,
        threads=threads,
        snapshot_every=_number(run_s, "snapshot_every", int, 0),
        growth=scheme_s.get("growth", "time").strip().lower(),
    )
    if config.snapshot_every < 0:
        raise ConfigurationError("[run] snapshot_every must be >= 0")
    output = run_s.get("output")
    return RunSpec(problem, config, meshes, output.strip() if output else None, deterministic)


def load_config(path) -> RunSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)
