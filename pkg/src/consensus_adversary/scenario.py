"""Scenario configuration files, bundled fixtures, and result persistence.

Scenario and topology documents are JSON with 1-based node ids; everything is
converted to the 0-based internal convention at load time. Outputs are
byte-deterministic for identical inputs: full-precision CSV plus a JSON
summary with sorted keys.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .dynamics import Kernel, TimeGrid, Trajectory
from .topology import NetworkTopology

DEFAULT_STEPS = 400


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario input; message names the field."""


@dataclass(frozen=True)
class LinkAttackSpec:
    ell: int


@dataclass(frozen=True)
class NoiseAttackSpec:
    p_max: float
    safety: float = 0.9
    nu: float | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    topology: NetworkTopology
    x0: np.ndarray
    T: float
    steps: int
    kernel: Kernel
    attack: LinkAttackSpec | NoiseAttackSpec | None
    seed: int = 0

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(T=self.T, steps=self.steps)

    @property
    def connected(self) -> bool:
        return self.topology.is_connected()

    def with_x0(self, x0) -> "ScenarioConfig":
        return replace(self, x0=np.asarray(x0, dtype=float))

    def with_steps(self, steps: int) -> "ScenarioConfig":
        return replace(self, steps=int(steps))

    def with_attack(self, attack) -> "ScenarioConfig":
        return replace(self, attack=attack)


def _parse_topology(doc, where: str) -> NetworkTopology:
    try:
        n = int(doc["n"])
    except (KeyError, TypeError, ValueError):
        raise ScenarioError(f"{where}: field 'n' must be an integer")
    edges = doc.get("edges")
    if not isinstance(edges, list):
        raise ScenarioError(f"{where}: field 'edges' must be an array of [i, j, weight]")
    parsed = []
    for idx, e in enumerate(edges):
        if not (isinstance(e, list) and len(e) == 3):
            raise ScenarioError(f"{where}: edges[{idx}] must be [i, j, weight]")
        i, j, w = e
        if not (isinstance(i, int) and isinstance(j, int)):
            raise ScenarioError(f"{where}: edges[{idx}] node ids must be integers (1-based)")
        if not (1 <= i <= n and 1 <= j <= n):
            raise ScenarioError(f"{where}: edges[{idx}] node id outside 1..{n}")
        parsed.append((i - 1, j - 1, float(w)))
    try:
        return NetworkTopology(n=n, edges=tuple(parsed))
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


def _parse_kernel(doc) -> Kernel:
    if doc is None:
        return Kernel.constant(1.0)
    if "constant" in doc:
        return Kernel.constant(float(doc["constant"]))
    if "table" in doc:
        return Kernel.from_table(doc["table"])
    raise ScenarioError("kernel: expected {'constant': value} or {'table': [[t, k], ...]}")


def _parse_attack(doc, topology: NetworkTopology, kernel: Kernel,
                  T: float, steps: int):
    if doc is None or "none" in doc:
        return None
    if "link" in doc:
        spec = doc["link"]
        try:
            ell = int(spec["ell"])
        except (KeyError, TypeError, ValueError):
            raise ScenarioError("attack.link.ell: must be an integer")
        if not 0 <= ell <= topology.m:
            raise ScenarioError(
                f"attack.link.ell: budget {ell} outside 0..{topology.m} (edge count)")
        return LinkAttackSpec(ell=ell)
    if "noise" in doc:
        spec = doc["noise"]
        try:
            p_max = float(spec["p_max"])
        except (KeyError, TypeError, ValueError):
            raise ScenarioError("attack.noise.p_max: must be a number")
        if not p_max > 0:
            raise ScenarioError(f"attack.noise.p_max: must be positive, got {p_max}")
        nu = spec.get("nu")
        safety = float(spec.get("safety", 0.9))
        if nu is not None:
            from .noise_attack import contraction_setup
            from .dynamics import DynamicsError
            try:
                contraction_setup(kernel, TimeGrid(T=T, steps=steps), p_max, nu=float(nu))
            except DynamicsError as exc:
                raise ScenarioError(f"attack.noise.nu: {exc}") from exc
        return NoiseAttackSpec(p_max=p_max, safety=safety,
                               nu=None if nu is None else float(nu))
    raise ScenarioError("attack: expected one of {'none'}, {'link': ...}, {'noise': ...}")


def parse_scenario(doc: dict, base_dir: Path | None = None,
                   where: str = "scenario") -> ScenarioConfig:
    topo_doc = doc.get("topology")
    if isinstance(topo_doc, str):
        path = (base_dir or Path(".")) / topo_doc
        if not path.exists():
            raise ScenarioError(f"topology: referenced file not found: {path}")
        topo_doc = json.loads(path.read_text())
    if not isinstance(topo_doc, dict):
        raise ScenarioError("topology: must be an object or a file reference")
    topology = _parse_topology(topo_doc, "topology")
    x0 = doc.get("x0")
    if not isinstance(x0, list) or len(x0) != topology.n:
        raise ScenarioError(f"x0: must be an array of length n={topology.n}")
    try:
        T = float(doc["T"])
    except (KeyError, TypeError, ValueError):
        raise ScenarioError("T: horizon must be a number")
    if not T > 0:
        raise ScenarioError(f"T: horizon must be positive, got {T}")
    steps = int(doc.get("steps", DEFAULT_STEPS))
    if steps < 1:
        raise ScenarioError(f"steps: must be positive, got {steps}")
    kernel = _parse_kernel(doc.get("kernel"))
    attack = _parse_attack(doc.get("attack"), topology, kernel, T, steps)
    return ScenarioConfig(
        name=str(doc.get("name", "unnamed")),
        topology=topology,
        x0=np.array(x0, dtype=float),
        T=T,
        steps=steps,
        kernel=kernel,
        attack=attack,
        seed=int(doc.get("seed", 0)),
    )


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"scenario file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: parse error at line {exc.lineno}: {exc.msg}") from exc
    return parse_scenario(doc, base_dir=path.parent, where=str(path))


def scenario_to_doc(config: ScenarioConfig) -> dict:
    """Serializable document; load(parse(doc)) round-trips the config."""
    if config.kernel.kind == "constant":
        kernel_doc = {"constant": config.kernel.value}
    else:
        kernel_doc = {"table": [[t, k] for (t, k) in config.kernel.table]}
    if config.attack is None:
        attack_doc = {"none": {}}
    elif isinstance(config.attack, LinkAttackSpec):
        attack_doc = {"link": {"ell": config.attack.ell}}
    else:
        attack_doc = {"noise": {"p_max": config.attack.p_max,
                                "safety": config.attack.safety}}
        if config.attack.nu is not None:
            attack_doc["noise"]["nu"] = config.attack.nu
    return {
        "name": config.name,
        "topology": {
            "n": config.topology.n,
            "edges": [[i + 1, j + 1, w] for (i, j, w) in config.topology.edges],
        },
        "x0": list(map(float, config.x0)),
        "T": config.T,
        "steps": config.steps,
        "kernel": kernel_doc,
        "attack": attack_doc,
        "seed": config.seed,
    }


def save_scenario(config: ScenarioConfig, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_doc(config), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# bundled fixtures

PAPER_K4_WEIGHTS = {
    (0, 1): 0.0326, (0, 2): 0.5525, (0, 3): 1.5442,
    (1, 2): 1.1006, (1, 3): 0.0859, (2, 3): 1.4916,
}


def paper_k4_topology() -> NetworkTopology:
    """Complete 4-node graph with the reference off-diagonal weights."""
    return NetworkTopology(
        n=4, edges=tuple((i, j, w) for (i, j), w in PAPER_K4_WEIGHTS.items()))


def paper_k4_scenario(attack: str = "link", steps: int = DEFAULT_STEPS,
                      p_max: float = 1.0, safety: float = 0.9) -> ScenarioConfig:
    """The reference K4 scenario: ell=2, T=2, x0=[1,2,3,4], constant kernel.

    The noise variant's power budget and safety fraction are artifact
    defaults, not reference values.
    """
    if attack == "link":
        spec = LinkAttackSpec(ell=2)
    elif attack == "noise":
        spec = NoiseAttackSpec(p_max=p_max, safety=safety)
    elif attack == "none":
        spec = None
    else:
        raise ScenarioError(f"unknown attack kind {attack!r}")
    return ScenarioConfig(
        name=f"paper_k4_{attack}",
        topology=paper_k4_topology(),
        x0=np.array([1.0, 2.0, 3.0, 4.0]),
        T=2.0,
        steps=steps,
        kernel=Kernel.constant(1.0),
        attack=spec,
    )


def fixture_path(name: str) -> Path:
    """Path to a bundled scenario fixture (e.g. 'paper_k4')."""
    return Path(str(resources.files("consensus_adversary.fixtures") / f"{name}.json"))


# ---------------------------------------------------------------------------
# report writing

@dataclass(frozen=True)
class PlainOutcome:
    """Outcome of an attack-free simulation run."""

    trajectory: Trajectory
    J: float


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def write_trajectory_csv(traj: Trajectory, path: Path) -> None:
    n = traj.n
    header = ["t"] + [f"x{i + 1}" for i in range(n)]
    if traj.p is not None:
        header += [f"p{i + 1}" for i in range(n)]
    lines = [",".join(header)]
    t = traj.grid.times()
    for k in range(traj.grid.steps + 1):
        row = [_fmt(t[k])] + [_fmt(v) for v in traj.x[k]]
        if traj.p is not None:
            row += [_fmt(v) for v in traj.p[k]]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def write_control_csv(t: np.ndarray, u: np.ndarray, path: Path) -> None:
    n = u.shape[1]
    lines = [",".join(["t"] + [f"u{i + 1}" for i in range(n)])]
    for k in range(len(t)):
        lines.append(",".join([_fmt(t[k])] + [_fmt(v) for v in u[k]]))
    path.write_text("\n".join(lines) + "\n")


def write_broken_edges_csv(t: np.ndarray, broken_history, path: Path) -> None:
    lines = ["t,edge_i,edge_j"]
    for k, broken in enumerate(broken_history):
        for (i, j) in broken:
            lines.append(f"{_fmt(t[k])},{i + 1},{j + 1}")
    path.write_text("\n".join(lines) + "\n")


def write_report(outcome, directory) -> list[Path]:
    """Persist an attack or simulation outcome into a directory.

    Always writes trajectory.csv and summary.json; link attacks add
    broken_edges.csv, noise attacks add control.csv.
    """
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ScenarioError(f"cannot create output directory {directory}: {exc}") from exc
    written = []
    traj = outcome.trajectory
    t = traj.grid.times()
    summary = {"J": outcome.J, "steps": traj.grid.steps, "T": traj.grid.T}

    traj_path = directory / "trajectory.csv"
    write_trajectory_csv(traj, traj_path)
    written.append(traj_path)

    from .link_attack import Attack1Outcome, SweepResult
    from .noise_attack import Attack2Outcome
    if isinstance(outcome, Attack1Outcome):
        path = directory / "broken_edges.csv"
        write_broken_edges_csv(t, outcome.broken_history, path)
        written.append(path)
        summary.update({
            "attack": "link",
            "classification": outcome.classification,
            "stationary": outcome.stationary,
            "connected_topology": outcome.topology.is_connected(),
        })
    elif isinstance(outcome, Attack2Outcome):
        path = directory / "control.csv"
        write_control_csv(t, outcome.control, path)
        written.append(path)
        summary.update({
            "attack": "noise",
            "J_scaled": outcome.J_scaled,
            "nu": outcome.setup.nu,
            "q": outcome.setup.q,
            "p_max": outcome.p_max,
            "iterations": outcome.iterations,
            "residuals": list(outcome.residuals),
            "lambda_max": float(np.max(outcome.lam)),
        })
    elif isinstance(outcome, SweepResult):
        summary.update({
            "attack": "link-sweep",
            "converged": outcome.converged,
            "iterations": outcome.iterations,
        })
    else:
        summary.update({"attack": "none"})

    summary_path = directory / "summary.json"
    try:
        summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise ScenarioError(f"cannot write {summary_path}: {exc}") from exc
    written.append(summary_path)
    return written
