"""Run configuration and its flat ``key = value`` file format.

Grammar (UTF-8 text)::

    file     := line*
    line     := blank | comment | entry
    comment  := '#' any-text
    entry    := key '=' value [comment]
    key      := identifier
    value    := expression | word | expression (',' expression)*

Entries are read top to bottom and each key may appear once. Numeric values
are arithmetic expressions over numbers, ``+ - * / **``, parentheses, the
constants ``pi`` and ``inf``, the functions ``sqrt exp log tanh sinh cosh
sin cos abs min max``, and any numeric key defined on an earlier line.
Once ``eps`` (or ``eps_ratio``, ``dx`` and ``dt``) is known, the front speed
``s_eps = 3 eps / sqrt(2)`` is also available, so ``t_end = 1 / s_eps``
works. See the README for the list of keys.
"""

from __future__ import annotations

import ast
import enum
import math
import operator
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import ConfigError, ParameterError
from .grid import GridSpec
from .problems import ProblemKind, ProblemSpec, traveling_wave_speed
from .scheme import SchemeParams, derive_params, params_from_ratio

__all__ = ["RunConfig", "SchemeKind", "DtRule", "parse_config", "load_config", "evaluate"]


class SchemeKind(str, enum.Enum):
    RLB_MIE_FD = "RLB_MIE_FD"
    FEX_FD = "FEX_FD"
    CN = "CN"
    KINETIC = "KINETIC"

    @classmethod
    def parse(cls, value) -> "SchemeKind":
        try:
            return cls(str(value).strip().upper().replace("-", "_"))
        except ValueError:
            raise ConfigError(f"unknown scheme {value!r}") from None


class DtRule(str, enum.Enum):
    FIXED_RATIO_DX2 = "fixed_ratio_dx2"
    FIXED = "fixed"


_FUNCS = {
    "sqrt": math.sqrt,
    "exp": math.exp,
    "log": math.log,
    "tanh": math.tanh,
    "sinh": math.sinh,
    "cosh": math.cosh,
    "sin": math.sin,
    "cos": math.cos,
    "abs": abs,
    "min": min,
    "max": max,
}
_CONSTS = {"pi": math.pi, "inf": math.inf}
_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def evaluate(text: str, names: dict[str, float] | None = None) -> float:
    """Evaluate an arithmetic expression without ``eval``."""
    names = {**_CONSTS, **(names or {})}
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError:
        raise ConfigError(f"malformed expression {text!r}") from None

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            return node.value
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](walk(node.left), walk(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](walk(node.operand))
        if isinstance(node, ast.Name):
            if node.id in names:
                return names[node.id]
            raise ConfigError(f"unknown name {node.id!r} in {text!r}")
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
                and node.func.id in _FUNCS and not node.keywords:
            return _FUNCS[node.func.id](*(walk(a) for a in node.args))
        raise ConfigError(f"unsupported syntax in {text!r}")

    try:
        value = walk(tree)
    except (ArithmeticError, ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"cannot evaluate {text!r}: {exc}") from None
    return value


# key -> value kind
_KEYS = {
    "problem": "word",
    "scheme": "word",
    "d": "int",
    "dx": "num",
    "n": "int",
    "dt": "num",
    "t_end": "num",
    "eps": "num",
    "eps_ratio": "num",
    "omega1": "num",
    "radius": "num",
    "amplitude": "num",
    "seed": "int",
    "domain_lo": "num",
    "domain_hi": "num",
    "snapshot_times": "list",
    "snapshot_format": "word",
    "energy_every": "int",
    "output_dir": "text",
    "allow_unsafe": "bool",
    "newton_tol": "num",
    "dt_rule": "word",
    "dx_levels": "list",
    "reference_dx": "num",
    "reference_dt": "num",
    "normalize_l2": "bool",
}
_BOOLS = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


@dataclass(frozen=True)
class RunConfig:
    """A complete run description.

    ``eps_ratio`` set means the stencil weight was given directly and the
    interface width is derived from it.
    """

    problem: ProblemSpec
    grid: GridSpec
    dt: float
    t_end: float
    scheme: SchemeKind = SchemeKind.RLB_MIE_FD
    snapshot_times: tuple[float, ...] = ()
    output_dir: Path = Path("output")
    allow_unsafe: bool = False
    seed: int = 0
    omega1: float | None = None
    eps_interface: float | None = None
    eps_ratio: float | None = None
    energy_every: int = 1
    snapshot_format: str = "csv"
    newton_tol: float = 1e-12
    dt_rule: DtRule = DtRule.FIXED_RATIO_DX2
    dx_levels: tuple[float, ...] = ()
    reference_dx: float | None = None
    reference_dt: float | None = None
    normalize_l2: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not self.t_end > 0:
            raise ConfigError(f"t_end must be positive, got {self.t_end}")
        if (self.eps_interface is None) == (self.eps_ratio is None):
            raise ConfigError("give exactly one of eps and eps_ratio")
        if self.energy_every < 1:
            raise ConfigError("energy_every must be at least 1")
        if self.snapshot_format not in ("csv", "binary"):
            raise ConfigError("snapshot_format must be csv or binary")
        if self.snapshot_format == "binary" and self.grid.d != 3:
            raise ConfigError("binary snapshots are defined for 3D grids only")
        if not self.newton_tol > 0:
            raise ConfigError("newton_tol must be positive")
        for t in self.snapshot_times:
            if not 0 <= t <= self.t_end * (1 + 1e-12):
                raise ConfigError(f"snapshot time {t} outside [0, t_end]")
            steps = t / self.dt
            if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
                raise ConfigError(f"snapshot time {t} is not a multiple of dt = {self.dt}")
        try:
            self.problem.check_grid(self.grid)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def n_steps(self) -> int:
        return max(1, round(self.t_end / self.dt))

    @property
    def eps(self) -> float:
        """Interface width, derived from ``eps_ratio`` when that was given."""
        if self.eps_interface is not None:
            return self.eps_interface
        return math.sqrt(self.eps_ratio * self.grid.dx**2 / self.dt)

    def params(self, dx: float | None = None, dt: float | None = None) -> SchemeParams:
        """Scheme parameters at this (or another) resolution.

        With ``eps_ratio`` the ratio is held fixed; otherwise ``eps`` is.
        """
        dx = self.grid.dx if dx is None else dx
        dt = self.dt if dt is None else dt
        if self.eps_ratio is not None:
            return params_from_ratio(self.grid.d, self.eps_ratio, dx, dt, self.omega1,
                                     allow_unsafe=self.allow_unsafe)
        return derive_params(self.grid.d, self.omega1, self.eps_interface, dx, dt,
                             allow_unsafe=self.allow_unsafe)

    def at_resolution(self, dx: float, dt: float) -> "RunConfig":
        """Same run on the grid of spacing ``dx`` with step ``dt``; snapshots dropped.

        With ``eps_ratio`` the interface width of the problem follows the new
        resolution so that the initial and exact profiles match the scheme.
        """
        problem = self.problem
        if self.eps_ratio is not None and problem.needs_eps:
            problem = replace(problem, eps_interface=math.sqrt(self.eps_ratio * dx * dx / dt))
        return replace(self, problem=problem, grid=problem.grid(dx), dt=dt, snapshot_times=())

    def validate(self) -> SchemeParams:
        """Full check, including the stability conditions unless unsafe runs are allowed."""
        try:
            return self.params()
        except ParameterError as exc:
            raise ConfigError(str(exc)) from exc


def _split_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key.isidentifier():
            raise ConfigError(f"line {lineno}: invalid key {key!r}")
        if not value:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        yield lineno, key, value


def _read_entries(text: str) -> dict:
    values: dict = {}
    names: dict[str, float] = {}
    for lineno, key, raw in _split_lines(text):
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        kind = _KEYS[key]
        try:
            if kind == "num":
                value = float(evaluate(raw, names))
                names[key] = value
            elif kind == "int":
                number = evaluate(raw, names)
                if number != int(number):
                    raise ConfigError(f"{key} must be an integer, got {raw!r}")
                value = int(number)
                names[key] = value
            elif kind == "bool":
                if raw.lower() not in _BOOLS:
                    raise ConfigError(f"{key} must be true or false, got {raw!r}")
                value = _BOOLS[raw.lower()]
            elif kind == "list":
                value = tuple(float(evaluate(item, names)) for item in raw.split(",") if item.strip())
            else:
                value = raw
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
        values[key] = value
        if "eps" not in names and {"eps_ratio", "dx", "dt"} <= names.keys():
            names["eps"] = math.sqrt(names["eps_ratio"] * names["dx"] ** 2 / names["dt"])
        if "eps" in names and "s_eps" not in names:
            names["s_eps"] = traveling_wave_speed(names["eps"])
    return values


def parse_config(text: str, *, base_dir: Path | None = None) -> RunConfig:
    """Build a :class:`RunConfig` from config-file text.

    Raises:
        ConfigError: for any syntax, type or consistency problem.
    """
    v = _read_entries(text)
    for key in ("problem", "dt", "t_end"):
        if key not in v:
            raise ConfigError(f"missing required key {key!r}")
    if ("dx" in v) == ("n" in v):
        raise ConfigError("give exactly one of dx and n")
    try:
        kind = ProblemKind.parse(v["problem"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    eps_ratio = v.get("eps_ratio")
    eps = v.get("eps")
    if eps is not None and eps_ratio is not None:
        raise ConfigError("give exactly one of eps and eps_ratio")
    problem_eps = eps
    if eps is None and eps_ratio is not None and "dx" in v:
        problem_eps = math.sqrt(eps_ratio * v["dx"] ** 2 / v["dt"])
    domain = None
    if "domain_lo" in v or "domain_hi" in v:
        if not ("domain_lo" in v and "domain_hi" in v):
            raise ConfigError("give both domain_lo and domain_hi")
        domain = (v["domain_lo"], v["domain_hi"])
    try:
        problem = ProblemSpec(
            kind=kind,
            eps_interface=problem_eps,
            radius=v.get("radius", 0.7),
            amplitude=v.get("amplitude", 0.05),
            seed=v.get("seed", 0),
            d=v.get("d"),
            domain=domain,
        )
        if "dx" in v:
            grid = problem.grid(v["dx"])
        else:
            grid = GridSpec(problem.d, v["n"], problem.length, problem.domain[0], problem.bc)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if problem_eps is None and eps_ratio is not None:
        problem = replace(problem, eps_interface=math.sqrt(eps_ratio * grid.dx**2 / v["dt"]))

    output_dir = Path(v.get("output_dir", "output"))
    if base_dir is not None and not output_dir.is_absolute():
        output_dir = base_dir / output_dir
    try:
        dt_rule = DtRule(v.get("dt_rule", DtRule.FIXED_RATIO_DX2.value).lower())
    except ValueError:
        raise ConfigError(f"unknown dt_rule {v['dt_rule']!r}") from None
    return RunConfig(
        problem=problem,
        grid=grid,
        dt=v["dt"],
        t_end=v["t_end"],
        scheme=SchemeKind.parse(v.get("scheme", "RLB_MIE_FD")),
        snapshot_times=tuple(v.get("snapshot_times", ())),
        output_dir=output_dir,
        allow_unsafe=v.get("allow_unsafe", False),
        seed=v.get("seed", 0),
        omega1=v.get("omega1"),
        eps_interface=eps,
        eps_ratio=eps_ratio,
        energy_every=v.get("energy_every", 1),
        snapshot_format=v.get("snapshot_format", "csv").lower(),
        newton_tol=v.get("newton_tol", 1e-12),
        dt_rule=dt_rule,
        dx_levels=tuple(v.get("dx_levels", ())),
        reference_dx=v.get("reference_dx"),
        reference_dt=v.get("reference_dt"),
        normalize_l2=v.get("normalize_l2", False),
    )


def load_config(path, **overrides) -> RunConfig:
    """Read a config file; keyword overrides replace fields afterwards.

    A ``seed`` override also reseeds the problem.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    config = parse_config(text)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if "seed" in overrides:
        overrides["problem"] = replace(config.problem, seed=overrides["seed"])
    if "output_dir" in overrides:
        overrides["output_dir"] = Path(overrides["output_dir"])
    return replace(config, **overrides) if overrides else config
