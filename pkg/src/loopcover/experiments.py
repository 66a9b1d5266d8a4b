"""Config-driven experiment runner producing reproducible CSV/JSON records.

Config files are JSON with this shape (unknown keys anywhere are errors):

    {
      "kind":    "phase-sweep",            # one of KINDS
      "graph":   {"family": "cycle"},      # torus adds "dim", tree_ball adds "degree"
      "killing": {"rule": "exp-rate", "a": 0.7},
      "sizes":   [8, 10, 12],
      "budget":  1000,
      "seed":    7,
      "output":  {"path": "out.csv", "format": "csv"},
      "options": {}
    }

Killing rules resolve to a rate from the built graph's vertex count m:
fixed -> c, exp-rate -> e^(-a m), power -> m^(-d), beta -> beta/m.
Identical configs give bit-identical rows; wall_time_s is the one exception.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import complete_graph, limits, loops, spectral
from ._version import __version__
from .graphs import (
    WeightedGraph,
    build_complete,
    build_cycle,
    build_cycle_with_chords,
    build_torus,
    build_tree_ball,
    stationary_distribution,
    transition_matrix,
)

__all__ = [
    "KINDS",
    "FAMILIES",
    "KILLING_RULES",
    "ConfigError",
    "ExperimentConfig",
    "RunRecord",
    "parse_config",
    "load_config",
    "validate",
    "run",
    "record_to_csv",
    "record_to_json",
    "write_record",
]

KINDS = (
    "spectrum",
    "loop-length",
    "cover-prob",
    "conditional-curve",
    "soup",
    "phase-sweep",
    "tree-limit",
    "torus-limit",
    "complete-sweep",
    "stability",
)
FAMILIES = ("cycle", "torus", "tree_ball", "complete", "cycle_with_chords")
KILLING_RULES = ("fixed", "exp-rate", "power", "beta")

# conditional-curve is absent: the law of a bridge given its length does not
# depend on the killing rate, so the kind takes no killing block
_KINDS_WITH_KILLING = frozenset(
    {"loop-length", "cover-prob", "soup", "phase-sweep", "complete-sweep"}
)
_FAMILY_EXTRA_KEYS = {"torus": ("dim",), "tree_ball": ("degree",)}
_KIND_OPTION_KEYS = {
    "loop-length": ("K",),
    "conditional-curve": ("ks",),
    "soup": ("alpha",),
    "tree-limit": ("m_max",),
    "stability": ("rhos",),
}
_KIND_FAMILY = {
    "tree-limit": ("tree_ball",),
    "torus-limit": ("torus",),
    "complete-sweep": ("complete",),
    "stability": ("cycle_with_chords",),
    "phase-sweep": ("cycle", "torus", "tree_ball"),
}


class ConfigError(ValueError):
    """Invalid configuration; carries one diagnostic string per problem."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    family: str
    family_params: dict = field(default_factory=dict)
    killing_rule: str | None = None
    killing_params: dict = field(default_factory=dict)
    sizes: tuple[int, ...] = ()
    budget: int = 1
    seed: int = 0
    output_path: str | None = None
    output_format: str = "csv"
    options: dict = field(default_factory=dict)

    def echo(self) -> dict:
        out = {
            "kind": self.kind,
            "graph": {"family": self.family, **self.family_params},
            "sizes": list(self.sizes),
            "budget": self.budget,
            "seed": self.seed,
            "output": {"path": self.output_path, "format": self.output_format},
            "options": dict(self.options),
        }
        if self.killing_rule is not None:
            out["killing"] = {"rule": self.killing_rule, **self.killing_params}
        return out


@dataclass(frozen=True)
class RunRecord:
    """Everything a run produced. wall_time_s is excluded from determinism claims."""

    config: dict
    rows: tuple[dict, ...]
    diagnostics: tuple[str, ...]
    version: str
    wall_time_s: float


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _is_real(x) -> bool:
    return (isinstance(x, float) or _is_int(x)) and not isinstance(x, bool)


def parse_config(raw: dict) -> ExperimentConfig:
    """Structural parse: key hygiene and types. Domain checks live in validate()."""
    if not isinstance(raw, dict):
        raise ConfigError(["config: top level must be an object"])
    diags = []
    known = {"kind", "graph", "killing", "sizes", "budget", "seed", "output", "options"}
    for key in raw:
        if key not in known:
            diags.append(f"{key}: unknown key")
    for key in ("kind", "graph", "sizes", "budget", "seed"):
        if key not in raw:
            diags.append(f"{key}: required")
    if diags:
        raise ConfigError(diags)

    kind = raw["kind"]
    if not isinstance(kind, str):
        diags.append("kind: must be a string")
        kind = ""
    graph = raw["graph"]
    family, family_params = "", {}
    if not isinstance(graph, dict) or not isinstance(graph.get("family"), str):
        diags.append("graph.family: required string")
    else:
        family = graph["family"]
        family_params = {k: v for k, v in graph.items() if k != "family"}

    killing_rule, killing_params = None, {}
    if "killing" in raw:
        killing = raw["killing"]
        if not isinstance(killing, dict) or not isinstance(killing.get("rule"), str):
            diags.append("killing.rule: required string")
        else:
            killing_rule = killing["rule"]
            killing_params = {k: v for k, v in killing.items() if k != "rule"}

    sizes = raw["sizes"]
    if not isinstance(sizes, list) or not all(_is_int(s) for s in sizes):
        diags.append("sizes: must be a list of integers")
        sizes = []
    if not _is_int(raw["budget"]):
        diags.append("budget: must be an integer")
    if not _is_int(raw["seed"]):
        diags.append("seed: must be an integer")

    output_path, output_format = None, "csv"
    if "output" in raw:
        output = raw["output"]
        if not isinstance(output, dict):
            diags.append("output: must be an object")
        else:
            for key in output:
                if key not in ("path", "format"):
                    diags.append(f"output.{key}: unknown key")
            output_path = output.get("path")
            output_format = output.get("format", "csv")
            if output_path is not None and not isinstance(output_path, str):
                diags.append("output.path: must be a string")
            if not isinstance(output_format, str):
                diags.append("output.format: must be a string")
                output_format = "csv"

    options = raw.get("options", {})
    if not isinstance(options, dict):
        diags.append("options: must be an object")
        options = {}
    if diags:
        raise ConfigError(diags)
    return ExperimentConfig(
        kind=kind,
        family=family,
        family_params=family_params,
        killing_rule=killing_rule,
        killing_params=killing_params,
        sizes=tuple(sizes),
        budget=raw["budget"],
        seed=raw["seed"],
        output_path=output_path,
        output_format=output_format,
        options=options,
    )


def load_config(path: str) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as err:
        raise ConfigError([f"config: cannot read {path}: {err}"]) from err
    except json.JSONDecodeError as err:
        raise ConfigError([f"config: invalid JSON: {err}"]) from err
    return parse_config(raw)


def _validate_killing(config: ExperimentConfig, diags: list[str]) -> None:
    rule = config.killing_rule
    needs = config.kind in _KINDS_WITH_KILLING
    if rule is None:
        if needs:
            diags.append(f"killing: required for kind {config.kind!r}")
        return
    if not needs:
        diags.append(f"killing: not used by kind {config.kind!r}")
        return
    if rule not in KILLING_RULES:
        diags.append(f"killing.rule: unknown rule {rule!r}")
        return
    params = config.killing_params
    expected = {"fixed": "c", "exp-rate": "a", "power": "d", "beta": "beta"}[rule]
    for key in params:
        if key != expected:
            diags.append(f"killing.{key}: not used by rule {rule!r}")
    if expected not in params:
        diags.append(f"killing.{expected}: required by rule {rule!r}")
        return
    value = params[expected]
    if rule == "power" and config.kind == "complete-sweep" and isinstance(value, list):
        if not value or not all(_is_real(v) and math.isfinite(v) for v in value):
            diags.append("killing.d: must be a finite number or non-empty list of them")
        return
    if not _is_real(value) or not math.isfinite(value):
        diags.append(f"killing.{expected}: must be a finite number")
        return
    if rule == "fixed" and value <= 0:
        diags.append("killing.c: must be positive")
    if rule == "beta" and value <= 0:
        diags.append("killing.beta: must be positive")


def _validate_options(config: ExperimentConfig, diags: list[str]) -> None:
    allowed = _KIND_OPTION_KEYS.get(config.kind, ())
    for key in config.options:
        if key not in allowed:
            diags.append(f"options.{key}: not used by kind {config.kind!r}")
    opts = config.options
    if "K" in opts and (not _is_int(opts["K"]) or opts["K"] < 2):
        diags.append("options.K: must be an integer >= 2")
    if config.kind == "conditional-curve":
        ks = opts.get("ks")
        if not isinstance(ks, list) or not ks or not all(
            _is_int(k) and k >= 2 for k in ks
        ):
            diags.append("options.ks: required non-empty list of integers >= 2")
    if "alpha" in opts and (not _is_real(opts["alpha"]) or opts["alpha"] <= 0):
        diags.append("options.alpha: must be a positive number")
    if "m_max" in opts and (not _is_int(opts["m_max"]) or opts["m_max"] < 0):
        diags.append("options.m_max: must be an integer >= 0")
    if "rhos" in opts:
        rhos = opts["rhos"]
        if not isinstance(rhos, list) or not rhos or not all(
            _is_real(r) and 0.0 < r < 1.0 for r in rhos
        ):
            diags.append("options.rhos: must be a non-empty list of numbers in (0, 1)")


_FAMILY_MIN_SIZE = {
    "cycle": 3,
    "torus": 3,
    "tree_ball": 1,
    "complete": 3,
    "cycle_with_chords": 2,
}


def validate(config: ExperimentConfig) -> list[str]:
    """Domain diagnostics with field paths; empty means runnable."""
    diags: list[str] = []
    if config.kind not in KINDS:
        diags.append(f"kind: unknown kind {config.kind!r}")
        return diags
    if config.family not in FAMILIES:
        diags.append(f"graph.family: unknown family {config.family!r}")
        return diags
    allowed_families = _KIND_FAMILY.get(config.kind)
    if allowed_families and config.family not in allowed_families:
        diags.append(
            f"graph.family: kind {config.kind!r} supports {', '.join(allowed_families)}"
        )
    extra = _FAMILY_EXTRA_KEYS.get(config.family, ())
    for key in config.family_params:
        if key not in extra:
            diags.append(f"graph.{key}: not used by family {config.family!r}")
    if config.family == "torus":
        dim = config.family_params.get("dim")
        if not _is_int(dim) or dim < 1:
            diags.append("graph.dim: required integer >= 1")
    if config.family == "tree_ball":
        degree = config.family_params.get("degree")
        if not _is_int(degree) or degree < 2:
            diags.append("graph.degree: required integer >= 2")
        elif config.kind in ("tree-limit", "phase-sweep") and degree < 3:
            diags.append("graph.degree: limit objects need degree >= 3")
    if not config.sizes:
        diags.append("sizes: must be non-empty")
    else:
        floor = _FAMILY_MIN_SIZE[config.family]
        for i, s in enumerate(config.sizes):
            if s < floor:
                diags.append(
                    f"sizes[{i}]: {s} below the minimum {floor} for {config.family!r}"
                )
    if config.budget < 1:
        diags.append("budget: must be >= 1")
    if not 0 <= config.seed < 2**64:
        diags.append("seed: must fit in an unsigned 64-bit integer")
    if config.output_format not in ("csv", "json"):
        diags.append(f"output.format: must be csv or json, got {config.output_format!r}")
    _validate_killing(config, diags)
    _validate_options(config, diags)
    if config.kind == "phase-sweep" and config.killing_rule not in (None, "exp-rate"):
        diags.append("killing.rule: phase-sweep requires exp-rate")
    if config.kind == "complete-sweep" and config.killing_rule not in (None, "power"):
        diags.append("killing.rule: complete-sweep requires power")
    return diags


# ---------------------------------------------------------------------------
# kind runners


def _build(config: ExperimentConfig, size: int) -> WeightedGraph:
    family = config.family
    if family == "cycle":
        return build_cycle(size)
    if family == "torus":
        return build_torus(config.family_params["dim"], size)
    if family == "tree_ball":
        return build_tree_ball(config.family_params["degree"], size)
    if family == "complete":
        return build_complete(size)
    return build_cycle_with_chords(size)


def _killing(config: ExperimentConfig, vertex_count: int) -> loops.KillingRate:
    rule = config.killing_rule
    params = config.killing_params
    if rule == "fixed":
        return loops.KillingRate.fixed(params["c"])
    if rule == "exp-rate":
        return loops.KillingRate.exp_rate(params["a"], vertex_count)
    if rule == "power":
        return loops.KillingRate.power(params["d"], vertex_count)
    return loops.KillingRate.beta(params["beta"], vertex_count)


def _run_spectrum(config):
    rows = []
    for size in config.sizes:
        g = _build(config, size)
        spec = spectral.eigenvalues(transition_matrix(g), stationary_distribution(g))
        rows += [
            {"size": size, "index": i, "eigenvalue": float(v)}
            for i, v in enumerate(spec.values)
        ]
    return rows, []


def _run_loop_length(config):
    rows, diags = [], []
    for size in config.sizes:
        g = _build(config, size)
        Q = transition_matrix(g)
        kr = _killing(config, g.vertex_count)
        K = config.options.get("K") or loops.choose_truncation(Q, kr)
        dist = loops.loop_length_distribution(Q, kr, K)
        rows += [
            {"size": size, "k": int(k), "mass": float(mass)}
            for k, mass in zip(dist.lengths, dist.masses)
        ]
        diags.append(f"size {size}: K={K}, tail_upper={dist.tail_upper!r}")
    return rows, diags


def _cover_estimate(config, g) -> tuple[str, float, float, int, list[str]]:
    """(method, estimate, half_width, replicates, diagnostics) for one graph."""
    kr = _killing(config, g.vertex_count)
    if g.vertex_count <= loops.DP_MAX_VERTICES:
        result = loops.exact_cover_mass_dp(g, kr)
        note = (
            f"m={g.vertex_count}: exact dp, total_mass={result.total_mass!r}, "
            f"dp_k_max={result.dp_k_max}"
        )
        return "dp", float(result.cover_probability), 0.0, 0, [note]
    est = loops.mc_cover_prob(g, kr, config.budget, config.seed)
    return "mc", est.point, est.half_width, est.replicates, []


def _run_cover_prob(config):
    rows, diags = [], []
    for size in config.sizes:
        g = _build(config, size)
        method, estimate, half_width, reps, notes = _cover_estimate(config, g)
        kr = _killing(config, g.vertex_count)
        rows.append(
            {
                "size": size,
                "vertices": g.vertex_count,
                "c": kr.rate,
                "method": method,
                "estimate": estimate,
                "half_width": half_width,
                "replicates": reps,
            }
        )
        diags += notes
    return rows, diags


def _run_conditional_curve(config):
    rows = []
    ks = config.options["ks"]
    for size in config.sizes:
        g = _build(config, size)
        for point in loops.conditional_cover_curve(g, ks, config.budget, config.seed):
            rows.append(
                {
                    "size": size,
                    "k": point.k,
                    "estimate": point.estimate.point,
                    "half_width": point.estimate.half_width,
                    "markov_lower": point.markov_lower,
                }
            )
    return rows, []


def _run_soup(config):
    rows, diags = [], []
    alpha = float(config.options.get("alpha", 1.0))
    for idx, size in enumerate(config.sizes):
        g = _build(config, size)
        kr = _killing(config, g.vertex_count)
        counts = []
        mass = 0.0
        for j in range(config.budget):
            # distinct Philox keys per soup: golden-ratio stepping of the seed
            soup_seed = (
                config.seed + 0x9E3779B97F4A7C15 * (idx * config.budget + j + 1)
            ) % 2**64
            soup = loops.sample_loop_soup(g, kr, alpha, soup_seed)
            counts.append(len(soup.loops))
            mass = soup.total_mass_used
        rows.append(
            {
                "size": size,
                "alpha": alpha,
                "soups": config.budget,
                "mean_count": math.fsum(counts) / len(counts),
                "expected_count": alpha * mass,
                "max_count": max(counts),
            }
        )
        diags.append(f"size {size}: total_mass={mass!r}")
    return rows, diags


def _family_short_loop_rate(config) -> tuple[float, str]:
    if config.family == "tree_ball":
        d = config.family_params["degree"]
        return limits.tree_ball_J(d), f"tree closed form, degree {d}"
    dim = 1 if config.family == "cycle" else config.family_params["dim"]
    est = limits.torus_limit_J(dim)
    return est.value, f"torus quadrature, dim {dim}, error {est.error!r}"


def _run_phase_sweep(config):
    rows, diags = [], []
    a = float(config.killing_params["a"])
    j_value, j_note = _family_short_loop_rate(config)
    predicted = limits.predicted_cover_limit(limits.PhaseParameters(a, j_value))
    diags.append(f"short_loop_rate={j_value!r} ({j_note})")
    for size in config.sizes:
        g = _build(config, size)
        method, estimate, half_width, reps, notes = _cover_estimate(config, g)
        rows.append(
            {
                "size": size,
                "vertices": g.vertex_count,
                "a": a,
                "method": method,
                "estimate": estimate,
                "half_width": half_width,
                "predicted": predicted,
                "gap": float(estimate - predicted),
            }
        )
        diags += notes
    return rows, diags


def _run_tree_limit(config):
    d = config.family_params["degree"]
    m_max = int(config.options.get("m_max", 60))
    ls = limits.tree_ball_limit_spectrum(d, m_max)
    rows = [
        {"M": a.level, "i": a.index, "theta": a.theta, "lambda": a.location,
         "mass": a.mass}
        for a in ls.atoms
    ]
    rows.append({"M": "tail", "i": None, "theta": None, "lambda": None,
                 "mass": ls.tail_mass})
    closed = limits.tree_ball_J(d)
    core, lo, hi = limits.tree_ball_j_from_atoms(ls)
    diags = [
        f"J atomic={core!r} closed={closed!r} |diff|={abs(core - closed)!r}",
        f"J tail bracket [{lo!r}, {hi!r}], tail mass {ls.tail_mass!r}",
    ]
    return rows, diags


def _run_torus_limit(config):
    dim = config.family_params["dim"]
    rows = []
    est = limits.torus_limit_J(dim, "quadrature")
    rows.append({"dim": dim, "method": est.method, "value": est.value,
                 "error": est.error})
    if dim == 1:
        series = limits.torus_limit_J(1, "series")
        rows.append({"dim": dim, "method": series.method, "value": series.value,
                     "error": series.error})
    return rows, []


def _run_complete_sweep(config):
    rows = []
    d_raw = config.killing_params["d"]
    d_list = d_raw if isinstance(d_raw, list) else [d_raw]
    for n in config.sizes:
        for d in d_list:
            kr = loops.KillingRate.power(d, n)
            est = complete_graph.mc_complete_cover_prob(
                n, kr.rate, config.budget, config.seed
            )
            rows.append(
                {
                    "n": n,
                    "c_rule": f"n^-{d}",
                    "estimate": est.point,
                    "ci": est.half_width,
                    "predicted": limits.complete_predicted_limit(float(d)),
                }
            )
    return rows, []


def _chords_to_remove(n: int) -> tuple[int, list[int]]:
    """Evenly spaced triple indices for ceil(sqrt(3n)) chord deletions."""
    removed = min(math.isqrt(3 * n - 1) + 1, n)
    picks = [(t * n) // removed for t in range(removed)]
    return removed, picks


def _run_stability(config):
    rows, diags = [], []
    rhos = [float(r) for r in config.options.get("rhos", [0.3, 0.6, 0.9])]
    for size in config.sizes:
        g_full = _build(config, size)
        m = g_full.vertex_count
        removed, picks = _chords_to_remove(size)
        dropped = {(3 * i, 3 * i + 2) for i in picks}
        kept = tuple(e for e in g_full.edges if (e[0], e[1]) not in dropped)
        g_pert = WeightedGraph(m, kept)
        if g_full.edge_count - g_pert.edge_count != removed:
            raise RuntimeError(f"expected {removed} deletions at size {size}")
        Q_full, Q_pert = transition_matrix(g_full), transition_matrix(g_pert)
        pi_full = stationary_distribution(g_full)
        pi_pert = stationary_distribution(g_pert)
        ks = spectral.kolmogorov_distance(
            spectral.esd(spectral.eigenvalues(Q_full, pi_full)),
            spectral.esd(spectral.eigenvalues(Q_pert, pi_pert)),
        )
        diags.append(f"size {size}: removed {removed} of {size} chords, ks={ks!r}")
        for rho in rhos:
            full = spectral.log_det_functional(Q_full, rho, pi_full)
            pert = spectral.log_det_functional(Q_pert, rho, pi_pert)
            bound = removed / m * max(abs(math.log1p(-rho)), math.log1p(rho))
            rows.append(
                {
                    "size": size,
                    "vertices": m,
                    "removed": removed,
                    "rho": rho,
                    "full_value": full,
                    "perturbed_value": pert,
                    "delta": pert - full,
                    "bound": bound,
                    "ks_distance": ks,
                }
            )
    return rows, diags


_RUNNERS = {
    "spectrum": _run_spectrum,
    "loop-length": _run_loop_length,
    "cover-prob": _run_cover_prob,
    "conditional-curve": _run_conditional_curve,
    "soup": _run_soup,
    "phase-sweep": _run_phase_sweep,
    "tree-limit": _run_tree_limit,
    "torus-limit": _run_torus_limit,
    "complete-sweep": _run_complete_sweep,
    "stability": _run_stability,
}


def run(config: ExperimentConfig) -> RunRecord:
    diags = validate(config)
    if diags:
        raise ConfigError(diags)
    start = time.perf_counter()
    rows, notes = _RUNNERS[config.kind](config)
    elapsed = time.perf_counter() - start
    return RunRecord(config.echo(), tuple(rows), tuple(notes), __version__, elapsed)


def with_overrides(config: ExperimentConfig, seed: int | None = None,
                   out: str | None = None, fmt: str | None = None) -> ExperimentConfig:
    if seed is not None:
        config = replace(config, seed=seed)
    if out is not None:
        config = replace(config, output_path=out)
    if fmt is not None:
        config = replace(config, output_format=fmt)
    return config


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))  # shortest round-trip, also for numpy scalars
    return str(value)


def record_to_csv(record: RunRecord) -> str:
    if not record.rows:
        raise ValueError("no rows to serialize")
    header = list(record.rows[0])
    for row in record.rows:
        if list(row) != header:
            raise ValueError("rows must share one column set")
    lines = [",".join(header)]
    lines += [",".join(_cell(row[h]) for h in header) for row in record.rows]
    return "\n".join(lines) + "\n"


def record_to_json(record: RunRecord) -> str:
    payload = {
        "config": record.config,
        "rows": list(record.rows),
        "diagnostics": list(record.diagnostics),
        "version": record.version,
        "wall_time_s": record.wall_time_s,
    }
    return json.dumps(payload, indent=2) + "\n"


def write_record(record: RunRecord, path: str | None, fmt: str) -> str:
    text = record_to_csv(record) if fmt == "csv" else record_to_json(record)
    if path:
        Path(path).write_text(text)
    return text
