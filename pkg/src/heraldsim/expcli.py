"""Experiment runner: figure sweeps, self-validation and single-point reports.

Config files are flat ``key = value`` text::

    # fig3 with a coarse grid
    figure = fig3
    eta = 1.0
    seed = 7
    samples = 20000
    grid.p_abs = 0.0, 1.0, 11
    grid.dark = 0.0, 0.9, 10

Blank lines and ``#`` comments are ignored, unknown keys are rejected, and
command-line overrides win over the file.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import photonics
from .densop import max_abs_diff, pure_dm
from .metrics import (
    PLUS_PLUS,
    DivergentTrials,
    bell_fidelity,
    concurrence,
    expected_trials_analytic,
    expected_trials_mc,
    source_fault_analysis,
)
from .photonics import (
    DetectorModel,
    NodeParams,
    SourceModel,
    conditioned_bell_weight,
    resource_closed_form,
    simulate_resource,
)
from .ppp import project_parity, run_ppp, success_probability_analytic

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
DIVERGENT = "divergent"
AXES = ("p_abs", "A1", "A2", "delta", "eta", "dark", "p0", "p2")
FIGURES = ("fig2", "fig3", "fig4", "custom")

DEFAULT_GRIDS = {
    "fig2": {"p_abs": (0.0, 1.0, 41), "eta": (0.0, 1.0, 41)},
    "fig3": {"p_abs": (0.0, 1.0, 41), "dark": (0.0, 1.0, 41)},
    "fig4": {"p0": (0.0, 0.5, 26), "p2": (0.0, 0.05, 26)},
    "custom": {"p_abs": (0.0, 1.0, 11)},
}
COLUMNS = {
    "fig2": ["p_success_analytic", "p_success_simulated"],
    "fig3": ["trials_analytic", "trials_mc", "mc_stderr"],
    "fig4": ["concurrence", "fidelity"],
    "custom": ["accept_prob", "bell_weight", "p_success_analytic", "p_success_simulated",
               "trials_analytic", "concurrence", "fidelity"],
}


class ConfigError(ValueError):
    pass


@dataclass
class SweepConfig:
    figure: str = "fig2"
    grid: dict = field(default_factory=dict)
    fixed: dict = field(default_factory=dict)
    output_path: str | None = None

    def __post_init__(self):
        if self.figure not in FIGURES:
            raise ConfigError(f"figure must be one of {FIGURES}, got {self.figure!r}")
        if not self.grid:
            self.grid = dict(DEFAULT_GRIDS[self.figure])
        for name, axis in self.grid.items():
            if name not in AXES:
                raise ConfigError(f"unknown grid axis {name!r}; expected one of {AXES}")
            start, stop, steps = axis
            if int(steps) != steps or steps < 2:
                raise ConfigError(f"axis {name} needs at least 2 integer steps")
            _check_domain(name, start)
            _check_domain(name, stop)
        for key, value in self.fixed.items():
            if key not in FIXED_KEYS:
                raise ConfigError(f"unknown parameter {key!r}")
            if key in AXES:
                _check_domain(key, value)

    def axes(self):
        return [(name, np.linspace(a, b, int(n))) for name, (a, b, n) in self.grid.items()]


FIXED_KEYS = set(AXES) | {"seed", "samples", "detectors", "indistinguishable"}
_DOMAINS = {
    "p_abs": (0, 1), "A1": (0, 1), "A2": (0, 1), "eta": (0, 1), "dark": (0, 1),
    "p0": (0, 1), "p2": (0, 1), "delta": (-math.inf, math.inf),
}


def _check_domain(name, value):
    lo, hi = _DOMAINS[name]
    if not (lo <= value <= hi) or math.isnan(value):
        raise ConfigError(f"{name} = {value!r} outside [{lo}, {hi}]")


def _parse_value(key: str, text: str):
    text = text.strip()
    try:
        if key.startswith("grid."):
            parts = [p.strip() for p in text.split(",")]
            if len(parts) != 3:
                raise ConfigError(f"{key} needs 'start, stop, steps'")
            return (float(parts[0]), float(parts[1]), int(parts[2]))
        if key in ("seed", "samples"):
            return int(text)
        if key in ("detectors", "indistinguishable"):
            low = text.lower()
            if low not in ("true", "false", "on", "off", "1", "0", "yes", "no"):
                raise ConfigError(f"{key} expects a boolean, got {text!r}")
            return low in ("true", "on", "1", "yes")
        if key in ("figure", "out"):
            return text
        return float(text)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad value for {key}: {text!r}") from None


def parse_config(text: str, overrides: dict | None = None) -> SweepConfig:
    """Build a :class:`SweepConfig` from ``key = value`` text plus overrides."""
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not (key in FIXED_KEYS or key in ("figure", "out") or
                (key.startswith("grid.") and key[5:] in AXES)):
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        entries[key] = _parse_value(key, value)
    for key, value in (overrides or {}).items():
        if value is not None:
            entries[key] = value
    figure = entries.pop("figure", "fig2")
    if figure in ("2", "3", "4"):
        figure = f"fig{figure}"
    out = entries.pop("out", None)
    grid = {k[5:]: v for k, v in entries.items() if k.startswith("grid.")}
    fixed = {k: v for k, v in entries.items() if not k.startswith("grid.")}
    return SweepConfig(figure, grid, fixed, out)


# --- evaluating one grid point ---------------------------------------------

def _point_models(figure: str, params: dict):
    p_abs = params.get("p_abs", 0.1)
    node = NodeParams(params.get("A1", p_abs), params.get("A2", p_abs), params.get("delta", 0.0))
    p0, p2 = params.get("p0", 0.0), params.get("p2", 0.0)
    if p0 + p2 > 1:
        raise ConfigError(f"p0 + p2 = {p0 + p2} exceeds 1")
    source = SourceModel.faulty(p0, p2, params.get("indistinguishable", True))
    default_present = figure in ("fig2", "fig3") or "eta" in params or "dark" in params
    present = params.get("detectors", default_present)
    dark = params.get("dark", 0.0)
    # dark = 1 never accepts; callers treat it as saturated before using the model
    detectors = DetectorModel(present, params.get("eta", 1.0), dark if dark < 1 else 0.0)
    return node, source, detectors


def _simulated_success(node, source, detectors) -> float:
    res = simulate_resource(node, source, detectors)
    if res.state is None:
        return 0.0
    return run_ppp(PLUS_PLUS, res).p_success


def _mc_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


def evaluate_point(figure: str, params: dict, index: int = 0) -> dict:
    node, source, detectors = _point_models(figure, params)
    dark_saturated = params.get("dark", 0.0) >= 1 and detectors.present
    row = {}
    if figure in ("fig2", "custom"):
        row["p_success_analytic"] = 0.0 if dark_saturated else success_probability_analytic(node, detectors)
        row["p_success_simulated"] = 0.0 if dark_saturated else _simulated_success(node, source, detectors)
    if figure in ("fig3", "custom"):
        try:
            if dark_saturated:
                raise DivergentTrials("dark count rate 1")
            row["trials_analytic"] = expected_trials_analytic(node, detectors, "accept")
            if figure == "fig3":
                stats = expected_trials_mc(node, detectors, "accept",
                                           samples=params.get("samples", 10_000),
                                           seed=_mc_seed(params.get("seed", 0), index))
                row["trials_mc"] = stats.mc_mean
                row["mc_stderr"] = stats.mc_stderr
        except DivergentTrials:
            row["trials_analytic"] = DIVERGENT
            row["trials_mc"] = DIVERGENT
            row["mc_stderr"] = DIVERGENT
    if figure in ("fig4", "custom"):
        try:
            if dark_saturated:
                raise ZeroDivisionError
            figs = source_fault_analysis(node, source, detectors=detectors)
            row["concurrence"], row["fidelity"] = figs.concurrence, figs.fidelity
        except ZeroDivisionError:
            row["concurrence"] = row["fidelity"] = "none"
    if figure == "custom":
        if dark_saturated:
            row["accept_prob"], row["bell_weight"] = 0.0, 0.0
        else:
            res = simulate_resource(node, source, detectors)
            row["accept_prob"], row["bell_weight"] = res.accept_prob, res.bell_weight
    return row


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def run_sweep(config: SweepConfig) -> str:
    """Evaluate every grid point in row-major order and return the CSV text."""
    axes = config.axes()
    names = [n for n, _ in axes]
    cols = COLUMNS[config.figure]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names + cols)
    for index, values in enumerate(itertools.product(*(v for _, v in axes))):
        params = dict(config.fixed)
        params.update(zip(names, (float(v) for v in values)))
        row = evaluate_point(config.figure, params, index)
        writer.writerow([_fmt(v) for v in values] + [_fmt(row[c]) for c in cols])
    text = buf.getvalue()
    if config.output_path:
        path = Path(config.output_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


# --- validation -------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    name: str
    max_dev: float
    tol: float
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and self.max_dev <= self.tol

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        detail = f"error: {self.error}" if self.error else f"max_dev={self.max_dev:.3e}"
        return f"{status} {self.name:<28} {detail} tol={self.tol:.0e}"


def _random_pure_clients(rng, count):
    out = []
    for _ in range(count):
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        out.append(pure_dm(v, (2, 2)))
    return out


def _check_closed_form():
    grid = [0.0, 0.05, 0.1, 0.5, 1.0]
    dev = 0.0
    for a1, a2, delta in itertools.product(grid, grid, (0.0, 0.3, math.pi / 2)):
        node = NodeParams(a1, a2, delta)
        dev = max(dev, max_abs_diff(simulate_resource(node).state, resource_closed_form(node)))
    return dev


def _check_success_probability():
    dev = 0.0
    for a, eta in itertools.product((0.05, 0.1, 0.3, 0.5, 1.0), (0.0, 0.5, 0.9, 1.0)):
        for node in (NodeParams(a, a), NodeParams(a, a / 2, 0.4)):
            det = DetectorModel(True, eta, 0.0)
            dev = max(dev, abs(_simulated_success(node, photonics.IDEAL_SOURCE, det)
                               - success_probability_analytic(node, det)))
        node = NodeParams(a, a)
        dev = max(dev, abs(_simulated_success(node, photonics.IDEAL_SOURCE, photonics.NO_DETECTORS)
                           - success_probability_analytic(node)))
    return dev


def _check_dark_invariance():
    dev = 0.0
    for a, eta in itertools.product((0.05, 0.1, 0.5), (0.0, 0.5, 0.9)):
        node = NodeParams.symmetric(a, 0.3)
        base = simulate_resource(node, detectors=DetectorModel(True, eta, 0.0))
        base_ps = run_ppp(PLUS_PLUS, base).p_success
        for d in (0.3, 0.5, 0.9):
            res = simulate_resource(node, detectors=DetectorModel(True, eta, d))
            dev = max(dev, max_abs_diff(res.state, base.state),
                      abs(run_ppp(PLUS_PLUS, res).p_success - base_ps),
                      abs(res.accept_prob - base.accept_prob * (1 - d) ** 2))
    return dev


def _check_delta_invariance(rng):
    dev = 0.0
    clients = _random_pure_clients(rng, 5)
    for a1, a2 in ((0.1, 0.1), (0.3, 0.6)):
        ref = [run_ppp(c, resource_closed_form(NodeParams(a1, a2, 0.0))) for c in clients]
        for delta in (0.3, 0.7, math.pi / 2, 2.5):
            node = NodeParams(a1, a2, delta)
            for route in (resource_closed_form(node), simulate_resource(node)):
                for c, r0 in zip(clients, ref):
                    r = run_ppp(c, route)
                    dev = max(dev, abs(r.p_success - r0.p_success))
                    for b, b0 in zip(r.branches, r0.branches):
                        dev = max(dev, max_abs_diff(b.state, b0.state))
    return dev


def _check_parity_projection(rng):
    dev = 0.0
    clients = _random_pure_clients(rng, 20)
    for (a1, a2, delta), c in zip(itertools.cycle([(0.1, 0.1, 0.0), (0.05, 0.5, 1.2),
                                                   (1.0, 0.7, 2.0), (0.3, 0.3, 0.5)]), clients):
        r = run_ppp(c, simulate_resource(NodeParams(a1, a2, delta)))
        for b in r.branches:
            dev = max(dev, max_abs_diff(b.state, project_parity(c, b.parity)))
    return dev


def _check_failure_separable():
    dev = 0.0
    for a, delta in itertools.product((0.05, 0.1, 0.5, 1.0), (0.0, 0.7)):
        for a2 in (a, a / 2):
            r = run_ppp(PLUS_PLUS, simulate_resource(NodeParams(a, a2, delta)))
            dev = max(dev, concurrence(r.failure_state()))
    return dev


def _check_trial_mc(seed):
    node = NodeParams.symmetric(0.1)
    det = DetectorModel(True, 1.0, 0.5)
    analytic = expected_trials_analytic(node, det)
    stats = expected_trials_mc(node, det, samples=100_000, seed=seed)
    # deviation in units of 3 standard errors, so the tolerance is 1
    return abs(stats.mc_mean - analytic) / (3 * stats.mc_stderr), abs(analytic - 40.0)


def validate(seed: int = 0) -> tuple[bool, str]:
    """Run the self-consistency checks; return ``(all_passed, report)``."""
    rng = np.random.default_rng(seed)
    checks_to_run = [
        ("closed_form_equivalence", 1e-10, _check_closed_form),
        ("success_probability", 1e-9, _check_success_probability),
        ("dark_count_invariance", 1e-10, _check_dark_invariance),
        ("delta_invariance", 1e-10, lambda: _check_delta_invariance(rng)),
        ("parity_projection", 1e-9, lambda: _check_parity_projection(rng)),
        ("failure_mixture_separable", 1e-10, _check_failure_separable),
        ("trials_analytic_40", 1e-12, lambda: _check_trial_mc(seed)[1]),
        ("trials_mc_within_3se", 1.0, lambda: _check_trial_mc(seed)[0]),
    ]
    checks = []
    for name, tol, fn in checks_to_run:
        try:
            checks.append(Check(name, float(fn()), tol))
        except Exception as exc:  # a crashing check is a failed check
            checks.append(Check(name, math.nan, tol, f"{type(exc).__name__}: {exc}"))
    ok = all(c.passed for c in checks)
    lines = [c.line() for c in checks]
    lines.append(f"{sum(c.passed for c in checks)}/{len(checks)} checks passed (seed={seed})")
    return ok, "\n".join(lines) + "\n"


# --- single-point report ----------------------------------------------------

def _matrix_text(m: np.ndarray) -> str:
    rows = []
    for r in m:
        rows.append("  [" + ", ".join(f"{z.real:+.6f}{z.imag:+.6f}j" for z in r) + "]")
    return "\n".join(rows)


def describe(node: NodeParams, source: SourceModel = photonics.IDEAL_SOURCE,
             detectors: DetectorModel = photonics.NO_DETECTORS) -> str:
    out = [f"node: A1={node.A1:g} A2={node.A2:g} delta={node.delta:g} phi={node.phi:.6f}",
           f"source: p0={source.p0:g} p1={source.p1:g} p2={source.p2:g} "
           f"indistinguishable={source.indistinguishable}"]
    if detectors.present:
        out.append(f"detectors: eta={detectors.eta:g} dark={detectors.dark:g}")
    else:
        out.append("detectors: none")
    res = simulate_resource(node, source, detectors)
    out.append(f"accept probability: {res.accept_prob:.10g}")
    if res.state is None:
        out.append("resource: never accepted")
        return "\n".join(out) + "\n"
    w = conditioned_bell_weight(node.mean_absorption, detectors)
    out.append(f"conditioned Bell weight: {res.bell_weight:.10g}"
               + (f" (perfect-source formula {w:.10g})" if w is not None else ""))
    out.append("resource state (basis 00, 01, 10, 11):")
    out.append(_matrix_text(res.state.elements))
    result = run_ppp(PLUS_PLUS, res)
    out.append(f"p_success simulated: {result.p_success:.10g}")
    tag = "" if source == photonics.IDEAL_SOURCE else " (ideal source)"
    out.append(f"p_success analytic{tag}:  {success_probability_analytic(node, detectors):.10g}")
    out.append("PPP branches on |++> (m -> n, probability, parity, fidelity, concurrence):")
    for b in sorted(result.branches + result.failures, key=lambda b: (b.m, b.n)):
        if b.parity:
            out.append(f"  {b.m} -> {b.n}  {b.probability:.6e}  {b.parity:<4}  "
                       f"{bell_fidelity(b.state, b.parity):.10f}  {concurrence(b.state):.10f}")
        else:
            out.append(f"  {b.m} -> {b.n}  {b.probability:.6e}  fail  -  {concurrence(b.state):.10f}")
    if not result.branches:
        out.append("heralded branch fidelity: none (success probability is zero)")
    return "\n".join(out) + "\n"


# --- command line -----------------------------------------------------------

def _add_point_args(p):
    p.add_argument("--p-abs", type=float, help="symmetric absorption probability")
    p.add_argument("--A1", type=float)
    p.add_argument("--A2", type=float)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--eta", type=float, help="detector efficiency (enables detectors)")
    p.add_argument("--dark", type=float, help="dark count rate (enables detectors)")
    p.add_argument("--p0", type=float, default=0.0)
    p.add_argument("--p2", type=float, default=0.0)
    p.add_argument("--distinguishable", action="store_true",
                   help="split two-photon emissions binomially instead of bunching them")


def _point_from_args(args):
    p_abs = 1.0 if args.p_abs is None else args.p_abs
    a1 = p_abs if args.A1 is None else args.A1
    a2 = p_abs if args.A2 is None else args.A2
    node = NodeParams(a1, a2, args.delta)
    source = SourceModel.faulty(args.p0, args.p2, not args.distinguishable)
    present = args.eta is not None or args.dark is not None
    det = DetectorModel(present, 1.0 if args.eta is None else args.eta,
                        0.0 if args.dark is None else args.dark)
    return node, source, det


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heraldsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("resource", help="print the broker-pair resource state")
    _add_point_args(p)
    p.add_argument("--closed-form", action="store_true", help="use the analytic mixture")

    p = sub.add_parser("ppp", help="run the two-round protocol on |++> clients")
    _add_point_args(p)

    p = sub.add_parser("sweep", help="parameter sweep to CSV")
    p.add_argument("--figure", choices=["2", "3", "4", "custom"])
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path)
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key")

    p = sub.add_parser("describe", help="full report for one parameter point")
    _add_point_args(p)

    p = sub.add_parser("validate", help="run the invariant checks")
    p.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_resource(args):
    node, source, det = _point_from_args(args)
    if args.closed_form:
        state, accept = resource_closed_form(node), 1.0
    else:
        res = simulate_resource(node, source, det)
        state, accept = res.state, res.accept_prob
    print(f"accept_prob {accept:.17g}")
    if state is not None:
        print(_matrix_text(state.elements))
    return EXIT_OK


def _cmd_ppp(args):
    node, source, det = _point_from_args(args)
    res = simulate_resource(node, source, det)
    if res.state is None:
        print("resource never accepted")
        return EXIT_OK
    result = run_ppp(PLUS_PLUS, res)
    print(f"p_success {result.p_success:.17g}")
    print(f"p_success_analytic {success_probability_analytic(node, det):.17g}")
    for b in result.branches:
        print(f"{b.m}->{b.n} {b.parity} p={b.probability:.17g} "
              f"F={bell_fidelity(b.state, b.parity):.17g}")
    return EXIT_OK


def _cmd_sweep(args):
    text = args.config.read_text() if args.config else ""
    overrides = {"figure": args.figure, "seed": args.seed, "samples": args.samples,
                 "out": str(args.out) if args.out else None}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        text += f"\n{key} = {value}"
    config = parse_config(text, overrides)
    csv_text = run_sweep(config)
    if not config.output_path:
        sys.stdout.write(csv_text)
    return EXIT_OK


def _cmd_describe(args):
    node, source, det = _point_from_args(args)
    sys.stdout.write(describe(node, source, det))
    return EXIT_OK


def _cmd_validate(args):
    ok, report = validate(args.seed)
    sys.stdout.write(report)
    return EXIT_OK if ok else EXIT_FAIL


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"resource": _cmd_resource, "ppp": _cmd_ppp, "sweep": _cmd_sweep,
               "describe": _cmd_describe, "validate": _cmd_validate}[args.command]
    try:
        return handler(args)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        if args.command == "validate":
            raise
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
