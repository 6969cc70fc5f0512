"""Command-line experiment driver.

    polyplane --config experiment.cfg --out results/

Writes into the output directory:

* ``report.txt``      key = value summary
* ``grid.csv``        node classification
* ``fields.csv``      i, j, x1, x2, u_1 .. u_m
* ``sweep.csv``       lambda, component, min_v, argmin_i, argmin_j
* ``plotdata/*.dat``  two-column text for external plotting
* ``figures/*.png``   rendered figures

Exit status is 0 when the solve converged and the sweep met its expectation
(critical plane at 0 on conforming domains, a violation at positive lambda
on the negative control).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .geometry import build_grid, validate_domain, write_grid_csv
from .solver import ConvergenceError, F1Report, check_f1, solve_system, write_fields_csv
from .symcoeffs import sign_equivalence
from .verify import (
    barrier_check,
    barrier_constant,
    singular_profile_experiment,
    stencil_residual,
    sweep_mu,
    write_plotdata,
    write_sweep_csv,
)

__all__ = ["check_f1", "run_experiment", "main", "EXIT_OK", "EXIT_FAILED", "EXIT_CONFIG",
           "EXIT_OUTPUT", "EXIT_HYPOTHESIS"]

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_OUTPUT = 3
EXIT_HYPOTHESIS = 4

log = logging.getLogger("polyplane")


class _Report:
    def __init__(self):
        self.lines: list[str] = []

    def section(self, name):
        if self.lines:
            self.lines.append("")
        self.lines.append(f"[{name}]")

    def kv(self, key, value):
        self.lines.append(f"{key} = {value}")

    def extend(self, lines):
        self.lines.extend(lines)

    def write(self, path):
        Path(path).write_text("\n".join(self.lines) + "\n")


def _fmt(x):
    return repr(float(x)) if x is not None else "none"


def _header(rep: _Report, cfg: ExperimentConfig):
    rep.section("config")
    rep.kv("domain", cfg.domain.description)
    rep.kv("negative_control", str(cfg.negative_control).lower())
    rep.kv("m", cfg.m)
    rep.kv("alpha", " ".join(repr(a) for a in cfg.alpha))
    rep.kv("f", str(cfg.f))
    rep.kv("n_cells", cfg.n_cells)
    s = cfg.solve
    rep.kv("picard_tol", repr(s.picard_tol))
    rep.kv("cg_tol", repr(s.cg_tol))
    rep.kv("omega", repr(s.omega))


def _hypotheses(rep: _Report, cfg: ExperimentConfig) -> tuple[dict, F1Report]:
    rep.section("domain_checks")
    rep.extend(validate_domain(cfg.domain).lines())

    rep.section("coefficients")
    eq = sign_equivalence(cfg.alpha)
    rep.kv("s_k", " ".join(repr(c) for c in eq["coeffs"]))
    rep.kv("coeffs_nonnegative", str(eq["coeffs_nonnegative"]).lower())
    rep.kv("lower_coeffs_nonnegative", str(eq["lower_coeffs_nonnegative"]).lower())
    rep.kv("shifts_nonnegative", str(eq["shifts_nonnegative"]).lower())
    rep.kv("sign_equivalence_holds", str(eq["agree"]).lower())
    rep.kv("note", "theorem hypothesis is read as s_0..s_{m-1} >= 0 (printed with index k)")

    rep.section("nonlinearity")
    f1 = check_f1(cfg.f)
    rep.kv("lipschitz_constant", repr(f1.lipschitz))
    for clause, ok in f1.clauses.items():
        rep.kv(f"clause {clause}", "pass" if ok else "FAIL")
    return eq, f1


def run_experiment(config_path, out_dir=None, quiet: bool = False) -> int:
    """Run one experiment end to end and return the exit status."""
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(out_dir or cfg.output_dir or "results")
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "plotdata").mkdir(exist_ok=True)
        (out / "figures").mkdir(exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"output directory {out} is not writable: {exc}", file=sys.stderr)
        return EXIT_OUTPUT

    rep = _Report()
    _header(rep, cfg)
    eq, f1 = _hypotheses(rep, cfg)
    report_path = out / "report.txt"

    if not f1.ok:
        rep.section("result")
        rep.kv("status", f"aborted: nonlinearity violates (f1) clause(s) {', '.join(f1.violated)}")
        rep.write(report_path)
        print(f"nonlinearity {cfg.f} violates: {', '.join(f1.violated)}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    if not eq["shifts_nonnegative"]:
        rep.section("result")
        rep.kv("status", "aborted: negative shift alpha_i, operator would not be an M-matrix")
        rep.write(report_path)
        print("alpha must be componentwise >= 0", file=sys.stderr)
        return EXIT_HYPOTHESIS

    grid = build_grid(cfg.domain, cfg.n_cells)
    write_grid_csv(grid, out / "grid.csv")
    rep.section("grid")
    rep.kv("h", repr(grid.h))
    rep.kv("interior_nodes", grid.size)
    rep.kv("mirror_symmetric_nodes", str(grid.is_mirror_symmetric).lower())

    status = EXIT_OK
    rep.section("solve")
    try:
        stack = solve_system(grid, cfg.alpha, cfg.f, cfg.solve)
    except ConvergenceError as exc:
        rep.kv("converged", "false")
        rep.kv("error", str(exc))
        if exc.history:
            rep.kv("update_history", " ".join(f"{u:.3e}" for u in exc.history))
        rep.section("result")
        rep.kv("status", "solve failed")
        rep.write(report_path)
        print(f"solve failed: {exc}", file=sys.stderr)
        return EXIT_FAILED

    rep.kv("converged", "true")
    rep.kv("picard_iterations", stack.iterations)
    rep.kv("cg_iterations", stack.cg_iterations)
    rep.kv("last_update", _fmt(stack.updates[-1]))
    rep.kv("contraction_estimate", _fmt(stack.contraction_estimate))
    for i, r in enumerate(stack.residuals, start=1):
        rep.kv(f"residual_eq{i}", repr(r))
    for i, mn in enumerate(stack.minima, start=1):
        rep.kv(f"min_u{i}", repr(mn))
    rep.kv("sup_u1", repr(stack.sup_u1))
    rep.kv("strictly_positive", str(stack.positive).lower())
    if stack.degenerate:
        rep.kv("note", "degenerate solution: U is identically zero")
    write_fields_csv(stack, out / "fields.csv")

    from . import plotting

    for i in range(1, stack.m + 1):
        plotting.plot_field(stack, out / "figures" / f"u_{i}.png", component=i)

    if cfg.sweep:
        sweep = sweep_mu(stack, rel_tol=cfg.sweep_tol, f=cfg.f)
        rep.section("sweep")
        rep.extend(sweep.lines())
        write_sweep_csv(sweep, out / "sweep.csv")
        write_plotdata(sweep, out / "plotdata" / "sweep_min.dat")
        plotting.plot_sweep(sweep, out / "figures" / "sweep.png")
        if cfg.negative_control:
            expected = sweep.first_violation is not None and sweep.first_violation > 0
            rep.kv("expectation", "violation at some lambda > 0 (negative control)")
        else:
            expected = sweep.mu_hat == 0.0
            rep.kv("expectation", "mu_hat = 0")
        rep.kv("expectation_met", str(expected).lower())
        if not expected:
            status = EXIT_FAILED

    if cfg.barrier is not None:
        a, r, K = cfg.barrier
        rep.section("barrier")
        try:
            b = barrier_check(a, r, K)
        except ValueError as exc:
            rep.kv("error", str(exc))
            status = EXIT_FAILED
        else:
            rep.kv("a", repr(a))
            rep.kv("r", repr(r))
            rep.kv("K", repr(K))
            rep.kv("K_from_coupling_matrix", repr(barrier_constant(cfg.alpha, cfg.f.lipschitz)))
            rep.kv("r_star", repr(b.r_star))
            rep.kv("holds_near_puncture", str(b.ok).lower())
            with open(out / "plotdata" / "barrier.dat", "w") as fh:
                fh.write("# radius laplace_h_plus_K_h\n")
                for rho, v in zip(b.radii, b.values):
                    fh.write(f"{float(rho)!r} {float(v)!r}\n")
            plotting.plot_barrier(b, out / "figures" / "barrier.png")
            if not b.ok:
                status = EXIT_FAILED

    if cfg.singular:
        rep.section("singular_profile")
        if cfg.domain.shape != "disc":
            rep.kv("skipped", "singular profile needs a disc domain")
        else:
            srep, sstack = singular_profile_experiment(grid)
            positive = all(e.min_all > 0 for e in srep.entries if e.lam > 0)
            zero = [e for e in srep.entries if e.lam == 0.0]
            res = stencil_residual(grid, sstack.fields[0])
            far = (np.hypot(grid.x1, grid.x2) > 0.1) & np.isfinite(res)
            rep.kv("positive_for_all_lambda_gt_0", str(positive).lower())
            if zero:
                rep.kv("max_abs_v_at_lambda_0", repr(float(max(abs(v) for v in zero[0].minima))))
            rep.kv("max_stencil_residual_r_gt_0.1", repr(float(np.max(np.abs(res[far])))))
            write_sweep_csv(srep, out / "singular_sweep.csv")
            write_plotdata(srep, out / "plotdata" / "singular_min.dat")
            plotting.plot_sweep(srep, out / "figures" / "singular_sweep.png", title="Green-function profile")
            if not positive:
                status = EXIT_FAILED

    rep.section("result")
    rep.kv("status", "ok" if status == EXIT_OK else "expectation not met")
    rep.kv("exit_status", status)
    rep.write(report_path)
    if not quiet:
        print(f"wrote {report_path}")
        for line in rep.lines:
            if line.startswith(("mu_hat", "first_violating", "symmetry_defect", "monotonicity_defect",
                                "status", "r_star")):
                print("  " + line)
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="polyplane", description=__doc__.splitlines()[0])
    parser.add_argument("--config", required=True, help="experiment config file")
    parser.add_argument("--out", default=None, help="output directory (default: [output] directory or ./results)")
    parser.add_argument("--quiet", action="store_true", help="only report errors")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    return run_experiment(args.config, args.out, args.quiet)


if __name__ == "__main__":
    sys.exit(main())
