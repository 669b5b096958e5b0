"""Command-line driver: corrupt, solve, and write image, trace and report.

Exit status is 0 when the solver met its stopping rule, 2 when the outer
iteration budget ran out first and 1 on any error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path


from . import bench, oracle
from ._backend import BACKENDS
from .decomposition import Partition
from .fidelity import FidelityModel, Variant, threshold
from .imaging import add_gaussian, add_salt_pepper, load_image, load_mask, save_image
from .solvers import InnerParams, OuterParams, SolverDivergence, dd_solve, relative_gap, solve_full_primal_dual

log = logging.getLogger("tvdd")

EXIT_OK, EXIT_ERROR, EXIT_BUDGET = 0, 1, 2

SOLVE_TASKS = {
    "denoise-l2": Variant.RofL2,
    "denoise-l1": Variant.TvL1,
    "inpaint-l2": Variant.InpaintL2,
    "inpaint-l1": Variant.InpaintL1,
    "segment": Variant.Segmentation,
}
TASKS = tuple(SOLVE_TASKS) + ("verify", "bench")

# Default model weight and corruption applied to the bundled sample.
RECIPES = {
    "denoise-l2": dict(alpha=10.0, gaussian_var=0.05, salt_pepper=None),
    "denoise-l1": dict(alpha=1.0, gaussian_var=None, salt_pepper=0.2),
    "inpaint-l2": dict(alpha=10.0, gaussian_var=0.05, salt_pepper=None),
    "inpaint-l1": dict(alpha=1.0, gaussian_var=None, salt_pepper=0.2),
    "segment": dict(alpha=10.0, gaussian_var=0.01, salt_pepper=None),
}


def data_path(name: str) -> Path:
    return Path(str(resources.files("tvdd") / "data" / name))


SAMPLE = "sample64.pgm"
SAMPLE_MASK = "mask64.pgm"
REFERENCES = "references.json"


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    task: str
    input: str | None = None
    output: str | None = None
    mask: str | None = None
    alpha: float | None = None
    partition: str = "2x2"
    tau: float | None = None
    L: float = 2.0
    outer_tol: float = 1e-5
    inner_tol: float = 1e-6
    max_outer: int = 500
    max_inner: int = 2000
    threads: int = 1
    seed: int = 0
    reference_energy: float | None = None
    c1: float = 0.6
    c2: float = 0.1
    salt_pepper: float | None = None
    gaussian_var: float | None = None
    trace: str | None = None
    report: str | None = None
    solver: str = "dd"
    baseline_iters: int = 100_000
    backend: str | None = None
    log: str | None = None
    scale: float = 1.0

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.threads < 1:
            raise ConfigError("--threads must be at least 1")
        if self.solver not in ("dd", "baseline"):
            raise ConfigError(f"unknown solver {self.solver!r}")

    @property
    def uses_sample(self) -> bool:
        return self.input is None

    def recipe(self) -> dict:
        """Alpha and corruption after filling task defaults.

        Corruption defaults only apply to the bundled sample; a user image is
        used as given unless noise flags are passed.
        """
        base = RECIPES[self.task]
        out = {"alpha": self.alpha if self.alpha is not None else base["alpha"]}
        for key in ("gaussian_var", "salt_pepper"):
            given = getattr(self, key)
            out[key] = given if given is not None else (base[key] if self.uses_sample else None)
        return out


def prepare(config: ExperimentConfig):
    """Load and corrupt the input; returns ``(model, clean)``."""
    variant = SOLVE_TASKS[config.task]
    recipe = config.recipe()
    clean = load_image(config.input or data_path(SAMPLE))
    f = clean
    corrupted = False
    if recipe["salt_pepper"] is not None:
        f = add_salt_pepper(f, recipe["salt_pepper"], config.seed)
        corrupted = True
    if recipe["gaussian_var"] is not None:
        f = add_gaussian(f, 0.0, recipe["gaussian_var"], config.seed)
        corrupted = True
    mask = None
    if variant.needs_mask:
        path = config.mask or (data_path(SAMPLE_MASK) if config.uses_sample else None)
        if path is None:
            raise ConfigError(f"{config.task} needs --mask")
        mask = load_mask(path)
        if mask.shape != f.shape:
            raise ConfigError(f"mask is {mask.shape[0]}x{mask.shape[1]}, image is {f.shape[0]}x{f.shape[1]}")
    elif config.mask is not None:
        log.warning("--mask ignored for %s", config.task)
    model = FidelityModel.build(variant, f, recipe["alpha"], mask=mask, c1=config.c1, c2=config.c2)
    return model, (clean if corrupted and variant is not Variant.Segmentation else None)


def bundled_reference(config: ExperimentConfig) -> float | None:
    """Reference energy shipped for the exact default recipe, if it applies."""
    if not config.uses_sample:
        return None
    table = json.loads(data_path(REFERENCES).read_text())
    entry = table["tasks"].get(config.task)
    if entry is None or config.seed != table["seed"]:
        return None
    recipe = config.recipe()
    if any(recipe[k] != entry[k] for k in ("alpha", "gaussian_var", "salt_pepper")):
        return None
    if config.task == "segment" and (config.c1, config.c2) != (entry["c1"], entry["c2"]):
        return None
    return float(entry["energy"])


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def write_trace(rows, path):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["iter", "energy", "rel_gap", "psnr"])
        for r in rows:
            out.writerow([r.iteration, _fmt(r.energy), _fmt(r.rel_gap), _fmt(r.psnr)])


def _json_number(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else str(x)


def solve(config: ExperimentConfig, model: FidelityModel, clean, reference):
    """Run the configured solver; returns ``(u, report, extras)``."""
    if config.solver == "baseline":
        u, _, report = solve_full_primal_dual(model, max_iter=config.baseline_iters,
                                              reference_energy=reference, clean=clean,
                                              backend=config.backend)
        return u, report, {}
    partition = Partition.parse(config.partition, model.shape)
    tau = config.tau if config.tau is not None else (1.0 if model.variant is Variant.Segmentation else 50.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        outer = OuterParams(tau=tau, L=config.L, max_outer=config.max_outer,
                            outer_tol=config.outer_tol, reference_energy=reference)
    if config.L == 2.0:
        log.info("L = 2 is on the boundary of the step-size condition")
    inner = InnerParams.default(tau, inner_tol=config.inner_tol, max_inner=config.max_inner)
    res = dd_solve(model, partition, outer, inner, threads=config.threads,
                   backend=config.backend, clean=clean)
    extras = {
        "final_jump": res.report.jump_trace[-1] if res.report.jump_trace else 0.0,
        "nonconverged_inner_solves": res.report.nonconverged_solves,
    }
    return res.u, res.report, extras


def run(config: ExperimentConfig) -> int:
    """Execute one configured task; returns the process exit status."""
    try:
        if config.task == "verify":
            return _run_verify(config)
        if config.task == "bench":
            print(bench.format_table(bench.run()))
            return EXIT_OK
        model, clean = prepare(config)
        reference = config.reference_energy if config.reference_energy is not None else bundled_reference(config)
        u, report, extras = solve(config, model, clean, reference)
    except (OSError, ValueError, SolverDivergence) as exc:
        log.debug("failed: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    out_image = threshold(u) if model.variant is Variant.Segmentation else u
    if config.output:
        save_image(out_image, config.output)
    if config.trace:
        write_trace(report.energy_trace, config.trace)
    summary = {
        "task": config.task,
        "seed": config.seed,
        "partition": config.partition if config.solver == "dd" else "1x1",
        "outer_iters": report.outer_iters,
        "max_inner_iters": report.max_inner_iters,
        "final_energy": _json_number(report.final_energy),
        "psnr": _json_number(report.psnr),
        "wall_time_sec": report.wall_time,
        "converged": report.converged,
        "solver": config.solver,
        "backend": report.backend,
        "alpha": model.alpha,
        "reference_energy": reference,
        "rel_gap": None if reference is None else relative_gap(report.final_energy, reference),
        **extras,
    }
    if config.report:
        Path(config.report).write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary))
    return EXIT_OK if report.converged else EXIT_BUDGET


def _run_verify(config: ExperimentConfig) -> int:
    results = oracle.run_suites(config.seed, config.scale)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tvdd", description=__doc__.splitlines()[0])
    p.add_argument("task", choices=TASKS)
    p.add_argument("--input", help="8-bit grayscale PGM or PNG (default: bundled 64x64 sample)")
    p.add_argument("--output", help="where to write the result image")
    p.add_argument("--mask", help="inpainting mask image, nonzero = missing")
    p.add_argument("--alpha", type=float)
    p.add_argument("--partition", default="2x2", help="RxC block rows by block columns")
    p.add_argument("--tau", type=float, help="outer step (default 50, 1 for segment)")
    p.add_argument("--L", type=float, default=2.0)
    p.add_argument("--outer-tol", type=float, default=1e-5)
    p.add_argument("--inner-tol", type=float, default=1e-6)
    p.add_argument("--max-outer", type=int, default=500)
    p.add_argument("--max-inner", type=int, default=2000)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reference-energy", type=float)
    p.add_argument("--c1", type=float, default=0.6)
    p.add_argument("--c2", type=float, default=0.1)
    p.add_argument("--salt-pepper", type=float, metavar="DENSITY")
    p.add_argument("--gaussian-var", type=float, metavar="VAR")
    p.add_argument("--trace", help="CSV energy trace")
    p.add_argument("--report", help="JSON run report")
    p.add_argument("--solver", choices=("dd", "baseline"), default="dd")
    p.add_argument("--baseline-iters", type=int, default=100_000)
    p.add_argument("--backend", choices=sorted(BACKENDS))
    p.add_argument("--log", help="append log messages to this file")
    p.add_argument("--scale", type=float, default=1.0, help="case-count multiplier for verify")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = logging.FileHandler(args.log) if args.log else logging.StreamHandler()
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("tvdd")
    root.handlers[:] = [handler]
    root.setLevel(logging.INFO if args.verbose else logging.WARNING)
    fields = {k: v for k, v in vars(args).items() if k != "verbose"}
    try:
        config = ExperimentConfig(**fields)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
