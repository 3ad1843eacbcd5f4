"""Command-line entry point.

Every subcommand reads its inputs, runs one pipeline and writes its
artifacts plus ``manifest.json`` into ``--out``. Outputs depend only on the
inputs, the parameters and ``--seed``.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__, _backend
from . import io as cio
from .complex import ComplexError, build_b2, enumerate_candidate_cells, fill_all, hodge_laplacians
from .fir import MaskSpec, apply_fir, filter_problem, gain_condition
from .generators import grid_complex, harmonic_signal
from .harmonic import DivergenceError, HarmonicConfig, mass_fraction, run_algorithm1, threshold_scaled_signal
from .inference import (
    ConvergenceError,
    dictionaries,
    infer_cells,
    sweep_q_star,
    sparsity_error_curve,
)
from .sampling import SamplingPlan, SingularPlanError, make_plan, recover, select_band
from .spectral import IRROTATIONAL, SOLENOIDAL, hodge_decompose, spectral_basis

log = logging.getLogger("cellsp")

COMMANDS = ("build", "decompose", "infer", "represent", "design-filter",
            "check-gain", "harmonic", "sample", "reconstruct")

EXIT_OK, EXIT_INPUT, EXIT_PIPELINE = 0, 2, 3


@dataclass
class RunConfig:
    """Resolved command line: command, input files, output directory, parameters."""

    command: str
    out: Path
    inputs: dict[str, Path] = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    seed: int = 0

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        for name, path in self.inputs.items():
            if not Path(path).is_file():
                raise FileNotFoundError(f"--{name.replace('_', '-')}: no such file {path}")


def _positive(kind):
    def conv(s):
        v = kind(s)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {s}")
        return v
    return conv


def _nonneg(kind):
    def conv(s):
        v = kind(s)
        if v < 0:
            raise argparse.ArgumentTypeError(f"must be nonnegative, got {s}")
        return v
    return conv


def _float_list(s):
    try:
        return [float(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from None


def _int_list(s):
    try:
        return [int(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


def _complex_source(p, required=True):
    g = p.add_argument_group("complex")
    g.add_argument("--complex", type=Path, required=required,
                   help="complex JSON written by 'build' (edges, cells, B1, B2)")


def _mask_flags(p):
    for fam, label, b_default in (("sol", "solenoidal (upper-Laplacian)", 0.0),
                                  ("irr", "irrotational (lower-Laplacian)", 0.0)):
        g = p.add_argument_group(f"{label} mask h(lambda) = beta / (1 + exp(alpha (lambda - b)))")
        g.add_argument(f"--{fam}-beta", type=_nonneg(float), default=1.0, help="beta: mask height")
        g.add_argument(f"--{fam}-alpha", type=float, default=1.0, help="alpha: transition steepness")
        g.add_argument(f"--{fam}-b", type=float, default=b_default, help="b: transition frequency")
    p.add_argument("--L", dest="length", type=_positive(int), required=True,
                   help="L: filter length (number of Laplacian powers per family)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cellsp", description="Signal processing on cell complexes.")
    ap.add_argument("--version", action="version", version=f"cellsp {__version__}")
    ap.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def cmd(name, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("--out", type=Path, required=True, help="output directory (created if missing)")
        p.add_argument("--seed", type=int, default=0, help="seed for every random choice")
        return p

    p = cmd("build", "Build a cell complex from an edge list and write its Laplacian spectra.")
    p.add_argument("--edges", type=Path, required=True, help="edge CSV, one 'tail,head' per line")
    p.add_argument("--index-base", type=int, choices=(0, 1), default=0, help="id of the first node")
    p.add_argument("--cells", type=Path, help="cell CSV, one node cycle per line (B2 columns)")
    p.add_argument("--pmax", type=_positive(int),
                   help="P_max: fill every independent simple cycle up to this length "
                        "(ignored with --cells; default 2*ceil(E/N)+3)")
    p.add_argument("--no-fill", action="store_true", help="keep the bare skeleton (B2 empty)")

    p = cmd("decompose", "Hodge-decompose an edge signal into irrotational, solenoidal and harmonic parts.")
    _complex_source(p)
    p.add_argument("--signal", type=Path, required=True, help="signal CSV x1, one value per edge")

    p = cmd("infer", "Infer which 2-cells to fill from edge-flow observations.")
    p.add_argument("--edges", type=Path, required=True, help="edge CSV of the skeleton")
    p.add_argument("--index-base", type=int, choices=(0, 1), default=0, help="id of the first node")
    p.add_argument("--obs", type=Path, required=True, help="observation CSV X: E rows, M columns")
    p.add_argument("--pmax", type=_positive(int), help="P_max: longest candidate cycle")
    q = p.add_mutually_exclusive_group(required=True)
    q.add_argument("--qstar", type=_nonneg(int), help="q*: number of cells to fill")
    q.add_argument("--sweep", action="store_true", help="choose q* by held-out validation")
    p.add_argument("--max-error", type=_positive(float), default=1e-2,
                   help="held-out error bound for --sweep")
    p.add_argument("--energy-threshold", type=_nonneg(float),
                   help="fill nothing when the gradient-free energy is below this "
                        "(default 1e-6 of the total energy)")

    p = cmd("represent", "Sparsity/accuracy curves of basis pursuit over the four dictionaries.")
    _complex_source(p)
    p.add_argument("--signal", type=Path, required=True, help="signal CSV x1")
    p.add_argument("--epsilons", type=_float_list, required=True,
                   help="comma-separated epsilon values, relative to ||x1||")
    p.add_argument("--max-iter", type=_positive(int), default=10000, help="ADMM iteration cap")

    p = cmd("design-filter", "Least-squares FIR design for solenoidal and irrotational masks.")
    _complex_source(p)
    _mask_flags(p)
    p.add_argument("--mode", choices=("common", "independent"), default="independent",
                   help="one coefficient vector for both Laplacians, or one per Laplacian")
    p.add_argument("--alpha0", action="store_true", help="fit alpha_0 (identity term) instead of fixing 0")
    p.add_argument("--weighted", action="store_true", help="weight eigenvalues by multiplicity")
    p.add_argument("--signal", type=Path, help="optional signal CSV to filter")

    p = cmd("check-gain", "Decide whether independent FIR design strictly beats common design.")
    _complex_source(p)
    _mask_flags(p)

    p = cmd("harmonic", "Sparse harmonic representative by distributed subgradient descent.")
    _complex_source(p, required=False)
    p.add_argument("--signal", type=Path, help="observation CSV x1 (required with --complex)")
    g = p.add_argument_group("synthetic input (used when --complex is absent)")
    g.add_argument("--grid", type=_int_list, default=[8, 10], help="grid size 'rows,cols' in nodes")
    g.add_argument("--holes", type=_nonneg(int), default=2, help="number of punched faces")
    g.add_argument("--diagonals", type=_nonneg(int), default=0, help="squares split into two triangles")
    a = g.add_mutually_exclusive_group()
    a.add_argument("--amplitude", type=_positive(float),
                   help="fixed scale of the harmonic coefficients c ~ U[0, 1)")
    a.add_argument("--threshold-ratio", type=_positive(float), default=2.0,
                   help="scale so the zero-solution threshold is this multiple of gamma (default)")
    g.add_argument("--noise-var", type=_nonneg(float), default=0.05, help="sigma^2 of the added noise")
    p.add_argument("--gamma", type=_nonneg(float), default=50.0, help="gamma: sparsity weight")
    p.add_argument("--step", type=_positive(float), default=1.5e-3, help="a: step scale, mu_k = a / sqrt(k)")
    p.add_argument("--epsilon-w", type=_positive(float), help="epsilon_w: diffusion step (default 1/lambda_max)")
    p.add_argument("--max-iters", type=_positive(int), default=200000, help="iteration cap")
    p.add_argument("--tol-stop", type=_nonneg(float), default=1e-9,
                   help="stop when the best objective improves by less than this share per window")
    p.add_argument("--window", type=_positive(int), default=1000, help="iterations per stall check")

    p = cmd("sample", "Greedy Max-Det sampling plan for a bandlimited edge signal.")
    _complex_source(p)
    p.add_argument("--num-samples", type=_positive(int), required=True, help="N_s: number of sampled edges")
    b = p.add_mutually_exclusive_group(required=True)
    b.add_argument("--band", type=_int_list, help="F: comma-separated eigenvector indices")
    b.add_argument("--bandwidth", type=_positive(int), help="|F|: take the largest CFT coefficients of --signal")
    p.add_argument("--signal", type=Path, help="signal CSV to sample (writes samples.csv)")
    p.add_argument("--noise-std", type=_nonneg(float), default=0.0, help="std of noise added to samples")

    p = cmd("reconstruct", "Recover a bandlimited signal from samples and a plan.")
    _complex_source(p)
    p.add_argument("--plan", type=Path, required=True, help="plan JSON written by 'sample'")
    p.add_argument("--samples", type=Path, required=True, help="sample CSV 'edge_index,value'")
    return ap


_INPUT_FLAGS = ("edges", "cells", "complex", "signal", "obs", "plan", "samples")


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    args = dict(vars(ns))
    command = args.pop("command")
    out = args.pop("out")
    seed = args.pop("seed")
    args.pop("verbose", None)
    inputs = {k: args.pop(k) for k in _INPUT_FLAGS if k in args}
    inputs = {k: v for k, v in inputs.items() if v is not None}
    return RunConfig(command, out, inputs, args, seed)


# pipelines -----------------------------------------------------------------

def _write_spectra(path, cx):
    basis = spectral_basis(cx)
    cio.write_table(path, {
        "index": list(range(len(basis.eigenvalues))),
        "eigenvalue": basis.eigenvalues.tolist(),
        "class": list(basis.class_of),
    })


def _build(cfg):
    sk = cio.read_edges(cfg.inputs["edges"], cfg.params["index_base"])
    if "cells" in cfg.inputs:
        cx = cio.read_cells(cfg.inputs["cells"], sk, cfg.params["index_base"])
    elif cfg.params["no_fill"]:
        cx = build_b2(sk, [])
    else:
        cx = fill_all(sk, cfg.params["pmax"])
    cio.write_complex(cfg.out / "complex.json", cx)
    _write_spectra(cfg.out / "spectra.csv", cx)
    basis = spectral_basis(cx)
    return {"num_nodes": sk.num_nodes, "num_edges": sk.num_edges, "num_cells": cx.num_cells,
            "harmonic_dimension": int(len(basis.indices("harmonic")))}


def _decompose(cfg):
    cx = cio.read_complex(cfg.inputs["complex"])
    x = cio.read_signal(cfg.inputs["signal"], cx.skeleton.num_edges)
    comp = hodge_decompose(x, cx)
    cio.write_table(cfg.out / "decomposition.csv", {
        "input": x.tolist(), "irr": comp.irrotational.tolist(),
        "sol": comp.solenoidal.tolist(), "harm": comp.harmonic.tolist(),
    })
    return {"energy": {k: float(v @ v) for k, v in (("irr", comp.irrotational),
                                                    ("sol", comp.solenoidal),
                                                    ("harm", comp.harmonic))}}


def _infer(cfg):
    sk = cio.read_edges(cfg.inputs["edges"], cfg.params["index_base"])
    X = cio.read_matrix(cfg.inputs["obs"], sk.num_edges)
    cand = enumerate_candidate_cells(sk, cfg.params["pmax"])
    summary = {}
    q_star = cfg.params["qstar"]
    if cfg.params["sweep"]:
        sw = sweep_q_star(X, sk, cand, max_error=cfg.params["max_error"], seed=cfg.seed)
        cio.write_table(cfg.out / "qstar_sweep.csv", {
            "q": sw.q_values.tolist(), "train_error": sw.train_error.tolist(),
            "heldout_error": sw.heldout_error.tolist(),
        })
        q_star = sw.q_star
    if q_star > len(cand):
        raise ValueError(f"--qstar {q_star} exceeds the {len(cand)} candidate cells")
    res = infer_cells(X, sk, cand, q_star, cfg.params["energy_threshold"])
    report = {
        "q": res.q.tolist(), "d": res.d.tolist(), "q_star": res.q_star,
        "energy": res.energy_sH, "gated": res.gated,
        "candidates": [list(c.node_cycle) for c in cand],
        "selected_cells": [list(cand[i].node_cycle) for i in res.selected],
    }
    cio.write_json(cfg.out / "inference.json", report)
    summary.update(q_star=res.q_star, num_candidates=len(cand))
    return summary


def _represent(cfg):
    cx = cio.read_complex(cfg.inputs["complex"])
    x = cio.read_signal(cfg.inputs["signal"], cx.skeleton.num_edges)
    eps = np.asarray(cfg.params["epsilons"]) * np.linalg.norm(x)
    rows = sparsity_error_curve(x, dictionaries(cx), eps, max_iter=cfg.params["max_iter"])
    cio.write_table(cfg.out / "curve.csv", {
        "dictionary": [r[0] for r in rows], "epsilon": [float(r[1]) for r in rows],
        "sparsity": [int(r[2]) for r in rows], "residual": [float(r[3]) for r in rows],
    })
    return {"rows": len(rows)}


def _masks(params):
    ms = MaskSpec(params["sol_beta"], params["sol_alpha"], params["sol_b"], SOLENOIDAL)
    mi = MaskSpec(params["irr_beta"], params["irr_alpha"], params["irr_b"], IRROTATIONAL)
    return ms, mi


def _design(cfg):
    cx = cio.read_complex(cfg.inputs["complex"])
    ms, mi = _masks(cfg.params)
    prob = filter_problem(spectral_basis(cx), ms, mi, weighted=cfg.params["weighted"])
    L = cfg.params["length"]
    kw = {"optimize_alpha0": cfg.params["alpha0"]}
    d = prob.common(L, **kw) if cfg.params["mode"] == "common" else prob.independent(L, **kw)
    d = dataclasses.replace(d, masks={SOLENOIDAL: ms, IRROTATIONAL: mi})
    cio.write_json(cfg.out / "design.json", d.to_dict())
    if "signal" in cfg.inputs:
        x = cio.read_signal(cfg.inputs["signal"], cx.skeleton.num_edges)
        cio.write_signal(cfg.out / "filtered.csv", apply_fir(x, d, hodge_laplacians(cx)))
    return {"residual_common": d.residual_common, "residual_sol": d.residual_sol,
            "residual_irr": d.residual_irr}


def _gain(cfg):
    cx = cio.read_complex(cfg.inputs["complex"])
    ms, mi = _masks(cfg.params)
    rep = gain_condition(ms, mi, spectral_basis(cx), cfg.params["length"])
    out = dataclasses.asdict(rep)
    out["gap"] = rep.gap
    cio.write_json(cfg.out / "gain.json", out)
    return {"verdict": rep.verdict}


def _harmonic(cfg):
    p = cfg.params
    if "complex" in cfg.inputs:
        if "signal" not in cfg.inputs:
            raise ValueError("--signal is required with --complex")
        cx = cio.read_complex(cfg.inputs["complex"])
        x = cio.read_signal(cfg.inputs["signal"], cx.skeleton.num_edges)
        hole_edges = None
    else:
        if len(p["grid"]) != 2:
            raise ValueError("--grid takes 'rows,cols'")
        g = grid_complex(p["grid"][0], p["grid"][1], num_holes=p["holes"],
                         num_diagonals=p["diagonals"], seed=cfg.seed)
        cx = g.complex
        if p["amplitude"] is not None:
            x = harmonic_signal(cx, p["amplitude"], p["noise_var"], seed=cfg.seed)
        else:
            x, _ = threshold_scaled_signal(cx, p["threshold_ratio"], p["gamma"], p["noise_var"], cfg.seed)
        hole_edges = g.hole_edges
        cio.write_complex(cfg.out / "complex.json", cx)
        cio.write_signal(cfg.out / "signal.csv", x)
    hc = HarmonicConfig(gamma=p["gamma"], step_a=p["step"], epsilon_w=p["epsilon_w"],
                        max_iters=p["max_iters"], seed=cfg.seed, tol_stop=p["tol_stop"],
                        window=p["window"])
    res = run_algorithm1(x, cx, hc)
    report = {
        "best_iteration": res.best_iteration, "iterations": res.iterations, "status": res.status,
        "best_objective": res.best_objective, "harmonic_residual": res.harmonic_residual,
        "x_norm": float(np.linalg.norm(x)), "epsilon_w": res.config.epsilon_w,
        "s_H": res.s_H.tolist(), "s2": res.s2.tolist(), "z": res.z.tolist(),
    }
    if hole_edges is not None:
        report["hole_mass_fraction"] = mass_fraction(res.z, hole_edges)
    cio.write_json(cfg.out / "harmonic.json", report)
    cio.write_table(cfg.out / "trace.csv", {
        "iteration": list(range(len(res.objective_trace))),
        "objective": res.objective_trace.tolist(),
    })
    sk = cx.skeleton
    cio.write_table(cfg.out / "z.csv", {
        "edge_index": list(range(sk.num_edges)), "tail": [e[0] for e in sk.edges],
        "head": [e[1] for e in sk.edges], "abs_z": np.abs(res.z).tolist(),
    })
    return {"status": res.status, "iterations": res.iterations}


def _sample(cfg):
    cx = cio.read_complex(cfg.inputs["complex"])
    basis = spectral_basis(cx)
    E = cx.skeleton.num_edges
    x = cio.read_signal(cfg.inputs["signal"], E) if "signal" in cfg.inputs else None
    if cfg.params["bandwidth"] is not None:
        if x is None:
            raise ValueError("--bandwidth needs --signal")
        F = select_band(x, basis, cfg.params["bandwidth"])
    else:
        F = np.asarray(cfg.params["band"], dtype=int)
        if F.size == 0 or F.min() < 0 or F.max() >= E or len(set(F.tolist())) != F.size:
            raise ValueError(f"--band must list distinct indices in [0, {E})")
    plan = make_plan(basis, F, cfg.params["num_samples"])
    cio.write_json(cfg.out / "plan.json", {"F": plan.F.tolist(), "S": plan.S.tolist(),
                                           "det_score": plan.det_score})
    if x is not None:
        y = x[plan.S]
        if cfg.params["noise_std"]:
            y = y + cfg.params["noise_std"] * np.random.default_rng(cfg.seed).standard_normal(len(y))
        cio.write_samples(cfg.out / "samples.csv", plan.S, y)
    return {"det_score": plan.det_score}


def _reconstruct(cfg):
    cx = cio.read_complex(cfg.inputs["complex"])
    basis = spectral_basis(cx)
    pj = cio.read_json(cfg.inputs["plan"])
    try:
        F = np.asarray(pj["F"], dtype=int)
        S = np.asarray(pj["S"], dtype=int)
    except KeyError as exc:
        raise cio.ParseError(cfg.inputs["plan"], None, f"missing field {exc}") from None
    plan = SamplingPlan(F, S, basis.eigenvectors[:, F], float(pj.get("det_score", np.nan)))
    idx, val = cio.read_samples(cfg.inputs["samples"])
    pos = {int(e): i for i, e in enumerate(S)}
    y = np.zeros(len(S))
    seen = np.zeros(len(S), dtype=bool)
    for e, v in zip(idx, val):
        if e not in pos:
            raise cio.ParseError(cfg.inputs["samples"], None, f"edge {e} is not in the plan")
        y[pos[e]] = v
        seen[pos[e]] = True
    if not seen.all():
        raise cio.ParseError(cfg.inputs["samples"], None,
                             f"missing samples for edges {S[~seen].tolist()}")
    cio.write_signal(cfg.out / "reconstruction.csv", recover(y, plan))
    return {"num_samples": int(len(S))}


PIPELINES = {
    "build": _build, "decompose": _decompose, "infer": _infer, "represent": _represent,
    "design-filter": _design, "check-gain": _gain, "harmonic": _harmonic,
    "sample": _sample, "reconstruct": _reconstruct,
}


def _jsonable(v):
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, (np.integer, np.floating)):
        return v.item()
    return v


def write_manifest(cfg: RunConfig, summary: dict) -> None:
    cio.write_json(cfg.out / "manifest.json", {
        "command": cfg.command,
        "seed": cfg.seed,
        "parameters": {k: _jsonable(v) for k, v in sorted(cfg.params.items())},
        "inputs": {k: {"path": Path(v).name, "sha256": cio.sha256(v)} for k, v in sorted(cfg.inputs.items())},
        "versions": {"cellsp": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": "%d.%d.%d" % sys.version_info[:3], "backend": _backend.BACKEND},
        "summary": summary,
    })


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the process exit status."""
    try:
        cfg.validate()
        cfg.out.mkdir(parents=True, exist_ok=True)
        summary = PIPELINES[cfg.command](cfg)
    except (FileNotFoundError, cio.ParseError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except (ComplexError, ValueError, ConvergenceError, DivergenceError, SingularPlanError,
            np.linalg.LinAlgError) as exc:
        log.error("%s failed: %s", cfg.command, exc)
        return EXIT_PIPELINE
    write_manifest(cfg, summary)
    log.info("%s: wrote %s", cfg.command, cfg.out)
    return EXIT_OK


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(name)s: %(levelname)s: %(message)s", stream=sys.stderr)
    return run(config_from_args(ns))


if __name__ == "__main__":
    sys.exit(main())
