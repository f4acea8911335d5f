"""Experiment harness: generate instances, compute exact references, run
sampler comparisons, fit effective temperatures, and measure throughput.

Subcommands
-----------
generate    write an instance JSON file from one of the seeded generators
exact       tabulate exact thermodynamics over a temperature grid
run         execute an experiment config: samplers, reweighting, reports
fit-temp    fit an effective temperature to a pool CSV
throughput  measure the Metropolis kernel update rate on an instance

``run`` consumes a JSON experiment config.  Every omitted default is
materialized into the config echo embedded in report.json, so the echo
itself is a complete, re-runnable config.  All volatile output (wall
time, timestamps, measured rates) lives under the report's "meta" key;
everything else, and every CSV, is a pure function of (config, code).

Exit codes: 0 success, 2 invalid arguments or config, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import copy
import datetime
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .exact import (
    ENUMERATION_CAP,
    ExactThermal,
    enumerate_boltzmann,
    transfer_matrix,
)
from .cd import CDConfig, cd_run
from .hamiltonian import (
    DiagonalHamiltonian,
    canonical_bytes,
    gen_ising_chain,
    gen_spin_glass,
    gen_three_body,
    load_instance,
    save_instance,
)
from .pool import SamplePool
from .reweight import (
    connected_correlation,
    cumulative_fom,
    divergences,
    fit_effective_temperature,
    magnetization,
    mean_energy,
    reweight,
)
from .samplers import ReplicaLadder, adapt_ladder, greedy_pp, mh_run, pt_run, throughput_benchmark

__all__ = ["main", "log_temperature_grid", "resolve_config", "REPORT_SCHEMA"]

REPORT_SCHEMA = "coldspin-report/1"
FIT_SCHEMA = "coldspin-fit/1"

_METHOD_KINDS = ("cd", "mh", "pt")


def log_temperature_grid(t_min: float, t_max: float, count: int) -> list[float]:
    """Log-spaced temperature grid helper for experiment configs."""
    if not 0 < t_min < t_max:
        raise ValueError("need 0 < t_min < t_max")
    if count < 2:
        raise ValueError("count must be >= 2")
    return [float(t) for t in np.geomspace(t_min, t_max, count)]


def instance_hash(h: DiagonalHamiltonian) -> str:
    return hashlib.sha256(canonical_bytes(h)).hexdigest()


# ----------------------------------------------------------------------
# config resolution


def _reject_unknown(block: dict, allowed: set[str], where: str) -> None:
    extra = sorted(set(block) - allowed)
    if extra:
        raise ValueError(f"{where}: unknown key(s) {extra}")


def _resolve_instance_block(block, base_dir: str) -> dict:
    if not isinstance(block, dict):
        raise ValueError("'instance' must be an object")
    _reject_unknown(block, {"path", "generator"}, "instance")
    if ("path" in block) == ("generator" in block):
        raise ValueError("instance needs exactly one of 'path' or 'generator'")
    if "path" in block:
        path = block["path"]
        if not isinstance(path, str):
            raise ValueError("instance path must be a string")
        if not os.path.isabs(path):
            path = os.path.abspath(os.path.join(base_dir, path))
        return {"path": path}
    gen = dict(block["generator"])
    kind = str(gen.pop("kind", "")).replace("-", "_")
    if kind == "chain":
        _reject_unknown(gen, {"n", "seed", "open_boundary"}, "instance.generator")
        out = {
            "kind": "chain",
            "n": int(gen["n"]),
            "seed": int(gen["seed"]),
            "open_boundary": bool(gen.get("open_boundary", False)),
        }
    elif kind == "glass":
        _reject_unknown(gen, {"n", "seed", "e0"}, "instance.generator")
        out = {
            "kind": "glass",
            "n": int(gen["n"]),
            "seed": int(gen["seed"]),
            "e0": float(gen.get("e0", 1.0)),
        }
    elif kind == "three_body":
        _reject_unknown(gen, {"n", "seed", "n_pairs", "n_triples"}, "instance.generator")
        out = {
            "kind": "three_body",
            "n": int(gen["n"]),
            "seed": int(gen["seed"]),
            "n_pairs": int(gen["n_pairs"]),
            "n_triples": int(gen["n_triples"]),
        }
    else:
        raise ValueError(f"unknown instance generator kind {gen.get('kind', kind)!r}")
    return {"generator": out}


def _build_instance(resolved: dict) -> DiagonalHamiltonian:
    if "path" in resolved:
        return load_instance(resolved["path"])
    g = resolved["generator"]
    if g["kind"] == "chain":
        return gen_ising_chain(g["n"], g["seed"], open_boundary=g["open_boundary"])
    if g["kind"] == "glass":
        return gen_spin_glass(g["n"], g["seed"], e0=g["e0"])
    return gen_three_body(g["n"], g["n_pairs"], g["n_triples"], g["seed"])


def _resolve_pp_block(pp, where: str) -> dict:
    if not isinstance(pp, dict):
        raise ValueError(f"{where}: 'pp' must be an object")
    _reject_unknown(pp, {"n_pp", "n_sweeps", "t_pp"}, where)
    if "n_pp" not in pp:
        raise ValueError(f"{where}: pp block needs 'n_pp'")
    out = {
        "n_pp": int(pp["n_pp"]),
        "n_sweeps": int(pp.get("n_sweeps", 3)),
        "t_pp": float(pp.get("t_pp", 0.02)),
    }
    if out["n_pp"] < 1 or out["n_sweeps"] < 1 or out["t_pp"] < 0:
        raise ValueError(f"{where}: invalid pp parameters")
    return out


def _resolve_method(block, index: int, seen_names: set[str]) -> dict:
    where = f"methods[{index}]"
    if not isinstance(block, dict):
        raise ValueError(f"{where}: must be an object")
    kind = block.get("kind")
    if kind not in _METHOD_KINDS:
        raise ValueError(f"{where}: 'kind' must be one of {list(_METHOD_KINDS)}")
    name = block.get("name", kind)
    if not isinstance(name, str) or not name or not all(
        c.isalnum() or c in "_-" for c in name
    ):
        raise ValueError(f"{where}: 'name' must be filename-safe ([A-Za-z0-9_-])")
    if name in seen_names:
        raise ValueError(f"{where}: duplicate method name {name!r}")
    seen_names.add(name)

    out: dict = {"name": name, "kind": kind}
    if kind == "cd":
        allowed = {
            "name", "kind", "n_iter", "n_shots", "w", "n_cvar", "n_trot",
            "schedule", "bias_sign", "pp_refined_bias", "pp_bias_states",
            "pp_bias_sweeps", "pp",
        }
        _reject_unknown(block, allowed, where)
        out.update(
            n_iter=int(block.get("n_iter", 5)),
            n_shots=int(block.get("n_shots", 1000)),
            w=float(block.get("w", 0.5)),
            n_cvar=int(block.get("n_cvar", 20)),
            n_trot=int(block.get("n_trot", 2)),
            schedule=str(block.get("schedule", "sin2")),
            bias_sign=str(block.get("bias_sign", "aligned")),
            pp_refined_bias=bool(block.get("pp_refined_bias", False)),
            pp_bias_states=int(block.get("pp_bias_states", 2000)),
            pp_bias_sweeps=int(block.get("pp_bias_sweeps", 3)),
        )
        # validate eagerly so config errors surface before any sampling
        CDConfig(
            n_iter=out["n_iter"], n_shots=out["n_shots"], w=out["w"],
            n_cvar=out["n_cvar"], n_trot=out["n_trot"], schedule=out["schedule"],
            bias_sign=out["bias_sign"], pp_refined_bias=out["pp_refined_bias"],
            pp_bias_states=out["pp_bias_states"], pp_bias_sweeps=out["pp_bias_sweeps"],
        )
    elif kind == "mh":
        _reject_unknown(
            block, {"name", "kind", "beta", "temperature", "n_steps", "n_walkers", "pp"}, where
        )
        if ("beta" in block) == ("temperature" in block):
            raise ValueError(f"{where}: need exactly one of 'beta' or 'temperature'")
        if "temperature" in block:
            t = float(block["temperature"])
            if t <= 0:
                raise ValueError(f"{where}: temperature must be positive")
            beta = 1.0 / t
        else:
            beta = float(block["beta"])
            if beta < 0:
                raise ValueError(f"{where}: beta must be non-negative")
        if "n_steps" not in block:
            raise ValueError(f"{where}: mh block needs 'n_steps'")
        out.update(
            beta=beta,
            n_steps=int(block["n_steps"]),
            n_walkers=int(block.get("n_walkers", 1)),
        )
        if out["n_steps"] < 1 or out["n_walkers"] < 1:
            raise ValueError(f"{where}: n_steps and n_walkers must be >= 1")
    else:  # pt
        _reject_unknown(block, {"name", "kind", "betas", "adapt", "n_sweeps", "pp"}, where)
        if ("betas" in block) == ("adapt" in block):
            raise ValueError(f"{where}: need exactly one of 'betas' or 'adapt'")
        if "n_sweeps" not in block:
            raise ValueError(f"{where}: pt block needs 'n_sweeps'")
        out["n_sweeps"] = int(block["n_sweeps"])
        if out["n_sweeps"] < 1:
            raise ValueError(f"{where}: n_sweeps must be >= 1")
        if "betas" in block:
            betas = [float(b) for b in block["betas"]]
            ReplicaLadder.from_betas(betas)  # validates shape and ordering
            out["betas"] = betas
        else:
            ad = block["adapt"]
            if not isinstance(ad, dict):
                raise ValueError(f"{where}: 'adapt' must be an object")
            _reject_unknown(
                ad,
                {"beta_min", "beta_max", "target_ratio", "n_pt_steps", "steps_unit", "max_iters"},
                f"{where}.adapt",
            )
            for key in ("beta_min", "beta_max", "target_ratio", "n_pt_steps"):
                if key not in ad:
                    raise ValueError(f"{where}.adapt: missing '{key}'")
            out["adapt"] = {
                "beta_min": float(ad["beta_min"]),
                "beta_max": float(ad["beta_max"]),
                "target_ratio": float(ad["target_ratio"]),
                "n_pt_steps": int(ad["n_pt_steps"]),
                "steps_unit": str(ad.get("steps_unit", "updates")),
                "max_iters": int(ad.get("max_iters", 30)),
            }
    if "pp" in block:
        out["pp"] = _resolve_pp_block(block["pp"], where)
    return out


def resolve_config(doc, base_dir: str = ".", seed_override: int | None = None) -> dict:
    """Validate a raw experiment config and materialize every default.

    The result is a complete config: resolving it again is the identity
    (modulo the already-applied seed override).
    """
    if not isinstance(doc, dict):
        raise ValueError("experiment config must be a JSON object")
    allowed = {
        "label", "instance", "temperatures", "betas", "seed", "methods",
        "require_equal_budget", "exact_reference",
    }
    _reject_unknown(doc, allowed, "config")
    for key in ("instance", "methods"):
        if key not in doc:
            raise ValueError(f"config: missing required key '{key}'")
    if ("temperatures" in doc) == ("betas" in doc):
        raise ValueError("config: need exactly one of 'temperatures' or 'betas'")

    if "temperatures" in doc:
        grid = doc["temperatures"]
        if isinstance(grid, dict):
            _reject_unknown(grid, {"log"}, "temperatures")
            t_min, t_max, count = grid["log"]
            temps = log_temperature_grid(float(t_min), float(t_max), int(count))
        else:
            temps = [float(t) for t in grid]
        if not temps or any(t <= 0 for t in temps):
            raise ValueError("temperatures must be positive and non-empty")
        betas = [1.0 / t for t in temps]
        grid_key, grid_val = "temperatures", temps
    else:
        betas = [float(b) for b in doc["betas"]]
        if not betas or any(b < 0 for b in betas):
            raise ValueError("betas must be non-negative and non-empty")
        grid_key, grid_val = "betas", betas

    methods_raw = doc["methods"]
    if not isinstance(methods_raw, list) or not methods_raw:
        raise ValueError("config: 'methods' must be a non-empty list")
    seen: set[str] = set()
    methods = [_resolve_method(m, i, seen) for i, m in enumerate(methods_raw)]

    exact_ref = doc.get("exact_reference", "auto")
    if exact_ref not in ("auto", "none"):
        raise ValueError("exact_reference must be 'auto' or 'none'")

    label = str(doc.get("label", "experiment"))
    seed = int(doc.get("seed", 0)) if seed_override is None else int(seed_override)
    resolved = {
        "label": label,
        "instance": _resolve_instance_block(doc["instance"], base_dir),
        grid_key: grid_val,
        "seed": seed,
        "require_equal_budget": bool(doc.get("require_equal_budget", False)),
        "exact_reference": exact_ref,
        "methods": methods,
    }
    resolved["_betas"] = betas  # internal, stripped from the echo
    return resolved


def method_budget(method: dict, n_qubits: int) -> int | None:
    """Configured total sample count; None when it depends on adaptation."""
    extra = 0
    if "pp" in method:
        pp = method["pp"]
        extra = pp["n_pp"] * pp["n_sweeps"] * n_qubits
    if method["kind"] == "cd":
        return method["n_iter"] * method["n_shots"] + extra
    if method["kind"] == "mh":
        return method["n_walkers"] * method["n_steps"] + extra
    if "betas" in method:
        return len(method["betas"]) * method["n_sweeps"] * n_qubits + extra
    return None


# ----------------------------------------------------------------------
# method execution


def _run_method(h: DiagonalHamiltonian, method: dict, seed_pair) -> tuple[SamplePool, dict]:
    main_seed, pp_seed = int(seed_pair[0]), int(seed_pair[1])
    kind = method["kind"]
    details: dict = {"name": method["name"], "kind": kind, "seed": main_seed}
    if kind == "cd":
        cfg = CDConfig(
            n_iter=method["n_iter"], n_shots=method["n_shots"], w=method["w"],
            n_cvar=method["n_cvar"], n_trot=method["n_trot"],
            schedule=method["schedule"], bias_sign=method["bias_sign"],
            pp_refined_bias=method["pp_refined_bias"],
            pp_bias_states=method["pp_bias_states"],
            pp_bias_sweeps=method["pp_bias_sweeps"], seed=main_seed,
        )
        res = cd_run(h, cfg)
        pool = res.pool
        details["iterations"] = [
            {
                "iteration": s.iteration,
                "mean_energy": s.mean_energy,
                "min_energy": s.min_energy,
                "n_gates": s.n_gates,
                "bias_max_abs": s.bias_max_abs,
            }
            for s in res.stats
        ]
        details["final_bias"] = [float(v) for v in res.final_bias.values]
    elif kind == "mh":
        pool = mh_run(
            h, beta=method["beta"], n_steps=method["n_steps"],
            n_walkers=method["n_walkers"], seed=main_seed,
        )
        details["beta"] = method["beta"]
        details["n_walkers"] = method["n_walkers"]
        details["n_steps"] = method["n_steps"]
    else:
        if "betas" in method:
            ladder = ReplicaLadder.from_betas(method["betas"])
            details["adapted"] = False
        else:
            ad = method["adapt"]
            ladder = adapt_ladder(
                h, ad["beta_min"], ad["beta_max"], ad["target_ratio"],
                ad["n_pt_steps"], seed=main_seed, max_iters=ad["max_iters"],
                steps_unit=ad["steps_unit"],
            )
            ladder = ReplicaLadder.from_betas(ladder.betas)  # reset counters
            details["adapted"] = True
        res = pt_run(h, ladder, n_sweeps=method["n_sweeps"], seed=main_seed)
        pool = res.combined
        details["betas"] = [float(b) for b in res.ladder.betas]
        details["n_sweeps"] = method["n_sweeps"]
        details["swap_attempts"] = [int(x) for x in res.ladder.swap_attempts]
        details["swap_accepts"] = [int(x) for x in res.ladder.swap_accepts]
        details["swap_acceptance"] = [
            float(r) for r in res.ladder.acceptance_ratios()
        ]
    if "pp" in method:
        pp = method["pp"]
        greedy_pp(
            h, pool, n_pp=pp["n_pp"], n_sweeps=pp["n_sweeps"],
            t_pp=pp["t_pp"], seed=pp_seed,
        )
        details["pp"] = {
            "seed": pp_seed,
            "added_samples": pp["n_pp"] * pp["n_sweeps"] * h.n_qubits,
        }
    details["total_samples"] = pool.total_samples
    details["distinct_states"] = pool.distinct_count
    details["min_energy"] = float(pool.min_energy())
    return pool, details


def _exact_references(
    h: DiagonalHamiltonian, betas: list[float], mode: str
) -> list[ExactThermal] | None:
    if mode == "none":
        return None
    try:
        return [transfer_matrix(h, b) for b in betas]
    except ValueError:
        pass
    if h.n_qubits > ENUMERATION_CAP:
        return None
    return [enumerate_boltzmann(h, b) for b in betas]


def _exact_summary(ex: ExactThermal) -> dict:
    n = ex.site_magnetization.size
    mag = float(ex.site_magnetization.mean())
    conn = float(
        np.mean(
            [
                ex.bond_correlation[i]
                - ex.site_magnetization[i] * ex.site_magnetization[(i + 1) % n]
                for i in range(n)
            ]
        )
    )
    return {
        "beta": ex.beta,
        "ln_z": ex.ln_z,
        "mean_energy": ex.mean_energy,
        "magnetization": mag,
        "connected_correlation": conn,
        "method": ex.method,
    }


# ----------------------------------------------------------------------
# CSV writers (repr floats, so files are bit-stable)


def _write_observables_csv(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(
            "method,temperature,beta,ln_z_tilde,mean_energy,"
            "magnetization,connected_correlation,kl,tvd\n"
        )
        for r in rows:
            kl = repr(float(r["kl"])) if r["kl"] is not None else ""
            tvd = repr(float(r["tvd"])) if r["tvd"] is not None else ""
            fh.write(
                f"{r['method']},{float(r['temperature'])!r},{float(r['beta'])!r},"
                f"{float(r['ln_z_tilde'])!r},{float(r['mean_energy'])!r},"
                f"{float(r['magnetization'])!r},{float(r['connected_correlation'])!r},"
                f"{kl},{tvd}\n"
            )


def _write_exact_csv(path, summaries, betas) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(
            "temperature,beta,ln_z,mean_energy,magnetization,connected_correlation\n"
        )
        for s, beta in zip(summaries, betas):
            t = np.inf if beta == 0 else 1.0 / beta
            fh.write(
                f"{float(t)!r},{float(beta)!r},{s['ln_z']!r},{s['mean_energy']!r},"
                f"{s['magnetization']!r},{s['connected_correlation']!r}\n"
            )


# ----------------------------------------------------------------------
# subcommands


def cmd_generate(args) -> int:
    kind = args.kind.replace("-", "_")
    if kind == "chain":
        h = gen_ising_chain(args.n, args.seed, open_boundary=args.open_boundary)
    elif kind == "glass":
        h = gen_spin_glass(args.n, args.seed, e0=args.e0)
    elif kind == "three_body":
        if args.pairs is None or args.triples is None:
            raise ValueError("three_body generation needs --pairs and --triples")
        h = gen_three_body(args.n, args.pairs, args.triples, args.seed)
    else:
        raise ValueError(f"unknown instance kind {args.kind!r}")
    save_instance(h, args.out)
    summary = {
        "path": args.out,
        "kind": kind,
        "n_qubits": h.n_qubits,
        "n_terms": h.n_terms,
        "seed": args.seed,
        "sha256": instance_hash(h),
    }
    print(json.dumps(summary, indent=2))
    return 0


def _parse_grid(args) -> list[float]:
    if (args.temperatures is None) == (args.betas is None):
        raise ValueError("need exactly one of --temperatures or --betas")
    if args.temperatures is not None:
        temps = [float(t) for t in args.temperatures.split(",") if t.strip()]
        if not temps or any(t <= 0 for t in temps):
            raise ValueError("temperatures must be positive")
        return [1.0 / t for t in temps]
    betas = [float(b) for b in args.betas.split(",") if b.strip()]
    if not betas or any(b < 0 for b in betas):
        raise ValueError("betas must be non-negative")
    return betas


def cmd_exact(args) -> int:
    h = load_instance(args.instance)
    betas = _parse_grid(args)
    if args.method == "transfer_matrix":
        refs = [transfer_matrix(h, b) for b in betas]
    elif args.method == "enumeration":
        refs = [enumerate_boltzmann(h, b) for b in betas]
    else:
        refs = _exact_references(h, betas, "auto")
        if refs is None:
            raise ValueError(
                f"no exact oracle applies: instance is not a chain and "
                f"{h.n_qubits} qubits exceed the enumeration cap of {ENUMERATION_CAP}"
            )
    summaries = [_exact_summary(ex) for ex in refs]
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "exact_reference.csv")
    _write_exact_csv(path, summaries, betas)
    print(f"wrote {path} ({len(betas)} temperatures, oracle: {refs[0].method})")
    return 0


def cmd_run(args) -> int:
    t_start = time.perf_counter()
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(
            f"{args.config}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    if args.threads < 1:
        raise ValueError("--threads must be >= 1")
    resolved = resolve_config(doc, os.path.dirname(os.path.abspath(args.config)), args.seed)
    betas = resolved.pop("_betas")
    temperatures = [np.inf if b == 0 else 1.0 / b for b in betas]

    h = _build_instance(resolved["instance"])
    n = h.n_qubits

    budgets = {m["name"]: method_budget(m, n) for m in resolved["methods"]}
    if resolved["require_equal_budget"]:
        if any(b is None for b in budgets.values()):
            raise ValueError(
                "require_equal_budget needs explicit 'betas' in every pt block "
                "(adaptive ladders have data-dependent budgets)"
            )
        if len(set(budgets.values())) != 1:
            listing = ", ".join(f"{k}={v}" for k, v in budgets.items())
            raise ValueError(f"equal-budget check failed: {listing}")

    seed_roots = np.random.SeedSequence(resolved["seed"]).spawn(len(resolved["methods"]))
    pools: dict[str, SamplePool] = {}
    method_details: list[dict] = []
    for method, child in zip(resolved["methods"], seed_roots):
        seed_pair = child.generate_state(2, dtype=np.uint64)
        try:
            pool, details = _run_method(h, method, seed_pair)
        except ValueError as exc:
            raise ValueError(f"method '{method['name']}': {exc}") from None
        except Exception as exc:
            raise RuntimeError(f"method '{method['name']}': {exc}") from exc
        expected = budgets[method["name"]]
        if expected is None:
            expected = len(details["betas"]) * method["n_sweeps"] * n
            if "pp" in method:
                pp = method["pp"]
                expected += pp["n_pp"] * pp["n_sweeps"] * n
            budgets[method["name"]] = expected
        if pool.total_samples != expected:
            raise RuntimeError(
                f"method '{method['name']}': realized {pool.total_samples} samples, "
                f"configured budget {expected}"
            )
        details["budget"] = expected
        pools[method["name"]] = pool
        method_details.append(details)

    refs = _exact_references(h, betas, resolved["exact_reference"])
    exact_summaries = [_exact_summary(ex) for ex in refs] if refs else None

    os.makedirs(args.out, exist_ok=True)
    obs_rows = []
    lnz_table: dict[str, list[float]] = {}
    for details in method_details:
        name = details["name"]
        pool = pools[name]
        pool.to_csv(os.path.join(args.out, f"pool_{name}.csv"))
        cumulative_fom(pool, betas).to_csv(os.path.join(args.out, f"trace_{name}.csv"))
        lnz_col = []
        for k, (beta, temp) in enumerate(zip(betas, temperatures)):
            rw = reweight(pool, beta)
            kl = tvd = None
            if refs is not None:
                kl, tvd = divergences(pool, beta, refs[k])
            obs_rows.append(
                {
                    "method": name,
                    "temperature": float(temp),
                    "beta": float(beta),
                    "ln_z_tilde": rw.ln_z_tilde,
                    "mean_energy": mean_energy(rw),
                    "magnetization": magnetization(rw),
                    "connected_correlation": connected_correlation(rw),
                    "kl": kl,
                    "tvd": tvd,
                }
            )
            lnz_col.append(rw.ln_z_tilde)
        lnz_table[name] = lnz_col
    _write_observables_csv(os.path.join(args.out, "observables.csv"), obs_rows)
    if exact_summaries is not None:
        _write_exact_csv(
            os.path.join(args.out, "exact_reference.csv"), exact_summaries, betas
        )

    echo = copy.deepcopy(resolved)
    report = {
        "schema": REPORT_SCHEMA,
        "version": __version__,
        "label": resolved["label"],
        "scale": "analogue",
        "config": echo,
        "instance": {
            "n_qubits": n,
            "n_terms": h.n_terms,
            "order_counts": {str(k): v for k, v in sorted(h.order_counts().items())},
            "metadata": h.metadata,
            "sha256": instance_hash(h),
        },
        "grid": {
            "temperatures": [float(t) for t in temperatures],
            "betas": [float(b) for b in betas],
        },
        "methods": method_details,
        "tables": {
            "ln_z_tilde": lnz_table,
            "exact_ln_z": [s["ln_z"] for s in exact_summaries] if exact_summaries else None,
        },
        "files": sorted(
            ["observables.csv"]
            + (["exact_reference.csv"] if exact_summaries else [])
            + [f"pool_{d['name']}.csv" for d in method_details]
            + [f"trace_{d['name']}.csv" for d in method_details]
        ),
        "meta": {
            "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "elapsed_seconds": time.perf_counter() - t_start,
            "threads_requested": args.threads,
            "threads_used": 1,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
        },
    }
    report_path = os.path.join(args.out, "report.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    for details in method_details:
        print(
            f"{details['name']}: {details['total_samples']} samples, "
            f"{details['distinct_states']} distinct, min E {details['min_energy']:.6f}"
        )
    print(f"wrote {report_path}")
    return 0


def cmd_fit_temp(args) -> int:
    h = load_instance(args.instance)
    pool = SamplePool.from_csv(args.samples, h)
    parts = [p for p in args.bracket.split(",") if p.strip()]
    if len(parts) != 2:
        raise ValueError("--bracket must be 'lo,hi'")
    lo, hi = float(parts[0]), float(parts[1])
    if args.unit == "temperature":
        if not 0 < lo < hi:
            raise ValueError("temperature bracket needs 0 < lo < hi")
        beta_bracket = (1.0 / hi, 1.0 / lo)
    else:
        beta_bracket = (lo, hi)

    mu_bar = pool.multiplicities / pool.total_samples
    empirical = float(np.dot(mu_bar, pool.energies))

    cache: dict[float, float] = {}

    def energy_at(beta: float) -> float:
        if beta not in cache:
            try:
                cache[beta] = transfer_matrix(h, beta).mean_energy
            except ValueError:
                cache[beta] = enumerate_boltzmann(
                    h, beta, observables=False
                ).mean_energy
        return cache[beta]

    fit = fit_effective_temperature(empirical, energy_at, beta_bracket)
    record = {
        "schema": FIT_SCHEMA,
        "samples": args.samples,
        "instance": args.instance,
        "total_samples": pool.total_samples,
        "distinct_states": pool.distinct_count,
        "empirical_mean_energy": empirical,
        "beta_eff": fit.beta_eff,
        "t_eff": fit.t_eff,
        "residual": fit.residual,
        "bracket_beta": [fit.bracket[0], fit.bracket[1]],
        "saturated": fit.saturated,
    }
    text = json.dumps(record, indent=2)
    print(text)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "fit.json")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return 0


def cmd_throughput(args) -> int:
    h = load_instance(args.instance)
    rep = throughput_benchmark(h, duration_seconds=args.seconds, seed=args.seed)
    rep["n_terms"] = h.n_terms
    text = json.dumps(rep, indent=2)
    print(text)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "throughput.json"), "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return 0


# ----------------------------------------------------------------------
# parser and entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coldspin",
        description="Low-temperature Boltzmann sampling laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a seeded instance file")
    g.add_argument("--kind", required=True, help="chain, glass, or three_body")
    g.add_argument("--n", type=int, required=True, help="number of spins")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True, help="output instance JSON path")
    g.add_argument("--e0", type=float, default=1.0, help="glass coupling scale")
    g.add_argument("--pairs", type=int, default=None, help="three_body pair count")
    g.add_argument("--triples", type=int, default=None, help="three_body triple count")
    g.add_argument("--open-boundary", action="store_true", help="chain without wrap bond")
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("exact", help="exact thermodynamics over a grid")
    e.add_argument("--instance", required=True)
    e.add_argument("--temperatures", default=None, help="comma-separated list")
    e.add_argument("--betas", default=None, help="comma-separated list")
    e.add_argument(
        "--method", default="auto", choices=["auto", "transfer_matrix", "enumeration"]
    )
    e.add_argument("--out", required=True, help="output directory")
    e.set_defaults(func=cmd_exact)

    r = sub.add_parser("run", help="execute an experiment config")
    r.add_argument("--config", required=True, help="experiment JSON path")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--seed", type=int, default=None, help="override the config seed")
    r.add_argument(
        "--threads", type=int, default=1,
        help="worker hint; methods currently execute sequentially",
    )
    r.set_defaults(func=cmd_run)

    f = sub.add_parser("fit-temp", help="effective temperature of a pool CSV")
    f.add_argument("--samples", required=True, help="pool CSV path")
    f.add_argument("--instance", required=True)
    f.add_argument("--bracket", required=True, help="'lo,hi' fit bracket")
    f.add_argument("--unit", default="beta", choices=["beta", "temperature"])
    f.add_argument("--out", default=None, help="also write fit.json here")
    f.set_defaults(func=cmd_fit_temp)

    t = sub.add_parser("throughput", help="Metropolis update-rate benchmark")
    t.add_argument("--instance", required=True)
    t.add_argument("--seconds", type=float, default=2.0)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", default=None, help="also write throughput.json here")
    t.set_defaults(func=cmd_throughput)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
