"""Command-line entry points: run a sampler, verify exactness, compare methods.

Experiments are described by JSON config files. Outputs are written as CSV
and JSON with full-precision floats so that reruns with the same config and
seed produce byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from contextlib import ExitStack
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .baselines import BaselineConfig, SelectionRule, best_of_n, smc, svdd
from .core import Sequence, Vocabulary, chain_rng, linear_schedule
from .csmc_sampler import CsmcConfig, run_batched
from .denoiser import (
    CountingDenoiser,
    DataDistribution,
    Denoiser,
    FactorizedDenoiser,
    OracleDenoiser,
)
from .diagnostics import (
    autocorrelation,
    diversity,
    reward_summary,
    write_acf_csv,
    write_summary_csv,
)
from .exact_engine import EnumeratedSpace, verify_fixture
from .forward_process import ModelKind, TransitionModel
from .rewards import (
    ExternalRewardClient,
    GatedBracketReward,
    PatternReward,
    RewardEvaluationError,
    RewardFn,
    RewardTransportError,
    TokenCountReward,
    evaluate_reward,
)
from .reverse_sampler import generate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_VERIFY = 4

TIMEOUT_ENV_VAR = "CSMC_REWARD_TIMEOUT_SECS"


class ConfigError(Exception):
    """Bad config file: unparseable, missing keys, or invalid values."""


class VerificationFailure(Exception):
    """An exactness check exceeded its tolerance."""


def load_config(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return cfg


def _need(cfg: dict[str, Any], key: str, where: str) -> Any:
    if key not in cfg:
        raise ConfigError(f"missing key '{where}.{key}'")
    return cfg[key]


def build_model(cfg: dict[str, Any]) -> TransitionModel:
    model_cfg = _need(cfg, "model", "")
    kind_name = _need(model_cfg, "kind", "model")
    try:
        kind = ModelKind(kind_name)
    except ValueError as exc:
        raise ConfigError(f"model.kind must be 'masked' or 'uniform', got {kind_name!r}") from exc
    size = _need(model_cfg, "vocab_size", "model")
    num_steps = _need(model_cfg, "num_steps", "model")
    glyphs_cfg = model_cfg.get("glyphs")
    glyphs = tuple(glyphs_cfg) if glyphs_cfg is not None else None
    try:
        vocab = Vocabulary(
            size=size,
            mask_index=size if kind is ModelKind.MASKED else None,
            glyphs=glyphs,
        )
        return TransitionModel(kind=kind, schedule=linear_schedule(num_steps), vocab=vocab)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad model block: {exc}") from exc


def build_data(cfg: dict[str, Any], base_dir: Path) -> DataDistribution:
    data_cfg = _need(cfg, "data", "")
    try:
        if "file" in data_cfg:
            return DataDistribution.from_file(base_dir / data_cfg["file"])
        if "table" in data_cfg:
            rows = data_cfg["table"]
            support = tuple(Sequence(tuple(row["tokens"])) for row in rows)
            probs = np.asarray([row["prob"] for row in rows], dtype=np.float64)
            return DataDistribution(support, probs)
    except (ValueError, TypeError, KeyError, OSError) as exc:
        raise ConfigError(f"bad data block: {exc}") from exc
    raise ConfigError("data block needs either 'file' or 'table'")


def build_denoiser(cfg: dict[str, Any], data: DataDistribution, model: TransitionModel) -> Denoiser:
    name = cfg.get("denoiser", "oracle")
    try:
        if name == "oracle":
            return OracleDenoiser(data, model)
        if name == "factorized":
            return FactorizedDenoiser(data, model)
    except ValueError as exc:
        raise ConfigError(f"bad denoiser/data combination: {exc}") from exc
    raise ConfigError(f"denoiser must be 'oracle' or 'factorized', got {name!r}")


def build_reward(cfg: dict[str, Any], vocab: Vocabulary, stack: ExitStack) -> RewardFn:
    reward_cfg = _need(cfg, "reward", "")
    kind = _need(reward_cfg, "kind", "reward")
    try:
        if kind == "token_count":
            return TokenCountReward(target=_need(reward_cfg, "target", "reward"))
        if kind == "gated_bracket":
            return GatedBracketReward(
                open_token=_need(reward_cfg, "open", "reward"),
                close_token=_need(reward_cfg, "close", "reward"),
            )
        if kind == "pattern":
            return PatternReward(pattern=tuple(_need(reward_cfg, "pattern", "reward")))
        if kind == "external":
            timeout = reward_cfg.get("timeout_secs", 30.0)
            env_timeout = os.environ.get(TIMEOUT_ENV_VAR)
            if env_timeout is not None:
                try:
                    timeout = float(env_timeout)
                except ValueError as exc:
                    raise ConfigError(f"{TIMEOUT_ENV_VAR} must be a number, got {env_timeout!r}") from exc
            client = ExternalRewardClient(
                command=_need(reward_cfg, "command", "reward"),
                vocab=vocab,
                timeout_secs=timeout,
            )
            return stack.enter_context(client)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad reward block: {exc}") from exc
    raise ConfigError(f"unknown reward kind {kind!r}")


@dataclass
class MethodOutput:
    """Samples plus accounting from running one method block."""

    name: str
    samples: list[Sequence]
    sample_rewards: list[float]
    denoiser_calls: int
    reward_calls: int
    acceptance: float | None = None
    degenerate_steps: int | None = None
    acf: np.ndarray | None = None


def _selection_rule(method_cfg: dict[str, Any]) -> SelectionRule:
    name = method_cfg.get("selection_rule", "exponential")
    try:
        return SelectionRule(name)
    except ValueError as exc:
        raise ConfigError(
            f"selection_rule must be 'exponential' or 'proportional', got {name!r}"
        ) from exc


def run_method(
    method_cfg: dict[str, Any],
    model: TransitionModel,
    denoiser: Denoiser,
    reward: RewardFn,
    seed: int,
    parallel: bool = False,
) -> MethodOutput:
    name = _need(method_cfg, "name", "method")
    num_samples = _need(method_cfg, "num_samples", "method")
    if not isinstance(num_samples, int) or num_samples < 1:
        raise ConfigError(f"method.num_samples must be a positive integer, got {num_samples!r}")
    rng = chain_rng(seed, 0)

    if name == "pretrained":
        counting = CountingDenoiser(denoiser)
        samples = [generate(model, counting, rng) for _ in range(num_samples)]
        rewards = [evaluate_reward(reward, s) for s in samples]
        return MethodOutput(name, samples, rewards, counting.calls, num_samples)

    if name == "bon":
        config = _baseline_config(method_cfg)
        samples: list[Sequence] = []
        rewards: list[float] = []
        denoiser_calls = 0
        reward_calls = 0
        for _ in range(num_samples):
            result = best_of_n(config, model, denoiser, reward, rng)
            samples.append(result.sequence)
            rewards.append(result.reward)
            denoiser_calls += result.denoiser_calls
            reward_calls += result.reward_calls
        return MethodOutput(name, samples, rewards, denoiser_calls, reward_calls)

    if name == "smc":
        config = _baseline_config(method_cfg)
        if num_samples > config.n:
            raise ConfigError(
                f"smc cannot return {num_samples} samples from {config.n} particles"
            )
        result = smc(config, model, denoiser, reward, rng)
        samples = list(result.particles[:num_samples])
        rewards = [evaluate_reward(reward, s) for s in samples]
        return MethodOutput(
            name,
            samples,
            rewards,
            result.denoiser_calls,
            result.reward_calls + num_samples,
            degenerate_steps=result.degenerate_steps,
        )

    if name == "svdd":
        config = _baseline_config(method_cfg)
        samples = []
        rewards = []
        denoiser_calls = 0
        reward_calls = 0
        degenerate = 0
        for _ in range(num_samples):
            result = svdd(config, model, denoiser, reward, rng)
            samples.append(result.sequence)
            rewards.append(evaluate_reward(reward, result.sequence))
            denoiser_calls += result.denoiser_calls
            reward_calls += result.reward_calls + 1
            degenerate += result.degenerate_steps
        return MethodOutput(
            name, samples, rewards, denoiser_calls, reward_calls, degenerate_steps=degenerate
        )

    if name in ("csmc", "csmc_b"):
        config = _csmc_config(method_cfg, seed, batched=name == "csmc_b")
        batch = run_batched(config, model, denoiser, reward, parallel=parallel)
        samples = list(batch.samples)
        rewards = [evaluate_reward(reward, s) for s in samples]
        accepted = sum(sum(p.accepted for p in c.proposals) for c in batch.chains)
        proposals = max(1, sum(len(c.proposals) for c in batch.chains))
        max_lag = method_cfg.get("acf_max_lag", 2000)
        trajectory = batch.chains[0].rewards
        acf = autocorrelation(trajectory, min(max_lag, trajectory.shape[0] - 1))
        return MethodOutput(
            name,
            samples,
            rewards,
            batch.denoiser_calls,
            batch.reward_calls + len(samples),
            acceptance=accepted / proposals,
            acf=acf,
        )

    raise ConfigError(f"unknown method {name!r}")


def _baseline_config(method_cfg: dict[str, Any]) -> BaselineConfig:
    try:
        return BaselineConfig(
            n=_need(method_cfg, "n", "method"),
            beta=method_cfg.get("beta", 0.02),
            selection_rule=_selection_rule(method_cfg),
        )
    except ValueError as exc:
        raise ConfigError(f"bad method block: {exc}") from exc


def _csmc_config(method_cfg: dict[str, Any], seed: int, batched: bool = False) -> CsmcConfig:
    try:
        return CsmcConfig(
            beta=method_cfg.get("beta", 0.02),
            iterations=_need(method_cfg, "iterations", "method"),
            num_samples=_need(method_cfg, "num_samples", "method"),
            t_lo=method_cfg.get("t_lo", 0.2),
            t_hi=method_cfg.get("t_hi", 0.5),
            num_jumps=method_cfg.get("num_jumps", 5),
            burn_in_fraction=method_cfg.get("burn_in_fraction", 0.5),
            num_chains=method_cfg.get("num_chains", 8 if batched else 1),
            seed=seed,
        )
    except ValueError as exc:
        raise ConfigError(f"bad method block: {exc}") from exc


def write_samples_csv(
    path: Path, vocab: Vocabulary, samples: list[Sequence], rewards: list[float]
) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "text", "tokens", "reward"])
        for i, (seq, r) in enumerate(zip(samples, rewards)):
            writer.writerow(
                [i, vocab.decode(seq.tokens), " ".join(str(t) for t in seq.tokens), repr(float(r))]
            )


def _metrics_dict(cfg: dict[str, Any], seed: int, output: MethodOutput) -> dict[str, Any]:
    stats = reward_summary(output.sample_rewards)
    per_sample = output.denoiser_calls / len(output.samples)
    return {
        "method": output.name,
        "seed": seed,
        "num_samples": stats.count,
        "mean_reward": stats.mean,
        "reward_std": stats.std,
        "reward_ci95_halfwidth": stats.ci95_halfwidth,
        "diversity": diversity(output.samples),
        "acceptance_rate": output.acceptance,
        "degenerate_steps": output.degenerate_steps,
        "nfe": {
            "denoiser_calls": output.denoiser_calls,
            "denoiser_calls_per_sample": per_sample,
            "reward_calls": output.reward_calls,
        },
        "config": cfg,
    }


def _resolve_out_dir(cfg: dict[str, Any], args: argparse.Namespace) -> Path:
    out = args.out or cfg.get("output_dir") or "csmc_out"
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    base_dir = Path(args.config).resolve().parent
    out_dir = _resolve_out_dir(cfg, args)
    model = build_model(cfg)
    data = build_data(cfg, base_dir)
    denoiser = build_denoiser(cfg, data, model)
    seed = cfg.get("seed", 0) if args.seed is None else args.seed
    method_cfg = _need(cfg, "method", "")
    with ExitStack() as stack:
        reward = build_reward(cfg, model.vocab, stack)
        output = run_method(method_cfg, model, denoiser, reward, seed, parallel=args.parallel)
    write_samples_csv(out_dir / "samples.csv", model.vocab, output.samples, output.sample_rewards)
    metrics = _metrics_dict(cfg, seed, output)
    (out_dir / "metrics.json").write_text(json.dumps(metrics, sort_keys=True, indent=2) + "\n")
    flat = {
        key: value
        for key, value in metrics.items()
        if isinstance(value, (int, float)) or value is None
    }
    flat.update(
        {
            "nfe_denoiser_calls": metrics["nfe"]["denoiser_calls"],
            "nfe_denoiser_calls_per_sample": metrics["nfe"]["denoiser_calls_per_sample"],
            "nfe_reward_calls": metrics["nfe"]["reward_calls"],
        }
    )
    flat.pop("seed", None)
    write_summary_csv(out_dir / "summary.csv", flat)
    if output.acf is not None:
        write_acf_csv(out_dir / "acf.csv", output.acf)
    print(
        f"{output.name}: mean reward {metrics['mean_reward']:.6f} over "
        f"{metrics['num_samples']} samples -> {out_dir}"
    )
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    base_dir = Path(args.config).resolve().parent
    out_dir = _resolve_out_dir(cfg, args)
    model = build_model(cfg)
    data = build_data(cfg, base_dir)
    if cfg.get("denoiser", "oracle") != "oracle":
        raise ConfigError("verify requires the oracle denoiser")
    denoiser = OracleDenoiser(data, model)
    method_cfg = dict(_need(cfg, "method", ""))
    method_cfg.setdefault("iterations", 1)
    method_cfg.setdefault("num_samples", 1)
    config = _csmc_config(method_cfg, cfg.get("seed", 0))
    try:
        space = EnumeratedSpace.build(model.vocab, data.length)
    except ValueError as exc:
        raise ConfigError(f"state space too large to verify: {exc}") from exc
    with ExitStack() as stack:
        reward = build_reward(cfg, model.vocab, stack)
        report, arrays = verify_fixture(space, model, denoiser, reward, config)
    tolerances = cfg.get("tolerances", {})
    stationarity_tol = tolerances.get("stationarity", 1e-8)
    reversibility_tol = tolerances.get("reversibility", 1e-9)
    power_tv_tol = tolerances.get("power_iteration_tv", 1e-6)
    lines = {
        "num_states": report.num_states,
        "stationarity_residual": report.stationarity,
        "reversibility_residual": report.reversibility,
        "power_iteration_tv": report.power_iteration_tv,
        "proposal_row_sum_error": report.proposal_row_sum_error,
        "mh_row_sum_error": report.mh_row_sum_error,
    }
    for key, value in lines.items():
        print(f"{key}: {value}")
    passed = report.passes(stationarity_tol, reversibility_tol, power_tv_tol)
    payload = dict(lines)
    payload.update(
        {
            "passed": passed,
            "tolerances": {
                "stationarity": stationarity_tol,
                "reversibility": reversibility_tol,
                "power_iteration_tv": power_tv_tol,
            },
            "config": cfg,
        }
    )
    (out_dir / "verify.json").write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    for name, arr in arrays.items():
        np.savetxt(out_dir / f"{name}.csv", np.atleast_2d(arr), delimiter=",")
    if not passed:
        raise VerificationFailure(
            f"stationarity {report.stationarity:.3e} (tol {stationarity_tol:.0e}), "
            f"reversibility {report.reversibility:.3e} (tol {reversibility_tol:.0e}), "
            f"power-iteration TV {report.power_iteration_tv:.3e} (tol {power_tv_tol:.0e})"
        )
    print("verification passed")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    base_dir = Path(args.config).resolve().parent
    out_dir = _resolve_out_dir(cfg, args)
    model = build_model(cfg)
    data = build_data(cfg, base_dir)
    denoiser = build_denoiser(cfg, data, model)
    seeds = cfg.get("seeds", [cfg.get("seed", 0)])
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) for s in seeds):
        raise ConfigError("seeds must be a nonempty list of integers")
    methods = _need(cfg, "methods", "")
    if not isinstance(methods, list) or not methods:
        raise ConfigError("methods must be a nonempty list of method blocks")
    rows: list[list[Any]] = []
    with ExitStack() as stack:
        reward = build_reward(cfg, model.vocab, stack)
        for method_cfg in methods:
            label = method_cfg.get("label", _need(method_cfg, "name", "methods[]"))
            for seed in seeds:
                output = run_method(method_cfg, model, denoiser, reward, seed, args.parallel)
                stats = reward_summary(output.sample_rewards)
                rows.append(
                    [
                        label,
                        seed,
                        stats.count,
                        repr(stats.mean),
                        repr(stats.ci95_halfwidth),
                        repr(diversity(output.samples)),
                        "" if output.acceptance is None else repr(output.acceptance),
                        output.denoiser_calls,
                        repr(output.denoiser_calls / stats.count),
                    ]
                )
    table_path = out_dir / "compare.csv"
    with open(table_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "method",
                "seed",
                "num_samples",
                "mean_reward",
                "ci95_halfwidth",
                "diversity",
                "acceptance_rate",
                "denoiser_calls",
                "denoiser_calls_per_sample",
            ]
        )
        writer.writerows(rows)
    print(f"wrote {table_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="csmc",
        description="Reward-guided discrete diffusion sampling and exact verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("run", cmd_run), ("verify", cmd_verify), ("compare", cmd_compare)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to a JSON experiment config")
        p.add_argument("--out", default=None, help="output directory (default from config)")
        p.add_argument(
            "--parallel", action="store_true", help="run batched chains in worker threads"
        )
        if name == "run":
            p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.set_defaults(fn=fn)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except VerificationFailure as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (RewardTransportError, RewardEvaluationError, RuntimeError, ValueError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
