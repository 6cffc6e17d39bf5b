"""
Model runners and concurrent execution of OAT designs

Subprocess protocol, one invocation per run:
    stdin : {"run": <index>, "factors": {"<param id>": <number>, ...}}
    stdout: {"metrics": {"<metric name>": <number>, ...}}
Exit code 0 means ok; anything else marks the run failed.
"""

import json
import logging
import math
import os
import shlex
import subprocess
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Protocol

from src.errors import ExpressionError, RunnerProtocolError, RunnerSpawnError
from src.expressions import Expr, evaluate, factor_identifier, parse_expression
from src.screening import OatDesign, Run

logger = logging.getLogger(__name__)

BUILTIN_LINEAR_PREFIX = "builtin:linear:"
SEED_ENV_VAR = "HTD_RUN_SEED"


@dataclass(frozen=True)
class RunOutcome:
    metrics: Mapping[str, float] | None
    diagnostics: str = ""

    @property
    def ok(self) -> bool:
        return self.metrics is not None


class ModelRunner(Protocol):
    def run(self, index: int, factors: Mapping[str, float], metrics: Sequence[str]) -> RunOutcome: ...


def encode_request(index: int, factors: Mapping[str, float]) -> str:
    return json.dumps({"run": index, "factors": {k: float(v) for k, v in factors.items()}})


def decode_response(text: str, metrics: Sequence[str]) -> dict[str, float]:
    """
    Parse a runner's standard output strictly

    Raises:
        RunnerProtocolError: On anything but one JSON line carrying exactly the expected metrics
    """
    lines = [line for line in text.splitlines() if line.strip()]
    if len(lines) != 1:
        raise RunnerProtocolError(f"expected one output line, got {len(lines)}")
    try:
        payload = json.loads(lines[0])
    except json.JSONDecodeError as err:
        raise RunnerProtocolError(f"invalid JSON: {err}") from err
    if not isinstance(payload, dict) or set(payload) != {"metrics"}:
        raise RunnerProtocolError('response must be an object with the single key "metrics"')
    values = payload["metrics"]
    if not isinstance(values, dict):
        raise RunnerProtocolError('"metrics" must be an object')
    if set(values) != set(metrics):
        missing = sorted(set(metrics) - set(values))
        extra = sorted(set(values) - set(metrics))
        raise RunnerProtocolError(f"metric mismatch (missing {missing}, unexpected {extra})")
    result = {}
    for name in metrics:
        value = values[name]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise RunnerProtocolError(f"metric {name!r} is not a number: {value!r}")
        try:
            number = float(value)
        except OverflowError as err:
            raise RunnerProtocolError(f"metric {name!r} does not fit a double") from err
        if not math.isfinite(number):
            raise RunnerProtocolError(f"metric {name!r} is not a finite number: {value!r}")
        result[name] = number
    return result


class SubprocessRunner:
    """Runs an external executable once per design run"""

    def __init__(self, command: Sequence[str], timeout: float = 60.0, seed: int | None = None):
        self.command = list(command)
        self.timeout = timeout
        self.seed = seed

    def run(self, index: int, factors: Mapping[str, float], metrics: Sequence[str]) -> RunOutcome:
        env = dict(os.environ)
        if self.seed is not None:
            env[SEED_ENV_VAR] = str(self.seed + index)
        try:
            completed = subprocess.run(
                self.command,
                input=encode_request(index, factors) + "\n",
                capture_output=True,
                text=True,
                timeout=self.timeout,
                env=env,
            )
        except (FileNotFoundError, PermissionError) as err:
            raise RunnerSpawnError(f"cannot start runner {self.command[0]!r}: {err}") from err
        except subprocess.TimeoutExpired:
            return RunOutcome(None, f"timed out after {self.timeout:g} s")
        if completed.returncode != 0:
            tail = completed.stderr.strip().splitlines()[-1:] or [""]
            return RunOutcome(None, f"exit code {completed.returncode}: {tail[0]}")
        try:
            return RunOutcome(decode_response(completed.stdout, metrics))
        except RunnerProtocolError as err:
            return RunOutcome(None, f"RunnerProtocolError: {err}")


class ExpressionRunner:
    """In-process runner evaluating one expression per metric (no external process)"""

    def __init__(self, formulas: Mapping[str, Expr]):
        self.formulas = dict(formulas)

    @classmethod
    def from_spec(cls, spec: str) -> "ExpressionRunner":
        """Parse 'metric=expr;metric=expr' (identifiers are factor_identifier(param id))"""
        formulas = {}
        for part in spec.split(";"):
            if not part.strip():
                continue
            name, sep, text = part.partition("=")
            if not sep or not name.strip():
                raise ValueError(f"builtin runner term must look like metric=expression: {part!r}")
            formulas[name.strip()] = parse_expression(text)
        if not formulas:
            raise ValueError("builtin runner needs at least one metric=expression term")
        return cls(formulas)

    def run(self, index: int, factors: Mapping[str, float], metrics: Sequence[str]) -> RunOutcome:
        if set(self.formulas) != set(metrics):
            return RunOutcome(
                None,
                f"RunnerProtocolError: builtin runner defines {sorted(self.formulas)}, design needs {sorted(metrics)}",
            )
        env = {factor_identifier(k): float(v) for k, v in factors.items()}
        try:
            return RunOutcome({name: evaluate(self.formulas[name], env) for name in metrics})
        except ExpressionError as err:
            return RunOutcome(None, str(err))


def make_runner(spec: str, timeout: float = 60.0, seed: int | None = None) -> ModelRunner:
    """Builtin expression runner for 'builtin:linear:<spec>', otherwise a command line"""
    if spec.startswith(BUILTIN_LINEAR_PREFIX):
        return ExpressionRunner.from_spec(spec[len(BUILTIN_LINEAR_PREFIX):])
    command = shlex.split(spec)
    if not command:
        raise ValueError("empty runner command")
    return SubprocessRunner(command, timeout=timeout, seed=seed)


def _execute(run: Run, runner: ModelRunner, metrics: Sequence[str]) -> Run:
    outcome = runner.run(run.index, run.assignment, metrics)
    if outcome.ok:
        return replace(run, result=dict(outcome.metrics), status="ok", diagnostics="")
    logger.warning("run %d failed: %s", run.index, outcome.diagnostics)
    return replace(run, result=None, status="failed", diagnostics=outcome.diagnostics)


def execute_design(design: OatDesign, runner: ModelRunner, parallelism: int = 1) -> OatDesign:
    """
    Execute every run exactly once, up to `parallelism` at a time

    Returns:
        OatDesign: Runs filled in run-index order whatever the completion order

    Raises:
        RunnerSpawnError: If the runner executable cannot be started
    """
    if parallelism < 1:
        raise ValueError("parallelism must be at least 1")
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        futures = [pool.submit(_execute, run, runner, design.metrics) for run in design.runs]
        finished = [future.result() for future in futures]
    logger.info(
        "executed %d runs (%d failed) with parallelism %d",
        len(finished),
        sum(run.status == "failed" for run in finished),
        parallelism,
    )
    return design.with_runs(finished)
