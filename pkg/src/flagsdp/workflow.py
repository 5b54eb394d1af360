"""High-level optimize / export / verify entry points shared by the API and the CLI."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import certfile
from .constructions import BlowupTemplate, Construction, blowup_vector
from .errors import VerificationError
from .rounding import ExactCertificate, RoundingSettings, round_solution, verify
from .sdp import MAXIMIZE, MINIMIZE, NumericSolution, SdpProblem, assemble, describe_bound, export_sdpa, solve_external, solve_numeric

log = logging.getLogger(__name__)


@dataclass
class OptimizationResult:
    problem: SdpProblem
    solution: NumericSolution
    numeric_bound: float
    exact_bound: Fraction | None = None
    certificate: ExactCertificate | None = None
    certificate_path: Path | None = None
    construction_value: Fraction | None = None
    seconds: float = 0.0

    @property
    def bound(self):
        return self.exact_bound if self.exact_bound is not None else self.numeric_bound

    def report(self) -> str:
        lines = [f"numeric bound: {self.numeric_bound:.12g}"]
        if self.exact_bound is not None:
            lines.append(f"exact bound: {describe_bound(self.exact_bound)}")
        if self.construction_value is not None:
            lines.append(f"construction value: {describe_bound(self.construction_value)}")
        if self.certificate_path is not None:
            lines.append(f"certificate: {self.certificate_path}")
        return "\n".join(lines)


def _template(construction) -> BlowupTemplate | None:
    if construction is None or isinstance(construction, BlowupTemplate):
        return construction
    if isinstance(construction, Construction):
        return construction.template
    raise TypeError(f"construction must be a blow-up template, got {type(construction).__name__}")


def optimize(
    theory,
    target,
    n: int,
    maximize: bool = True,
    positives=(),
    exact: bool = False,
    denom: int = 1024,
    slack_threshold=Fraction(1, 10**6),
    kernel_denom: int = 2**20,
    construction=None,
    file=None,
    solver: str | None = None,
    timeout: float | None = None,
) -> OptimizationResult:
    """Bound ``target`` over the theory using flags on ``n`` vertices.

    With ``exact`` (or a certificate ``file``) the numeric solution is rounded
    to a rational certificate, verified, and optionally written out.
    """
    start = time.perf_counter()
    sense = MAXIMIZE if maximize else MINIMIZE
    template = _template(construction)
    p = assemble(theory, target, n, sense, positives)
    if solver:
        sol = solve_external(p, solver, timeout=timeout)
    else:
        sol = solve_numeric(p)
    log.info("numeric bound %.12g", sol.bound)
    result = OptimizationResult(p, sol, sol.bound)
    if template is not None:
        result.construction_value = p.target.evaluate(blowup_vector(template, p.n))
    if exact or file is not None:
        settings = RoundingSettings(denom=denom, slack_threshold=Fraction(slack_threshold), kernel_denom=kernel_denom)
        cert = round_solution(p, sol, settings, template)
        result.exact_bound = verify(cert, theory)
        result.certificate = cert
        if file is not None:
            result.certificate_path = certfile.write(cert, file)
    result.seconds = time.perf_counter() - start
    return result


def export_problem(theory, target, n: int, file, maximize: bool = True, positives=()) -> Path:
    p = assemble(theory, target, n, MAXIMIZE if maximize else MINIMIZE, positives)
    path = Path(file)
    if path.suffix != ".dat-s":
        path = path.with_name(path.name + ".dat-s")
    export_sdpa(p, path)
    return path


def external_optimize(theory, target, n: int, file, maximize: bool = True, positives=(), solver: str | None = None, **kwargs):
    """Write the SDPA file; with ``solver`` also run it and return the optimization result."""
    if solver is None:
        return export_problem(theory, target, n, file, maximize, positives)
    return optimize(theory, target, n, maximize=maximize, positives=positives, solver=solver, **kwargs)


def verify_file(theory, file) -> Fraction:
    cert = certfile.read(file)
    return verify(cert, theory)


def verify_certificate(cert: ExactCertificate, theory) -> Fraction:
    if not isinstance(cert, ExactCertificate):
        raise VerificationError("not a certificate")
    return verify(cert, theory)
