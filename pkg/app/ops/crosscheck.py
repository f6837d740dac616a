"""Cross-validation of self-compatibility verdicts.

Runs several independent methods on one channel and checks they tell the
same story. Rules:
1. Exact methods (closed-form, sdp) must agree; verdicts inside the boundary
   band are left out of the comparison.
2. The entropic method is necessary only: "incompatible" refutes, anything
   else is inconclusive. A refutation of a channel an exact method finds
   self-compatible is a disagreement.
3. Ambiguous solver outcomes are reported but never counted as agreement.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from app.config import DEFAULT_SOLVER, DEFAULT_TOLERANCES, SolverConfig, Tolerances
from app.criteria.analytic import BOUNDARY_BAND, qubit_self_compatible_margin
from app.criteria.entropy import ENTROPIC_BAND, self_compat_entropic
from app.quantum.choi import KrausChannel, PurifiedMargin, choi_state
from app.sdp.marginal import AMBIGUOUS, FEASIBLE, symmetric_extension

logger = logging.getLogger(__name__)

METHODS = ("closed-form", "sdp", "entropic")

COMPATIBLE = "compatible"
INCOMPATIBLE = "incompatible"
BOUNDARY = "boundary"
INCONCLUSIVE = "inconclusive"
UNDECIDED = "ambiguous"


@dataclass
class MethodVerdict:
    """Verdict of a single method."""

    method: str
    verdict: str
    value: Optional[float] = None
    exact: bool = True
    message: str = ""


@dataclass
class CrossCheckReport:
    """Verdicts of all methods and whether they agree."""

    status: str = "agree"  # agree, disagree
    verdicts: list[MethodVerdict] = field(default_factory=list)
    conflicts: list[str] = field(default_factory=list)

    def add(self, verdict: MethodVerdict):
        """Add a method verdict to the report."""
        self.verdicts.append(verdict)

    @property
    def self_compatible(self) -> Optional[bool]:
        """Consensus answer, or None when nothing decisive was found or methods conflict."""
        if self.status == "disagree":
            return None
        decided = [v.verdict for v in self.verdicts if v.verdict in (COMPATIBLE, INCOMPATIBLE)]
        if not decided:
            return None
        return decided[0] == COMPATIBLE

    def to_json(self) -> dict:
        """Convert to JSON-serializable dict."""
        return {
            "status": self.status,
            "self_compatible": self.self_compatible,
            "methods": [
                {
                    "method": v.method,
                    "verdict": v.verdict,
                    "value": v.value if v.value is not None and math.isfinite(v.value) else None,
                    "exact": v.exact,
                }
                for v in self.verdicts
            ],
            "conflicts": list(self.conflicts),
        }


def check_closed_form(
    phi: KrausChannel, margin: PurifiedMargin, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> MethodVerdict:
    """Closed-form qubit criterion; not applicable outside qubit channels."""
    if (phi.d_in, phi.d_out) != (2, 2):
        return MethodVerdict("closed-form", UNDECIDED, message="closed form needs a qubit channel")
    value = qubit_self_compatible_margin(phi, margin.rho_A, tolerances)
    if abs(value) <= BOUNDARY_BAND:
        verdict = BOUNDARY
    else:
        verdict = COMPATIBLE if value > 0 else INCOMPATIBLE
    return MethodVerdict("closed-form", verdict, value)


def check_sdp(
    phi: KrausChannel,
    margin: PurifiedMargin,
    n: int = 2,
    config: SolverConfig = DEFAULT_SOLVER,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> MethodVerdict:
    """Symmetric extendibility of the Choi state; value is the noise weight t."""
    state = choi_state(phi, margin, tolerances).state
    result = symmetric_extension(state, n, config)
    if result.status == AMBIGUOUS:
        return MethodVerdict("sdp", UNDECIDED, result.t, message=result.diagnostics)
    verdict = COMPATIBLE if result.status == FEASIBLE else INCOMPATIBLE
    return MethodVerdict("sdp", verdict, result.t)


def check_entropic(
    phi: KrausChannel, margin: PurifiedMargin, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> MethodVerdict:
    """Smaller of the two entropic self-compatibility witnesses."""
    value = min(self_compat_entropic(phi, margin, tolerances))
    verdict = INCOMPATIBLE if value < -ENTROPIC_BAND else INCONCLUSIVE
    return MethodVerdict("entropic", verdict, value, exact=False)


def check_self_compatibility(
    phi: KrausChannel,
    margin: PurifiedMargin,
    methods: Sequence[str] = METHODS,
    n: int = 2,
    config: SolverConfig = DEFAULT_SOLVER,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> CrossCheckReport:
    """Run the requested methods on ``phi`` and compare their verdicts.

    Args:
        phi: Channel to test
        margin: Purified input margin
        methods: Any of "closed-form", "sdp", "entropic"
        n: Number of copies (closed form and entropic only cover n = 2)

    Returns:
        Cross-check report
    """
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ValueError(f"Unknown methods {unknown}; choose from {list(METHODS)}")

    report = CrossCheckReport()
    for method in methods:
        if method == "closed-form":
            if n != 2:
                report.add(MethodVerdict(method, UNDECIDED, message="closed form covers n = 2 only"))
                continue
            report.add(check_closed_form(phi, margin, tolerances))
        elif method == "sdp":
            report.add(check_sdp(phi, margin, n, config, tolerances))
        else:
            report.add(check_entropic(phi, margin, tolerances))

    exact = {v.method: v.verdict for v in report.verdicts if v.exact and v.verdict in (COMPATIBLE, INCOMPATIBLE)}
    if len(set(exact.values())) > 1:
        report.conflicts.append(f"exact methods disagree: {exact}")
    refuted = any(v.verdict == INCOMPATIBLE for v in report.verdicts if not v.exact)
    if refuted and COMPATIBLE in exact.values():
        report.conflicts.append("entropic witness refutes a channel an exact method finds self-compatible")

    if report.conflicts:
        report.status = "disagree"
        for conflict in report.conflicts:
            logger.error(f"Cross-check conflict: {conflict}")
    else:
        logger.info(f"Cross-check agreed across {len(report.verdicts)} methods")

    return report
