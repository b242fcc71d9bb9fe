"""Report and CSV writers with deterministic number formatting."""

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, List, Sequence, Union

logger = logging.getLogger(__name__)


def format_value(value: Any) -> str:
    """17 significant digits for floats, ``str`` for everything else."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float) or hasattr(value, "dtype"):
        return f"{float(value):.17g}"
    if isinstance(value, (tuple, list)):
        return " ".join(format_value(v) for v in value)
    return str(value)


def write_csv(
    path: Union[str, Path],
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
) -> Path:
    """Write a header row and formatted data rows.

    Args:
        path: Output file
        header: Column names
        rows: Data rows

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
            count += 1
    logger.debug(f"Wrote {count} rows to {path}")
    return path


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ExperimentReport:
    """Lines of report.txt: values, verdicts and CHECK lines."""

    title: str
    lines: List[str] = field(default_factory=list)
    checks: List[CheckResult] = field(default_factory=list)

    def section(self, name: str) -> None:
        self.lines.append("")
        self.lines.append(f"[{name}]")

    def value(self, name: str, value: Any) -> None:
        self.lines.append(f"{name} = {format_value(value)}")

    def check(self, name: str, passed: bool, detail: str = "") -> bool:
        result = CheckResult(name, bool(passed), detail)
        self.checks.append(result)
        suffix = f" ({detail})" if detail else ""
        self.lines.append(f"CHECK {name}: {'PASS' if result.passed else 'FAIL'}{suffix}")
        if not result.passed:
            logger.warning(f"Check failed: {name}{suffix}")
        return result.passed

    @property
    def failed_checks(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    @property
    def all_passed(self) -> bool:
        return not self.failed_checks

    def render(self) -> str:
        summary = f"checks passed: {len(self.checks) - len(self.failed_checks)}/{len(self.checks)}"
        return "\n".join([f"# {self.title}", *self.lines, "", summary]) + "\n"

    def write(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.render())
        return path
