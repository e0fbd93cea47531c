"""Reader for the simulator's long-form regret CSV.

Expected layout, one checkpoint per row:

    experiment,policy,replication,t,cum_regret
    mar-uniform,MarUcbUnknownP,0,500,12.25
    ...

Validation is strict: the header must match column for column, and every
error names the offending column so a malformed file is easy to fix.
"""

from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

CSV_HEADER = "experiment,policy,replication,t,cum_regret"
COLUMNS = tuple(CSV_HEADER.split(","))


class SchemaError(ValueError):
    pass


@dataclass
class ResultTable:
    """Parsed curves: per policy, per replication, regret at checkpoints."""

    experiment: str
    times: List[int]
    curves: Dict[str, Dict[int, np.ndarray]] = field(default_factory=dict)

    @property
    def policies(self) -> List[str]:
        return list(self.curves)

    def __getitem__(self, policy: str) -> Dict[int, np.ndarray]:
        return self.curves[policy]

    def replications(self, policy: str) -> List[int]:
        return sorted(self.curves[policy])

    def mean(self, policy: str) -> np.ndarray:
        reps = self.curves[policy]
        return np.mean([reps[r] for r in sorted(reps)], axis=0)

    def std(self, policy: str) -> np.ndarray:
        reps = self.curves[policy]
        stacked = np.array([reps[r] for r in sorted(reps)])
        if stacked.shape[0] > 1:
            return stacked.std(axis=0, ddof=1)
        return np.zeros(stacked.shape[1])


def _check_header(line: str, path) -> None:
    got = line.rstrip("\n").split(",")
    for i, want in enumerate(COLUMNS):
        if i >= len(got):
            raise SchemaError(f"{path}: header is missing column {want!r}")
        if got[i] != want:
            raise SchemaError(
                f"{path}: header column {i + 1} should be {want!r}, found {got[i]!r}"
            )
    if len(got) > len(COLUMNS):
        raise SchemaError(f"{path}: unexpected extra header column {got[len(COLUMNS)]!r}")


def read_results_csv(path) -> ResultTable:
    """Parse and validate one results file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as e:
        raise SchemaError(f"cannot read {path}: {e}") from e
    if not lines:
        raise SchemaError(f"{path}: file is empty")
    _check_header(lines[0], path)

    experiment = None
    # (policy, replication) -> list of (t, value) in file order
    raw: Dict[tuple, List[tuple]] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != len(COLUMNS):
            raise SchemaError(
                f"{path}: row {lineno} has {len(cells)} columns, expected {len(COLUMNS)}"
            )
        exp, policy, rep_s, t_s, v_s = cells
        if experiment is None:
            experiment = exp
        try:
            rep = int(rep_s)
        except ValueError:
            raise SchemaError(
                f"{path}: row {lineno}, column replication: could not parse {rep_s!r}"
            ) from None
        try:
            t = int(t_s)
        except ValueError:
            raise SchemaError(
                f"{path}: row {lineno}, column t: could not parse {t_s!r}"
            ) from None
        try:
            v = float(v_s)
        except ValueError:
            raise SchemaError(
                f"{path}: row {lineno}, column cum_regret: could not parse {v_s!r}"
            ) from None
        raw.setdefault((policy, rep), []).append((t, v))

    if not raw:
        raise SchemaError(f"{path}: no data rows")
    times = [t for t, _ in next(iter(raw.values()))]
    table = ResultTable(experiment=experiment, times=times)
    for (policy, rep), pairs in raw.items():
        if [t for t, _ in pairs] != times:
            raise SchemaError(
                f"{path}: column t: policy {policy!r} replication {rep} has a "
                "different checkpoint sequence than the first curve"
            )
        table.curves.setdefault(policy, {})[rep] = np.array(
            [v for _, v in pairs], dtype=float
        )
    return table
