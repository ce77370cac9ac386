"""Evaluation reports as aligned text and JSON."""


# Imports
from pathlib import Path
from typing import Dict, List, Sequence
import json

from lib.metrics.scores import EvalReport


# Constants
COLUMNS = ('f', 'fn', 'ac', 'precision', 'recall', 'matched', 'ref_count',
           'est_count')


def with_mean(rows: Sequence[EvalReport]) -> List[EvalReport]:
    """Per-file rows followed by their mean row."""
    return [*rows, EvalReport.mean(rows)]


def format_table(rows: Sequence[EvalReport], precision: int = 4) -> str:
    """Aligned columns, one line per file plus the mean line."""
    table = [('file', *COLUMNS)]
    for row in with_mean(rows):
        values = []
        for column in COLUMNS:
            value = getattr(row, column)
            if column in ('f', 'fn', 'ac', 'precision', 'recall'):
                values.append(f'{value:.{precision}f}')
            else:
                values.append(f'{value:g}')
        table.append((row.name, *values))

    widths = [max(len(r[i]) for r in table) for i in range(len(table[0]))]
    lines = [
        '  '.join(
            cell.ljust(w) if i == 0 else cell.rjust(w)
            for i, (cell, w) in enumerate(zip(r, widths))
        )
        for r in table
    ]
    lines.insert(1, '-' * len(lines[0]))
    return '\n'.join(lines)


def report_dict(rows: Sequence[EvalReport],
                unpaired: Dict[str, List[str]] = None) -> Dict:
    return {
        'files': [r.to_dict() for r in rows],
        'mean': EvalReport.mean(rows).to_dict(),
        'unpaired': unpaired or {'est': [], 'ref': []},
    }


def write_report(rows: Sequence[EvalReport], path: Path,
                 unpaired: Dict[str, List[str]] = None):
    """Write per-file rows, the mean row and unpaired names as JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as fd:
        json.dump(report_dict(rows, unpaired), fd, indent=2)
