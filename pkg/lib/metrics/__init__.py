"""Transcription metrics: note matching, F measures and frame accuracy."""


# Imports
from lib.metrics.matching import MatchConfig, Matching, match_notes
from lib.metrics.report import format_table, report_dict, write_report
from lib.metrics.scores import (
    EvalReport, evaluate_pair, f_measure, frame_accuracy, piano_roll,
)
