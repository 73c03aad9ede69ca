"""Tabular command-chain toolkit.

A typed columnar table, a small command-chain language over it (parse,
column correction, static validation, deterministic execution, templated
replies), a rule planner that turns natural-language queries into chains
or asks for clarification, a permutation-invariant table encoder with
masked-column pretraining, and HTTP/CLI front ends.
"""

from .commands import (
    Agg, Binary, Col, CommandChain, DeleteWhere, Derive, Describe, Expr,
    Filter, GroupBy, InsertRow, Lit, Plot, PlotSpec, Predict, Select, SliceRange,
    SliceTop, Sort, Unary, Update,
)
from .corrector import CorrectedChain, Correction, correct, resolve_column
from .errors import (
    AmbiguousColumn, BadPermutation, EmptySchema, EvalTypeError, ExecError,
    NonFiniteLoss, ParseError, RaggedRow, ShapeMismatch, TableChainError,
    TooFewColumns, UnknownColumn, Utf8Error,
)
from .executor import ExecutionResult, StepLog, execute, summarize
from .parser import parse_chain, parse_expr, serialize_chain, serialize_command
from .planner import (
    DEFAULT_VAGUENESS_THRESHOLD, Exemplar, ExemplarStore, MeasureRegistry,
    Plan, Planner, PlannerConfig, Rejection, RulePlanner, default_registry,
    embed_text, load_planner_config, plan, resolve_measure,
    retrieve_exemplars, vagueness_score,
)
from .session import AnalysisSession, Answer, ChainInvalid, Clarify, is_mutation
from .table import (
    ColumnMeta, ColumnStats, Schema, Table, Value, column_stats, load_csv,
    normalize_name, permute, to_csv, with_meta,
)
from .validator import Issue, ValidationReport, validate

__version__ = "0.1.0"
