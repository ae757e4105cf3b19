"""Runtime verification for metric temporal logic with generalized
until/since over timed words: offline trace checking, separation rewriting,
and an online monitor whose memory does not grow with the trace."""

from .formulas import (
    FALSE, TRUE, Always, And, Atom, Eventually, FalseF, Formula, GSince,
    GUntil, Historically, Implies, Next, Not, Once, Or, Since, TrueF, Until,
    WeakSince, WeakUntil, atoms, desugar, future_reach, is_bounded, is_core,
    mirror, past_reach, size, subformulas,
)
from .intervals import FULL, Bound, Interval, interval, rat
from .monitor import Monitor, MonitorConfig, MonitorError, run_offline
from .oracle import Rel, Verdict, classify_prefix, evaluate
from .parser import ParseError, parse, to_text
from .prefix_dfa import PrefixDFA, StateBudgetError, build
from .rewriting import (
    DEFAULT_NODE_BUDGET, RewriteBudgetError, RewriteTrace, SeparatedFormula,
    SeparationError, atomize, extract_unbounded, is_normal_form, is_separated,
    resugar, separate, to_normal_form,
)
from .tablecheck import TableAuditError, TruthTable, check
from .traces import (
    Event, TimedWord, TraceError, decimal_str, generate, parse_trace,
    serialize, variability, word,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
