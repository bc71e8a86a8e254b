"""Foreign-key discovery for relational databases.

Profiles a database, discovers inclusion dependencies and minimal unique
column combinations, prunes candidate pairs by rules and selected unique
keys, validates survivors through a pluggable reasoning backend, and
resolves schema-wide conflicts into a final foreign-key set.
"""

from fkdetect.discovery import Ind, MinUcc, discover_min_uccs, discover_single_column_inds
from fkdetect.evaluation import GroundTruth, ScoreReport, load_ground_truth, score
from fkdetect.profiler import CandidatePair, KeySelection
from fkdetect.store import ColumnRef, Database, Table, load_database

__version__ = "0.1.0"

__all__ = [
    "CandidatePair",
    "ColumnRef",
    "Database",
    "GroundTruth",
    "Ind",
    "KeySelection",
    "MinUcc",
    "ScoreReport",
    "Table",
    "discover_min_uccs",
    "discover_single_column_inds",
    "load_database",
    "load_ground_truth",
    "score",
    "__version__",
]
