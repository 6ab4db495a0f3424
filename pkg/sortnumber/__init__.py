# flake8: noqa
"""Sort-numbers of the consecutive-231-avoiding stack sort, exhaustively and by sampling."""
from sortnumber.analysis import FitResult
from sortnumber.analysis import power_fit
from sortnumber.enumeration import exhaustive_summary
from sortnumber.enumeration import LengthSummary
from sortnumber.enumeration import next_perm
from sortnumber.enumeration import SortHistogram
from sortnumber.enums import EventKind
from sortnumber.enums import LiftOrder
from sortnumber.enums import OutputFormat
from sortnumber.main import contract
from sortnumber.main import gap_1_2
from sortnumber.main import index_of
from sortnumber.main import is_periodic
from sortnumber.main import lift
from sortnumber.main import Permutation
from sortnumber.main import sc231
from sortnumber.main import sort_number
from sortnumber.main import SortNumberException
from sortnumber.main import v_permutation
from sortnumber.sampling import random_perm
from sortnumber.sampling import RngState
from sortnumber.sampling import sample_stats
from sortnumber.sampling import SampleStats
from sortnumber.verify import run_suite
from sortnumber.verify import SuiteReport
