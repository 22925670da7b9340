import logging
import math
from dataclasses import asdict, dataclass

import pandas as pd

from utils.file_utils import setup_output_dir

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.12g'
SORT_KEYS = ['c_m', 'lambda', 's0', 'firm_kind', 'm_deals']


@dataclass
class SweepRow:
    c_m: float
    lam: float
    s0: float
    rho: float
    s_bar: float
    g: float
    f_analytic: float
    ill_analytic: float
    firm_kind: str
    m_deals: int
    f_mc: float = math.nan
    f_mc_se: float = math.nan
    flagged: bool = False

    def to_record(self):
        record = asdict(self)
        record['lambda'] = record.pop('lam')
        return record


COLUMNS = ['c_m', 'lambda', 's0', 'rho', 's_bar', 'g', 'f_analytic', 'ill_analytic', 'f_mc', 'f_mc_se',
           'firm_kind', 'm_deals', 'flagged']
ANALYTIC_COLUMNS = [c for c in COLUMNS if c not in ('f_mc', 'f_mc_se', 'flagged')]


def rows_to_frame(rows, with_mc=True):
    frame = pd.DataFrame([r.to_record() for r in rows], columns=COLUMNS)
    frame = frame.sort_values(SORT_KEYS, kind='mergesort').reset_index(drop=True)
    return frame if with_mc else frame[ANALYTIC_COLUMNS]


def write_rows(rows, path, with_mc=True):
    """
    CSV with a header of field names, 12 significant digits and the literal
    'inf' for an infinite ILL.
    """
    frame = rows_to_frame(rows, with_mc)
    path = setup_output_dir(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep='', lineterminator='\n')
    logger.info('wrote %d rows to %s', len(frame), path)
    return path


def frame_to_text(frame):
    return frame.to_string(index=False, float_format=lambda v: FLOAT_FORMAT % v)
