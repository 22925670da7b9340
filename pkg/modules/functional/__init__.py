from modules.functional.kernel import SeriesTruncationError, k_series, k_closed_form, dk_dl, dk_dg, d2k_dgdl, \
    kernel_inequality
from modules.functional.sampling import sample_arrivals, sample_noise_beliefs
