from .hmm import (
    Hmm,
    HmmSource,
    bernoulli,
    circular_example,
    hmm_shift,
    hmm_source,
    hmm_stationary_initial,
    hmm_validate,
    hmm_word_probability,
    iid_model,
    markov_model,
)
from .qrw import (
    Qrw,
    QrwSource,
    coined_cycle_example,
    qrw_collapse_probability,
    qrw_validate,
    qrw_word_probability,
)
