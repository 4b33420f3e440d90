from fractions import Fraction

import hypothesis.strategies as st
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def rationals(min_value=-4, max_value=4, max_den=6):
    return st.builds(
        Fraction,
        st.integers(min_value * max_den, max_value * max_den),
        st.integers(1, max_den),
    )


def alphas(min_size=1, max_size=6, nonneg=False):
    lo = 0 if nonneg else -4
    return st.lists(rationals(lo, 4), min_size=min_size, max_size=max_size).filter(
        lambda xs: any(x != 0 for x in xs)
    )
