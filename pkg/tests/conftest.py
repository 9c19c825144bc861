import os
import sys

from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

# deterministic by default; HYPOTHESIS_PROFILE=stress for a long randomized run
settings.register_profile("default", derandomize=True, deadline=None)
settings.register_profile("stress", max_examples=1000, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))
