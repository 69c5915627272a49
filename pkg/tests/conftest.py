from __future__ import annotations

import hypothesis

hypothesis.settings.register_profile(
    "riskhull", deadline=None, max_examples=50, derandomize=True
)
hypothesis.settings.load_profile("riskhull")
