import hypothesis

# One deterministic profile for every run: failures reproduce exactly, and no
# per-example deadline so CI machines of any speed behave the same.
hypothesis.settings.register_profile(
    "default",
    deadline=None,
    derandomize=True,
    max_examples=60,
)
hypothesis.settings.load_profile("default")
