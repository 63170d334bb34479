from hypothesis import HealthCheck, settings

# Property tests share the machine with numeric workloads; wall-clock
# deadlines only add flakiness.
settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")
