"""Layer-partitioned DNN task assignment on a leader/follower UAV swarm:
seeded scenario generation, randomized-greedy route planning, closed-form
radio/energy physics, a constrained assignment utility with an exhaustive
small-instance oracle, a multi-agent decision environment, and a
diffusion-actor MADDPG trainer with baselines.
"""

__version__ = "0.1.0"

from .scenario import (Scenario, ScenarioError, generate_random_scenario,
                       load_scenario, save_scenario, load_layer_profiles)
from .pathplan import plan_route, plan_route_pure_greedy, Route

__all__ = [
    "Scenario", "ScenarioError", "generate_random_scenario", "load_scenario",
    "save_scenario", "load_layer_profiles", "plan_route",
    "plan_route_pure_greedy", "Route", "__version__",
]
