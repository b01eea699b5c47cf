"""Low-level POMDP construction, belief filtering, point-based solving and execution."""
from .builder import Rewards, Topology, build_flat, build_grasp, build_move, build_pomdp, build_putdown
from .execution import LLOutcome, SimWorld, execute_flat, execute_policy, failure_holds, start_belief
from .model import BeliefTracker, POMDPModel, ZeroLikelihood, belief_update
from .solver import Policy, SolverConfig, SolverTimeout, collect_beliefs, guided_beliefs, mdp_q, solve

__all__ = [
    "BeliefTracker", "LLOutcome", "POMDPModel", "Policy", "Rewards", "SimWorld", "SolverConfig", "SolverTimeout",
    "Topology", "ZeroLikelihood", "belief_update", "build_flat", "build_grasp", "build_move", "build_pomdp",
    "build_putdown", "collect_beliefs", "execute_flat", "execute_policy", "failure_holds", "guided_beliefs",
    "mdp_q", "solve", "start_belief",
]
