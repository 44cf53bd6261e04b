from q2o.solvers.annealing import (
    Solution,
    SolverConfig,
    repair,
    solve_permutation_sa,
    solve_qubo,
    solve_qubo_sa,
)
from q2o.solvers.oracles import dp_bushy, dp_leftdeep, exhaustive
from q2o.solvers.remote import (
    LocalSolver,
    RemoteSolver,
    StubSolver,
    make_remote,
    remote_solve,
)

__all__ = [
    "Solution", "SolverConfig", "repair", "solve_permutation_sa", "solve_qubo", "solve_qubo_sa",
    "dp_bushy", "dp_leftdeep", "exhaustive",
    "LocalSolver", "RemoteSolver", "StubSolver", "make_remote", "remote_solve",
]
