from .gridworld import (ACTIONS, NAMED_LAYOUTS, GridSpec, build_gridworld, derive_expert,
                        epsilon_greedy, grid_index, open_cells_init)

__all__ = ["ACTIONS", "NAMED_LAYOUTS", "GridSpec", "build_gridworld", "derive_expert",
           "epsilon_greedy", "grid_index", "open_cells_init"]
