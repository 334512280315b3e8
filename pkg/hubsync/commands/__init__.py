from .boundary_command import BoundaryDefinition
from .bracket_command import BracketDefinition
from .energy_slice_command import EnergySliceDefinition
from .equilibria_command import EquilibriaDefinition
from .replay_command import ReplayDefinition
from .scaling_command import ScalingDefinition
from .simulate_command import SimulateDefinition
from .stability_command import StabilityDefinition
from .sweep_command import SweepDefinition
from .validate_command import ValidateDefinition
