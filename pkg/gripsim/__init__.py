from .__version__ import __version__
from .finger import (FingerParams, FingerPosture, ShaftForceDistribution,
                     SpringObjective, design_springs, identify_kfs,
                     solve_posture)
from .grasp import CircularObject, Termination, wrap_simulate
from .hand import (HandConfig, Phase, check_cycle_feasibility, grasp_phase,
                   payload_estimate, release_phase, run_cycle)
from .ratchet import LockMode, LockParams
from .scenario import read_scenario
from .screw import (LinearSpring, Mode, ScrewDrive, ScrewDriveParams,
                    switching_threshold, validate_design)
from .utils import (DesignInfeasible, GripSimError, IdentificationError,
                    InfeasibleCycle, InvalidParameters, ScenarioError,
                    SolverNonConvergence, StallError)


__all__ = ['ScrewDriveParams', 'ScrewDrive', 'Mode', 'LinearSpring',
           'switching_threshold', 'validate_design', 'FingerParams',
           'FingerPosture', 'ShaftForceDistribution', 'SpringObjective',
           'solve_posture', 'identify_kfs', 'design_springs', 'LockParams',
           'LockMode', 'CircularObject', 'Termination', 'wrap_simulate',
           'HandConfig', 'Phase', 'grasp_phase', 'release_phase',
           'run_cycle', 'check_cycle_feasibility', 'payload_estimate',
           'read_scenario', 'GripSimError', 'InvalidParameters',
           'StallError', 'SolverNonConvergence', 'IdentificationError',
           'DesignInfeasible', 'InfeasibleCycle', 'ScenarioError',
           '__version__']
