"""Distance-field virtual fixtures for simulated cooperative drilling."""

from .calibration import (CalibrationError, GravityModel, compensate,
                          fit_gravity_model, hand_eye_calibrate,
                          pivot_calibrate, register_points)
from .distance import (DistanceFieldError, DistanceQuery, SdfVolume,
                       edt_squared, gradient, sample_trilinear, signed_distance)
from .forces import (AnatomyConstraint, ForceLawParams, ForceState,
                     compliance_force, per_anatomy_force, total_sdf_force)
from .phantom import PhantomSpecError, make_phantom
from .robot import Joint, RobotModel, RobotState, fk, gantry, jacobian, solve_admittance
from .scenario import ScenarioError, build_session, load_scenario, run_trajectory
from .simulation import (DrillTool, Metrics, Session, SessionTrace, TickRecord,
                         drill_removal, read_trace, write_trace)
from .transforms import RigidTransform
from .volume import (LabelVolume, NrrdHeader, Segment, SegmentTable,
                     VolumeFormatError, load_label_volume, parse_nrrd_header,
                     write_nrrd)

__version__ = "0.1.0"
