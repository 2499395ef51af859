"""Articulation modeling, manipulation planning and joint refinement for synthetic objects."""
from .clustering import (
    ClusterParams,
    FeatureMode,
    PartSegmentation,
    dbscan,
    load_segmentation,
    match_parts,
    save_segmentation,
    segment_parts,
    segmentation_ap,
)
from .errors import (
    ArticuError,
    ContactLostError,
    DegenerateFitError,
    InsufficientSupportError,
    InvalidParameterError,
    JointLimitError,
    UnsupportedMetricError,
    ValidationError,
)
from .experiment import model_cloud, run_batch, run_experiment
from .grasp import GraspCandidate, actionability_score, propose_candidates
from .kinematics import (
    JointParams,
    Semantic,
    axis_angular_error,
    axis_origin_error,
    distance_to_axis,
    project_point_to_axis,
    rotate_about_axis,
    translate_along_axis,
)
from .losses import LossBreakdown, direction_loss, focal_loss, total_loss, vector_loss
from .metrics import ModelingReport, evaluate_modeling
from .planner import (
    PlanConfig,
    RunLog,
    Trajectory,
    execute_steps,
    plan_trajectory,
    receding_horizon_run,
)
from .refine import (
    Assignment,
    PlanTemplate,
    RefineConfig,
    hungarian,
    refine_parameters,
    trajectory_objective,
)
from .scene import (
    ArticulatedObject,
    Box,
    LabeledCloud,
    NoiseModel,
    ObjectSpec,
    PartSpec,
    PerPointFields,
    build_object,
    corrupt_fields,
    ground_truth_fields,
    load_cloud,
    load_scene,
    random_cabinet,
    sample_cloud,
    save_cloud,
    save_scene,
    set_joint_state,
)
from .voting import JointEstimate, vote_joint

__version__ = "0.1.0"
