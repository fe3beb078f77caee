import importlib.metadata

from ._dataset import LABEL_COLUMN
from ._dataset import ColumnSpec
from ._dataset import Dataset
from ._dataset import decode_categories
from ._dataset import load_csv
from ._dataset import load_schema
from ._dataset import make_stable_unstable
from ._dataset import make_synthetic
from ._dataset import train_test_split
from ._dataset import train_test_split_indices
from ._errors import ConfigError
from ._errors import DegenerateSplitError
from ._errors import DimensionMismatchError
from ._errors import EmptyEvalSetError
from ._errors import EmptyGridError
from ._errors import EmptyScoresError
from ._errors import EmptyTrainingSetError
from ._errors import InsufficientRealizationsError
from ._errors import InsufficientReplicationsError
from ._errors import InvalidDimensionError
from ._errors import InvalidProbabilityError
from ._errors import LengthMismatchError
from ._errors import MinLeafExceedsDataError
from ._errors import MissingFileError
from ._errors import NonBinaryLabelError
from ._errors import RegretTreeError
from ._errors import SchemaMismatchError
from ._errors import SingleClassDataError
from ._errors import TreeFileReadError
from ._errors import UnknownCategoryError
from ._errors import ZeroLeafSizeError
from ._oracle import LabelRedraw
from ._oracle import OracleModel
from ._oracle import SweepPoint
from ._oracle import SweepReport
from ._oracle import ValidationReport
from ._oracle import ValidationSummary
from ._oracle import fit_logistic
from ._oracle import ground_truth_probs
from ._oracle import leaf_size_sweep
from ._oracle import penalized_loss
from ._oracle import redraw_labels
from ._oracle import validate_decomposition
from ._regret import Decomposition
from ._regret import LeafPrediction
from ._regret import LeafRegretEstimate
from ._regret import RegretRecord
from ._regret import RegretReport
from ._regret import Resampler
from ._regret import bootstrap_resample
from ._regret import compute_regret_report
from ._regret import decompose_variance
from ._regret import deviation_frequency
from ._regret import expected_leaf_regret_bound
from ._regret import hoeffding_bound
from ._regret import leaf_regret_bound
from ._regret import leaf_regret_estimates
from ._regret import leaf_regret_plugin
from ._regret import leaf_regret_true
from ._regret import mc_leaf_regret
from ._regret import mc_structural_regret
from ._regret import resampled_predictions
from ._selective import CurvePoint
from ._selective import RegretScores
from ._selective import SelectiveCurve
from ._selective import confidence_curve
from ._selective import coverage_at_target
from ._selective import default_coverage_grid
from ._selective import rank_by_regret
from ._selective import recall_coverage_curve
from ._selective import retained_indices
from ._tree import Leaf
from ._tree import Split
from ._tree import Tree
from ._tree import TreeParams
from ._tree import apply
from ._tree import fit_tree
from ._tree import log_loss
from ._tree import predict_proba
from ._tree import predict_proba_many
from ._tree import read_tree_file
from ._tree import route
from ._tree import write_tree_file

__appname__ = "regret-tree"

# Semantic Versioning 2.0.0: https://semver.org/
# e.g., 1.0.0a0, 1.0.0rc0, 1.0.0, 1.0.0.post0
__version__ = importlib.metadata.version("regret-tree")
