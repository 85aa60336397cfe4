from .dataset import Dataset
from .ols import OlsModel, fit_ols
from .tree import TreeModel, TreeParams, fit_tree
from .forest import ForestModel, ForestParams, fit_forest
from .prediction import RegressionModel, predict, predict_many
from .metrics import r_squared
from .cross_validation import DEFAULT_PARAM_GRIDS, MODEL_KINDS, CvResult, cross_validate, expand_grid, fit_model
from .eval_report import EvalEntry, EvalReport, mark_best, read_eval_report, write_eval_report
from .model_io import load_model, model_from_dict, model_to_dict, save_model
