from .city_generator import SyntheticCity, SyntheticSpec, ZoneTruth, generate
from .recovery import score_recovery
from .synth_io import read_truth, write_synthetic_city, write_truth
