"""nucleitrain: four-class segmentation trainer bridging Voronoi label
masks to posterior maps for the detection toolkit."""

__version__ = "0.1.0"

from .export import export_posteriors, load_model, predict_posteriors
from .formats import FormatError, read_manifest, read_pmap, write_pmap
from .model import UNetResNet18, weighted_cross_entropy, weighted_pixel_accuracy
from .train import TrainConfig, evaluate_checkpoint, select_best, train
