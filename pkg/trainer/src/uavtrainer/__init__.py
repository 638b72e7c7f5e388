"""Dataset ingestion, TCN training and figure rendering companion to
the uavrisk assessment core."""

from .columns import ColumnMap
from .crosscheck import BoundaryError, cross_check_inference
from .ingest import IngestionError, ingest_dataset, load_corpus
from .model import Normalization, PowerTcn, export_weights, rebuild_torch
from .synth import SynthConfig, generate_corpus
from .train import TrainConfig, TrainingError, train_tcn

__version__ = "0.1.0"
