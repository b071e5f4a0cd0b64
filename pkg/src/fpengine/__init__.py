"""Hierarchical pattern memory: Footprints, Cells, Clusters and Metaclusters."""
from .cluster import Cluster, ClusterPolicy, Trace
from .codecs import (CategoricalCodecSpec, ImageCodecSpec, decode_categorical, decode_image,
                     encode_categorical, encode_image)
from .cognition import StepResult, SyntheticCognition
from .core import SegmentLayout, binarize, concat, segment, similarity
from .episodic import DeclarativeMemory, EpisodeBuffer
from .errors import (ArgumentError, DimensionError, EngineError, FormatError, LookupFailure,
                     NoMatchError, ValidationError, VersionError)
from .memory import Cell, CellOutcome, Footprint
from .metacluster import ChannelSpec, MCResult, Metacluster, MetaclusterSpec, NodeSpec, mc_projection
from .persistence import load_model, model_hash, save_model

__version__ = "0.1.0"
