"""Graph-to-sequence learning toolkit.

A bi-directional K-hop graph encoder feeding an attention-based LSTM
decoder, with synthetic shortest-path and place-map dataset generators, a
SQL subset parser with graph/sequence converters, metrics, checkpointing,
a training loop, and a scikit-learn style estimator on top.
"""

from .autodiff import Tensor, backward, dense_layer, dropout, no_grad, softmax
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .datasets import DatasetSpec, generate_babi19, generate_dataset, generate_sdp, generate_sql_corpus
from .decoder import DecoderParams, Hypothesis, beam_search, compute_attention, decode_step, sequence_loss
from .encoder import (EncoderParams, aggregate, encode_nodes, graph_embedding_pooling,
                      graph_embedding_supernode, init_node_features)
from .estimator import GraphSeq, as_samples
from .graphs import (DirectedGraph, LabeledGraph, Sample, add_supernode, parse_graph_file,
                     sample_neighbors, transform_labeled_edges, write_samples)
from .metrics import bleu4, path_accuracy
from .model import GraphSeqModel
from .optim import ParamSet, adam_step, clip_global_norm
from .rng import Rng
from .sql import SqlCondition, SqlQuery, parse_sql, sql_to_graph, sql_to_sequence
from .training import TrainConfig, evaluate_bleu, evaluate_path_accuracy, model_from_checkpoint, train
from .vocab import Vocabulary, build_vocabulary

__version__ = "0.1.0"
