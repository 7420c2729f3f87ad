"""fixscope: mine frequent error types from {incorrect, correct} submission
pairs by clustering AST edit scripts, then classify new submissions."""

__version__ = "0.1.0"

from .tree import AstNode, AstTree, tree_hash, trees_identical
from .minilang import parse_minilang, unparse
from .treeio import SubmissionPair, read_tree, write_tree, read_corpus, write_corpus
from .treediff import (MatcherParams, MappingSet, EditAction, EditScript,
                       match_top_down, match_bottom_up, generate_script,
                       apply_script, diff, shortest_script)
from .represent import (EqualityScheme, MetricFamily, ChangeKey, Vocabulary,
                        BowVector, Autoencoder, AutoencoderConfig, Embedding,
                        DistanceConfig, project, jaccard_distance, vectorize,
                        cosine_distance, build_vocabulary, train_autoencoder,
                        embed, script_distance)
from .cluster import (DistanceMatrix, Dendrogram, Cluster, ClusterModel,
                      TrainingScript, distance_matrix, hac, filter_clusters,
                      compute_medoid, assign_label)
from .classify import (Prediction, ClassifierConfig, classify, classify_script,
                       nearest_cluster, knn_vote, UNKNOWN)
from .evaluate import (SplitSpec, PRCurve, SweepGrid, SweepConfig, split,
                       pr_curve, trapezoid_auc, sweep, best_on_test,
                       NOVEL_LABEL)
from .pipeline import train_model
from .synth import MutationOperator, OPERATORS, generate_synthetic_corpus
from .model_io import save_model, load_model, model_digest

__all__ = [name for name in dir() if not name.startswith("_")]
