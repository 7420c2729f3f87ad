"""Persisted model format: one plain JSON document, atomically replaced.

The digest field is 64-bit FNV-1a over the canonical serialization (sorted
keys, compact separators) of the document without the digest itself; it
detects corruption, nothing more. Floats are written in shortest round-trip
form, so reloaded weights and distances are bit-identical.
"""
from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .cluster import Cluster, ClusterModel, TrainingScript
from .errors import CorruptModel, VersionMismatch
from .represent import (Autoencoder, ChangeKey, DistanceConfig, EqualityScheme,
                        MetricFamily, Vocabulary)
from .tree import fnv1a_64
from .treediff import EditScript, MatcherParams
from .treeio import read_tree, write_tree

FORMAT_VERSION = 1


def _canonical(document: dict) -> str:
    return json.dumps(document, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False)


def document_digest(document: dict) -> str:
    payload = {k: v for k, v in document.items() if k != "digest"}
    return f"{fnv1a_64(_canonical(payload).encode('utf-8')):016x}"


def model_to_document(model: ClusterModel) -> dict:
    config = model.distance_config
    vocabulary = None
    if config.vocabulary is not None:
        vocabulary = {
            "scheme": config.vocabulary.scheme.value,
            "keys": [k.to_string() for k in config.vocabulary.keys],
        }
    autoencoder = None
    if config.autoencoder is not None:
        ae = config.autoencoder
        autoencoder = {
            "hidden_dim": ae.hidden_dim,
            "vocab_size": ae.vocab_size,
            "encoder_weights": ae.encoder_weights.ravel().tolist(),
            "encoder_bias": ae.encoder_bias.tolist(),
            "decoder_weights": ae.decoder_weights.ravel().tolist(),
            "decoder_bias": ae.decoder_bias.tolist(),
            "final_loss": ae.final_loss,
        }
    document = {
        "format_version": FORMAT_VERSION,
        "matcher_params": {
            "min_height": model.matcher_params.min_height,
            "min_dice": model.matcher_params.min_dice,
            "max_recovery_size": model.matcher_params.max_recovery_size,
        },
        "distance_config": {
            "family": config.family.value,
            "scheme": config.scheme.value,
            "vocabulary": vocabulary,
            "autoencoder": autoencoder,
        },
        "linkage": model.linkage,
        "cut_threshold": model.cut_threshold,
        "min_cluster_size": model.min_cluster_size,
        "scripts": [
            {
                "script_id": ts.script_id,
                "pair_id": ts.pair_id,
                "problem_id": ts.problem_id,
                "actions": [a.to_record() for a in ts.script.actions],
                "incorrect_src": ts.incorrect_src,
                "correct_src": ts.correct_src,
                "ground_truth_label": ts.ground_truth_label,
            }
            for ts in model.scripts.values()
        ],
        "correct_pool": [write_tree(t) for t in model.correct_pool],
        "clusters": [
            {
                "cluster_id": c.cluster_id,
                "members": list(c.member_script_ids),
                "label": c.label,
                "medoid_id": c.medoid_id,
            }
            for c in model.clusters
        ],
        "unclustered": list(model.unclustered),
        "provenance": model.provenance,
    }
    document["digest"] = document_digest(document)
    return document


def model_from_document(document: dict) -> ClusterModel:
    version = document.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"unsupported format_version {version!r}")
    if document.get("digest") != document_digest(document):
        raise CorruptModel("digest mismatch; the file is damaged")

    mp = document["matcher_params"]
    matcher = MatcherParams(min_height=mp["min_height"],
                            min_dice=mp["min_dice"],
                            max_recovery_size=mp["max_recovery_size"])
    dc = document["distance_config"]
    vocabulary = None
    if dc["vocabulary"] is not None:
        vocabulary = Vocabulary.build(
            [ChangeKey.from_string(s) for s in dc["vocabulary"]["keys"]],
            EqualityScheme(dc["vocabulary"]["scheme"]))
    autoencoder = None
    if dc["autoencoder"] is not None:
        raw = dc["autoencoder"]
        d, v = raw["hidden_dim"], raw["vocab_size"]
        autoencoder = Autoencoder(
            encoder_weights=np.array(raw["encoder_weights"]).reshape(d, v),
            encoder_bias=np.array(raw["encoder_bias"]),
            decoder_weights=np.array(raw["decoder_weights"]).reshape(v, d),
            decoder_bias=np.array(raw["decoder_bias"]),
            hidden_dim=d,
            vocab_size=v,
            final_loss=raw["final_loss"],
        )
    config = DistanceConfig(family=MetricFamily(dc["family"]),
                            scheme=EqualityScheme(dc["scheme"]),
                            vocabulary=vocabulary,
                            autoencoder=autoencoder)
    scripts = {}
    for row in document["scripts"]:
        scripts[row["script_id"]] = TrainingScript(
            script_id=row["script_id"],
            pair_id=row["pair_id"],
            problem_id=row["problem_id"],
            script=EditScript.from_records(row["actions"],
                                           src_ref=row["pair_id"]),
            incorrect_src=row.get("incorrect_src"),
            correct_src=row.get("correct_src"),
            ground_truth_label=row.get("ground_truth_label"),
        )
    clusters = [
        Cluster(cluster_id=c["cluster_id"],
                member_script_ids=list(c["members"]),
                label=c.get("label"),
                medoid_id=c.get("medoid_id"))
        for c in document["clusters"]
    ]
    return ClusterModel(
        clusters=clusters,
        distance_config=config,
        matcher_params=matcher,
        scripts=scripts,
        correct_pool=[read_tree(doc) for doc in document["correct_pool"]],
        cut_threshold=document["cut_threshold"],
        min_cluster_size=document["min_cluster_size"],
        linkage=document["linkage"],
        unclustered=list(document["unclustered"]),
        provenance=document.get("provenance", {}),
    )


def model_digest(model: ClusterModel) -> str:
    return model_to_document(model)["digest"]


def save_model(model: ClusterModel, path: str) -> None:
    """Serialize and atomically replace path (write temp, then rename)."""
    document = model_to_document(model)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".fixscope-",
                                    suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(document, fh, ensure_ascii=False)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def load_model(path: str) -> ClusterModel:
    try:
        with open(path, encoding="utf-8") as fh:
            document = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CorruptModel(f"not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise CorruptModel("model file must hold a JSON object")
    return model_from_document(document)
