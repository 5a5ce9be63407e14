"""Pipeline stage runners with file-based handoffs.

Each stage reads its declared inputs, writes its declared artifacts (every
artifact gets a JSON sidecar with the seed and a config hash for provenance)
and returns a small summary dict. The FastAPI service and the CLI are both
thin layers over these functions.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from . import audit as audit_mod
from . import clustering, coreset as coreset_mod, datagen, embedding, gnn, homophily
from .errors import ConfigError, DataError
from .graph import Graph, NodeSplit, load_bundle, normalized_adjacency, save_bundle, split_nodes

ARTIFACTS = {
    "graph": "graph",
    "embeddings": "embeddings.csv",
    "communities": "communities.csv",
    "homophily": "homophily.csv",
    "coreset": "coreset.csv",
    "model": "model.bin",
    "history": "history.csv",
    "report_json": "report.json",
    "report_csv": "report.csv",
    "plotdata": "plotdata.csv",
    "sweep": "sweep.csv",
    "sweep_plotdata": "sweep_plotdata.csv",
}

DEFAULTS = {
    "seed": 0,
    "split": {"fractions": [0.5, 0.25, 0.25], "stratify": True},
    "embed": {"walks_per_node": 10, "walk_length": 40, "p": 1.0, "q": 1.0,
              "dim": 64, "window": 5, "negatives": 5, "epochs": 5, "lr": 0.025},
    "cluster": {"k": 5, "max_iter": 100, "tol": 1e-6},
    "coreset": {"k_total": 30, "strategy": "extremal", "per_community": None},
    "train": {"epochs": 400, "lr": 0.01, "lambda": 1.0, "weight_decay": 5e-4,
              "d1": 64, "d2": 64},
    "audit": {"margin": 0.0, "predictions": None},
    "sweep": {"k_total": [10, 20, 30, 50], "lambda": [1.0]},
}


def stage_config(config: dict, stage: str) -> dict:
    merged = dict(DEFAULTS.get(stage, {}))
    merged.update(config.get(stage) or {})
    return merged


def config_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]


def _write_sidecar(artifact: Path, seed: int, cfg: dict, extra: dict | None = None):
    sidecar = {"seed": seed, "config_hash": config_hash(cfg), "config": cfg}
    sidecar.update(extra or {})
    Path(str(artifact) + ".json").write_text(
        json.dumps(sidecar, sort_keys=True, indent=2) + "\n")


def _workdir(config: dict) -> Path:
    out = Path(config.get("out", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_graph(config: dict) -> Graph:
    bundle = Path(config.get("graph", _workdir(config) / ARTIFACTS["graph"]))
    if not bundle.exists():
        raise DataError(f"graph bundle not found: {bundle}")
    return load_bundle(bundle)


def _split(graph: Graph, config: dict) -> NodeSplit:
    cfg = stage_config(config, "split")
    return split_nodes(graph, tuple(cfg["fractions"]), int(config.get("seed", 0)),
                       stratify_by_label=bool(cfg["stratify"]))


# -- stages ---------------------------------------------------------------------

def run_synth(config: dict) -> dict:
    cfg = stage_config(config, "synth")
    if not cfg:
        raise ConfigError("synth stage needs a 'synth' config section")
    seed = int(config.get("seed", 0))
    sbm = datagen.SbmConfig.from_dict(cfg)
    graph = datagen.generate_sbm(sbm, seed)
    out = _workdir(config) / ARTIFACTS["graph"]
    save_bundle(graph, out)
    _write_sidecar(out / "provenance", seed, cfg)
    return {"stage": "synth", "artifacts": {"graph": str(out)},
            "scalars": {"n": graph.num_nodes, "edges": graph.num_edges,
                        "num_classes": graph.num_classes}}


def run_embed(config: dict) -> dict:
    cfg = stage_config(config, "embed")
    seed = int(config.get("seed", 0))
    graph = _load_graph(config)
    corpus = embedding.generate_walks(
        graph, int(cfg["walks_per_node"]), int(cfg["walk_length"]),
        float(cfg["p"]), float(cfg["q"]), seed)
    emb, losses = embedding.train_skipgram(
        corpus, graph.num_nodes, int(cfg["dim"]), int(cfg["window"]),
        int(cfg["negatives"]), int(cfg["epochs"]), float(cfg["lr"]), seed)
    out = _workdir(config) / ARTIFACTS["embeddings"]
    np.savetxt(out, emb, delimiter=",", fmt="%.17g")
    _write_sidecar(out, seed, cfg, {"final_loss": losses[-1], "epoch_losses": losses})
    return {"stage": "embed", "artifacts": {"embeddings": str(out)},
            "scalars": {"dim": int(cfg["dim"]), "walks": len(corpus.walks),
                        "final_loss": losses[-1]}}


def run_cluster(config: dict) -> dict:
    cfg = stage_config(config, "cluster")
    seed = int(config.get("seed", 0))
    emb_path = _workdir(config) / ARTIFACTS["embeddings"]
    if not emb_path.exists():
        raise DataError(f"embeddings not found: {emb_path}")
    emb = np.loadtxt(emb_path, delimiter=",", ndmin=2)
    result = clustering.kmeans(emb, int(cfg["k"]), int(cfg["max_iter"]),
                               float(cfg["tol"]), seed)
    out = _workdir(config) / ARTIFACTS["communities"]
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_id", "community_id"])
        for i, c in enumerate(result.assignment):
            writer.writerow([i, int(c)])
    _write_sidecar(out, seed, cfg, {"wcss": result.wcss,
                                    "iterations": result.iterations_run})
    return {"stage": "cluster", "artifacts": {"communities": str(out)},
            "scalars": {"k": int(cfg["k"]), "wcss": result.wcss,
                        "iterations": result.iterations_run}}


def run_homophily(config: dict) -> dict:
    seed = int(config.get("seed", 0))
    graph = _load_graph(config)
    profile = homophily.homophily_profile(graph)
    out = _workdir(config) / ARTIFACTS["homophily"]
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_id", "degree", "ratio"])
        for i in range(graph.num_nodes):
            r = profile.ratio[i]
            writer.writerow([i, int(profile.degree[i]),
                             "NA" if np.isnan(r) else f"{r:.17g}"])
    _write_sidecar(out, seed, {})
    defined = profile.defined()
    return {"stage": "homophily", "artifacts": {"homophily": str(out)},
            "scalars": {"mean_ratio": float(profile.ratio[defined].mean()) if defined.any() else None,
                        "isolated": int((~defined).sum())}}


def load_communities(path, num_nodes: int) -> np.ndarray:
    assignment = np.full(num_nodes, -1, dtype=np.int64)
    with Path(path).open() as fh:
        for row in csv.DictReader(fh):
            assignment[int(row["node_id"])] = int(row["community_id"])
    if (assignment < 0).any():
        raise DataError(f"community file {path} does not cover all nodes")
    return assignment


def _communities_from_file(config: dict, graph: Graph) -> clustering.CommunityAssignment:
    path = _workdir(config) / ARTIFACTS["communities"]
    if not path.exists():
        raise DataError(f"communities not found: {path}")
    assignment = load_communities(path, graph.num_nodes)
    k = int(assignment.max()) + 1
    centroids = np.zeros((k, 1))
    return clustering.CommunityAssignment(assignment, centroids, 0.0, 0)


def run_coreset(config: dict) -> dict:
    cfg = stage_config(config, "coreset")
    seed = int(config.get("seed", 0))
    graph = _load_graph(config)
    communities = _communities_from_file(config, graph)
    profile = homophily.homophily_profile(graph)
    split = _split(graph, config)
    per_comm = cfg.get("per_community")
    cs = coreset_mod.select_coreset(
        graph, communities, profile, split, int(cfg["k_total"]),
        strategy=cfg["strategy"], seed=seed,
        per_community=None if per_comm is None else int(per_comm))
    out = _workdir(config) / ARTIFACTS["coreset"]
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_id", "community", "sensitive", "ratio", "weight"])
        for e in cs.entries:
            writer.writerow([e.node_id, e.community_id, e.sensitive_bit,
                             f"{e.homophily_ratio:.17g}", f"{e.weight:.17g}"])
    _write_sidecar(out, seed, cfg, {
        "k_total": cs.total_budget, "strategy": cs.strategy,
        "shortfalls": {f"{k}/{g}": v for (k, g), v in cs.shortfalls.items()},
        "warnings": cs.warnings,
    })
    return {"stage": "coreset", "artifacts": {"coreset": str(out)},
            "scalars": {"selected": len(cs), "shortfall": sum(cs.shortfalls.values())}}


def load_coreset(path, graph: Graph) -> coreset_mod.Coreset:
    entries = []
    with Path(path).open() as fh:
        for row in csv.DictReader(fh):
            entries.append(coreset_mod.CoresetEntry(
                int(row["node_id"]), int(row["community"]), int(row["sensitive"]),
                float(row["ratio"]), float(row["weight"])))
    return coreset_mod.Coreset(entries, len(entries), "loaded")


def save_model(path, params: gnn.ModelParams, seed: int, cfg: dict):
    """JSON header line (dims, seed, config hash) + row-major float64 blobs."""
    header = {
        "dims": {f: list(getattr(params, f).shape) for f in gnn.ModelParams.FIELDS},
        "seed": seed,
        "config_hash": config_hash(cfg),
    }
    with Path(path).open("wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        for f in gnn.ModelParams.FIELDS:
            fh.write(np.ascontiguousarray(getattr(params, f), dtype=np.float64).tobytes())


def load_model(path) -> gnn.ModelParams:
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    header = json.loads(raw[:nl].decode())
    offset = nl + 1
    fields = {}
    for f in gnn.ModelParams.FIELDS:
        shape = tuple(header["dims"][f])
        count = int(np.prod(shape))
        fields[f] = np.frombuffer(raw, dtype=np.float64, count=count,
                                  offset=offset).reshape(shape).copy()
        offset += count * 8
    return gnn.ModelParams(**fields)


def run_train(config: dict) -> dict:
    cfg = stage_config(config, "train")
    seed = int(config.get("seed", 0))
    graph = _load_graph(config)
    split = _split(graph, config)
    coreset_path = _workdir(config) / ARTIFACTS["coreset"]
    cs = load_coreset(coreset_path, graph) if coreset_path.exists() else None
    tc = gnn.TrainConfig(
        epochs=int(cfg["epochs"]), lr=float(cfg["lr"]), lam=float(cfg["lambda"]),
        weight_decay=float(cfg["weight_decay"]), d1=int(cfg["d1"]),
        d2=int(cfg["d2"]), seed=seed)
    if tc.lam > 0 and (cs is None or len(cs) == 0):
        raise DataError("training with lambda > 0 requires a non-empty coreset")
    params, history = gnn.train(graph, split, cs, tc)
    out = _workdir(config) / ARTIFACTS["model"]
    save_model(out, params, seed, cfg)
    _write_sidecar(out, seed, cfg)
    hist_path = _workdir(config) / ARTIFACTS["history"]
    with hist_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "task_loss", "fair_loss", "total_loss",
                         "train_acc", "val_acc"])
        for i, row in enumerate(history.as_rows()):
            writer.writerow([i] + [f"{v:.17g}" for v in row])
    return {"stage": "train",
            "artifacts": {"model": str(out), "history": str(hist_path)},
            "scalars": {"final_task_loss": history.task_loss[-1],
                        "final_fair_loss": history.fair_loss[-1],
                        "best_val_acc": max(history.val_acc)}}


def load_predictions(path, num_nodes: int):
    preds = np.full(num_nodes, -1, dtype=np.int64)
    scores = np.zeros(num_nodes)
    with Path(path).open() as fh:
        for row in csv.DictReader(fh):
            i = int(row["node_id"])
            preds[i] = int(row["pred_label"])
            scores[i] = float(row["score"])
    return preds, scores


def run_audit(config: dict) -> dict:
    cfg = stage_config(config, "audit")
    seed = int(config.get("seed", 0))
    graph = _load_graph(config)
    communities = load_communities(_workdir(config) / ARTIFACTS["communities"],
                                   graph.num_nodes)
    if cfg.get("predictions"):
        preds, scores = load_predictions(cfg["predictions"], graph.num_nodes)
        node_set = np.flatnonzero(preds >= 0)
    else:
        model_path = Path(cfg.get("model") or _workdir(config) / ARTIFACTS["model"])
        if not model_path.exists():
            raise DataError(f"model not found: {model_path}")
        params = load_model(model_path)
        preds, scores = gnn.predict(params, normalized_adjacency(graph), graph.features)
        node_set = _split(graph, config).test
    report = audit_mod.community_report(
        preds, scores, graph.labels, graph.sensitive, communities,
        node_set=node_set,
        metadata={"seed": seed, "config_hash": config_hash(cfg)})
    flags = audit_mod.detect_paradox(report, float(cfg["margin"]))
    out_json = _workdir(config) / ARTIFACTS["report_json"]
    doc = report.as_dict()
    doc["paradoxes"] = [list(f) for f in flags]
    out_json.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    out_csv = _workdir(config) / ARTIFACTS["report_csv"]
    plot_csv = _workdir(config) / ARTIFACTS["plotdata"]
    write_report_csv(report, out_csv)
    write_plotdata_csv(report, plot_csv)
    graph_rec = report.scope("graph")
    return {"stage": "audit",
            "artifacts": {"report_json": str(out_json), "report_csv": str(out_csv),
                          "plotdata": str(plot_csv)},
            "scalars": {"acc": graph_rec.acc, "auc": graph_rec.auc,
                        "sp_abs": graph_rec.sp_abs, "eo_abs": graph_rec.eo_abs,
                        "paradoxes": len(flags)}}


METRIC_COLUMNS = ["acc", "auc", "sp_signed", "sp_abs", "eo_signed", "eo_abs"]


def write_report_csv(report: audit_mod.FairnessReport, path):
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scope", "size"] + METRIC_COLUMNS)
        for rec in report.records:
            writer.writerow([rec.scope, rec.size] + [
                "NA" if getattr(rec, m) is None else f"{getattr(rec, m):.17g}"
                for m in METRIC_COLUMNS])


def write_plotdata_csv(report: audit_mod.FairnessReport, path):
    """Scope x metric matrix for external plotting."""
    write_report_csv(report, path)


def run_sweep(config: dict) -> dict:
    """Re-run coreset -> train -> audit for each (k_total, lambda) setting.

    Upstream artifacts (graph, embeddings, communities) are shared; each
    setting works in its own subdirectory and contributes one row per scope.
    """
    cfg = stage_config(config, "sweep")
    base = _workdir(config)
    k_values = [int(k) for k in cfg["k_total"]]
    lam_values = [float(x) for x in cfg["lambda"]]
    rows = []
    for k_total in k_values:
        for lam in lam_values:
            sub = dict(config)
            sub["out"] = str(base / f"sweep_k{k_total}_lam{lam:g}")
            sub["graph"] = str(base / ARTIFACTS["graph"])
            Path(sub["out"]).mkdir(parents=True, exist_ok=True)
            for fname in (ARTIFACTS["embeddings"], ARTIFACTS["communities"]):
                src = base / fname
                if not src.exists():
                    raise DataError(f"sweep needs upstream artifact {src}")
                (Path(sub["out"]) / fname).write_bytes(src.read_bytes())
            sub["coreset"] = dict(stage_config(config, "coreset"), k_total=k_total)
            sub["train"] = dict(stage_config(config, "train"), **{"lambda": lam})
            run_coreset(sub)
            run_train(sub)
            summary = run_audit(sub)
            rows.append({"k_total": k_total, "lambda": lam, **summary["scalars"]})
    out = base / ARTIFACTS["sweep"]
    with out.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    plot = base / ARTIFACTS["sweep_plotdata"]
    with plot.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k_total", "lambda", "acc", "auc", "sp_abs", "eo_abs"])
        for r in rows:
            writer.writerow([r["k_total"], r["lambda"], r["acc"], r["auc"],
                             r["sp_abs"], r["eo_abs"]])
    return {"stage": "sweep",
            "artifacts": {"sweep": str(out), "sweep_plotdata": str(plot)},
            "scalars": {"settings": len(rows)}}


STAGES = {
    "synth": run_synth,
    "embed": run_embed,
    "cluster": run_cluster,
    "homophily": run_homophily,
    "coreset": run_coreset,
    "train": run_train,
    "audit": run_audit,
    "sweep": run_sweep,
}


def run_stage(name: str, config: dict) -> dict:
    if name not in STAGES:
        raise ConfigError(f"unknown stage {name!r}")
    return STAGES[name](config)
