"""Regenerates the synthetic fixtures and their reference values.

Reference values come from scikit-learn, SciPy and the `krippendorff`
package, not from this repository. Run from this directory:

    python3 oracle.py
"""
import json

import krippendorff
import numpy as np
from scipy import stats
from sklearn.metrics import cohen_kappa_score, f1_score

ASPECTS = ["actionability", "grounding_specificity", "verifiability", "helpfulness"]
ANNOTATORS = ["ann_a", "ann_b", "ann_c"]
PAIRS = [(0, 1), (0, 2), (1, 2)]
rng = np.random.default_rng(20240917)


def noisy(t):
    return int(np.clip(t + rng.choice([-1, 0, 1], p=[0.2, 0.6, 0.2]), 1, 5))


def make_annotations(n=50):
    records, truth = [], {}
    for i in range(n):
        cid = f"c{i + 1:03d}"
        act = int(rng.integers(1, 6))
        grd = int(np.clip(act + rng.integers(-1, 2), 1, 5))
        ver = int(rng.integers(1, 6))
        no_claim = rng.random() < 0.3
        hlp = int(np.clip(round((act + grd) / 2 + rng.integers(-1, 2)), 1, 5))
        truth[cid] = {"actionability": act, "grounding_specificity": grd,
                      "verifiability": "X" if no_claim else ver, "helpfulness": hlp}
        for a in ANNOTATORS:
            for aspect in ASPECTS:
                t = truth[cid][aspect]
                if aspect == "verifiability":
                    flip = rng.random() < (0.15 if t == "X" else 0.1)
                    if (t == "X") != flip:
                        label = "X"
                    else:
                        label = str(noisy(ver))
                else:
                    label = str(noisy(t))
                records.append({"comment_id": cid, "annotator_id": a, "aspect": aspect,
                                "label": label, "mode": "human"})
    return records


def ordinal(l):
    return None if l == "X" else int(l)


def classify(t):
    if t[0] == t[1] == t[2]:
        return "full"
    if t[0] == t[1] or t[0] == t[2] or t[1] == t[2]:
        return "majority"
    return "low"


def majority(t):
    for l in t:
        if t.count(l) >= 2:
            return l
    return None


def kappa(x, y):
    if len(x) < 2:
        return None
    v = cohen_kappa_score(x, y, weights="quadratic", labels=[1, 2, 3, 4, 5])
    return None if np.isnan(v) else float(v)


def spearman(x, y):
    if len(x) < 2 or len(set(x)) < 2 or len(set(y)) < 2:
        return None
    return float(stats.spearmanr(x, y).statistic)


def claim_f1(a, b):
    pa = [l == "X" for l in a]
    pb = [l == "X" for l in b]
    if not any(pa) and not any(pb):
        return None
    return float(f1_score(pb, pa, pos_label=True, zero_division=0.0))


def mean(vals):
    d = [v for v in vals if v is not None]
    return sum(d) / len(d) if d else None


def triples(records, aspect):
    by = {}
    for r in records:
        if r["aspect"] == aspect:
            by.setdefault(r["comment_id"], {})[r["annotator_id"]] = r["label"]
    return {c: [v[k] for k in sorted(v)] for c, v in sorted(by.items())}


def agreement(records):
    out = {}
    for aspect in ASPECTS:
        tri = triples(records, aspect)
        for subset in ["all", "full_majority"]:
            items = [t for t in tri.values() if subset == "all" or classify(t) != "low"]
            raters = [[t[r] for t in items] for r in range(3)]
            kap, rho, f1 = [], [], []
            for i, j in PAIRS:
                pairs = [(ordinal(a), ordinal(b)) for a, b in zip(raters[i], raters[j])
                         if a != "X" and b != "X"]
                x = [p[0] for p in pairs]
                y = [p[1] for p in pairs]
                kap.append(kappa(x, y))
                rho.append(spearman(x, y))
                f1.append(claim_f1(raters[i], raters[j]))
            data = np.array([[np.nan if l == "X" else float(l) for l in raters[r]] for r in range(3)])
            alpha = float(krippendorff.alpha(reliability_data=data, level_of_measurement="interval"))
            row = {"n_items": len(items), "kappa": kap, "kappa_mean": mean(kap),
                   "spearman": rho, "spearman_mean": mean(rho), "alpha": alpha}
            if aspect == "verifiability":
                row["f1"] = f1
                row["f1_mean"] = mean(f1)
            out[f"{aspect}/{subset}"] = row
    return out


def majority_table(records):
    table = {}
    for aspect in ASPECTS:
        for c, t in triples(records, aspect).items():
            if classify(t) != "low":
                table.setdefault(c, {})[aspect] = majority(t)
    return table


def model_labels(records):
    table = majority_table(records)
    out = []
    for c in sorted({r["comment_id"] for r in records}):
        scores = {}
        for aspect in ASPECTS:
            base = table.get(c, {}).get(aspect)
            if base is None or rng.random() < 0.25:
                base = "X" if aspect == "verifiability" and rng.random() < 0.3 else str(int(rng.integers(1, 6)))
            elif base != "X":
                base = str(noisy(int(base)))
            scores[aspect] = {"label": base}
        out.append({"comment_id": c, "scores": scores, "parse_status": {"status": "ok"}})
    return out


def model_vs_human(records, model):
    mlab = {m["comment_id"]: {a: s["label"] for a, s in m["scores"].items()} for m in model}
    out = {}
    for aspect in ASPECTS:
        tri = triples(records, aspect)
        items = [(c, t) for c, t in tri.items() if classify(t) != "low"]
        m = [mlab[c][aspect] for c, _ in items]
        g = [majority(t) for _, t in items]
        both = [(ordinal(a), ordinal(b)) for a, b in zip(m, g) if a != "X" and b != "X"]
        row = {"n_items": len(items), "kappa_majority": kappa([p[0] for p in both], [p[1] for p in both])}
        per = []
        for r in range(3):
            h = [t[r] for _, t in items]
            both = [(ordinal(a), ordinal(b)) for a, b in zip(m, h) if a != "X" and b != "X"]
            per.append(kappa([p[0] for p in both], [p[1] for p in both]))
        row["kappa_per_annotator"] = per
        if aspect == "verifiability":
            row["f1_majority"] = claim_f1(m, g)
        out[aspect] = row
    return out


def correlations(records):
    table = majority_table(records)
    out = {}
    for i, a in enumerate(ASPECTS):
        for b in ASPECTS[i + 1:]:
            pairs = [(int(v[a]), int(v[b])) for v in table.values()
                     if a in v and b in v and v[a] != "X" and v[b] != "X"]
            x, y = zip(*pairs)
            out[f"{a}/{b}"] = {"n_items": len(pairs), "r": float(np.corrcoef(x, y)[0, 1])}
    return out


def scored_source(prefix, n, shift):
    out = []
    for i in range(n):
        scores = {}
        for k, aspect in enumerate(ASPECTS):
            if aspect == "verifiability" and rng.random() < 0.2:
                scores[aspect] = {"label": "X"}
            else:
                v = int(np.clip(round(rng.normal(3 + shift[k], 1.1)), 1, 5))
                scores[aspect] = {"label": str(v)}
        out.append({"comment_id": f"{prefix}{i + 1:03d}", "scores": scores,
                    "parse_status": {"status": "ok"}})
    return out


def welch(human, llm):
    out = {}
    for aspect in ASPECTS:
        h = [int(r["scores"][aspect]["label"]) for r in human if r["scores"][aspect]["label"] != "X"]
        l = [int(r["scores"][aspect]["label"]) for r in llm
             if r["parse_status"]["status"] != "failed" and r["scores"][aspect]["label"] != "X"]
        res = stats.ttest_ind(h, l, equal_var=False)
        vh, vl = np.var(h, ddof=1) / len(h), np.var(l, ddof=1) / len(l)
        dof = (vh + vl) ** 2 / (vh ** 2 / (len(h) - 1) + vl ** 2 / (len(l) - 1))
        out[aspect] = {"human_n": len(h), "human_mean": float(np.mean(h)), "human_std": float(np.std(h, ddof=1)),
                       "llm_n": len(l), "llm_mean": float(np.mean(l)), "llm_std": float(np.std(l, ddof=1)),
                       "t": float(res.statistic), "dof": float(dof), "p": float(res.pvalue)}
    return out


def write_jsonl(path, rows):
    with open(path, "w") as f:
        for r in rows:
            f.write(json.dumps(r) + "\n")


if __name__ == "__main__":
    ann = make_annotations()
    model = model_labels(ann)
    human = scored_source("h", 40, [0.4, 0.3, 0.2, 0.35])
    llm = scored_source("m", 38, [-0.1, 0.0, 0.1, -0.2])
    llm.append({"comment_id": "m999", "scores": {a: {"label": "5"} for a in ASPECTS},
                "parse_status": {"status": "failed", "reason": "no JSON object in output"}})
    write_jsonl("annotations_50.jsonl", ann)
    write_jsonl("model_labels_50.jsonl", model)
    write_jsonl("welch_human.jsonl", human)
    write_jsonl("welch_llm.jsonl", llm)
    oracle = {"agreement": agreement(ann), "model_vs_human": model_vs_human(ann, model),
              "correlation": correlations(ann), "welch": welch(human, llm)}
    with open("oracle_values.json", "w") as f:
        json.dump(oracle, f, indent=1)
