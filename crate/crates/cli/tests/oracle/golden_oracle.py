#!/usr/bin/env python3
"""Independent oracle for the golden snapshots of the bundled fixture corpora.

Reads the raw fixture files and the metric registry, evaluates every scoring
formula directly (plain floats, breadth-first search over the union of all
dependency edges) and writes the golden snapshot and score-table files the
acceptance suite compares against. It shares no code with the Rust crates.

Usage: golden_oracle.py <repo-root>
"""
import json
import math
import os
import sys
from datetime import datetime, timezone
from collections import deque

SIGNALS = {  # name -> (weight, threshold); iterated in sorted-name order
    "commits_90d": (1.0, 1000.0),
    "contributors": (2.0, 5000.0),
    "transitive_dependents": (3.0, 50000.0),
    "downloads_90d": (1.0, 1000000.0),
}
SCORE_THRESHOLD = 0.8
DEPENDENTS_THRESHOLD = 5000
SEVERITY_MID = {"low": 2.0, "medium": 5.5, "high": 7.5, "critical": 9.5}


def ts(text):
    return datetime.fromisoformat(text.replace("Z", "+00:00")).astimezone(timezone.utc)


def days(a, b):
    return (b - a).total_seconds() / 86400.0


def band(score):
    if score >= 9.0:
        return "critical"
    if score >= 7.0:
        return "high"
    if score >= 4.0:
        return "medium"
    return "low"


def read_vuln(doc):
    scores = []
    for s in doc.get("severity", []):
        try:
            scores.append(float(s["score"]))
        except ValueError:
            pass
    cat = (doc.get("database_specific") or {}).get("severity")
    if cat:
        c = {"moderate": "medium"}.get(cat.lower(), cat.lower())
        scores.append(SEVERITY_MID[c])
    score = max(scores)
    fixed_at = None
    for aff in doc["affected"]:
        for rng in aff.get("ranges", []):
            if any("fixed" in e for e in rng["events"]):
                explicit = (rng.get("database_specific") or {}).get("fixed_at")
                fixed_at = ts(explicit) if explicit else ts(doc["modified"])
    return {
        "package": doc["affected"][0]["package"]["name"],
        "severity": band(score),
        "published_at": ts(doc["published"]),
        "fixed_at": fixed_at,
    }


def load_bundle(root):
    projects = {}
    for d in sorted(os.listdir(root)):
        p = os.path.join(root, d)
        rec = json.load(open(os.path.join(p, "project.json")))
        stats = json.load(open(os.path.join(p, "stats.json")))
        deps = json.load(open(os.path.join(p, "deps.json")))
        vulns = []
        vdir = os.path.join(p, "vulns")
        if os.path.isdir(vdir):
            for f in sorted(os.listdir(vdir)):
                vulns.append(read_vuln(json.load(open(os.path.join(vdir, f)))))
        atts = []
        apath = os.path.join(p, "attestations.json")
        if os.path.exists(apath):
            atts = json.load(open(apath))
        projects[rec["ref"]["canonical_id"]] = {"stats": stats, "deps": deps, "vulns": vulns, "atts": atts}
    return projects


def reach(adj, start):
    seen = {start}
    q = deque([start])
    while q:
        n = q.popleft()
        for m in adj.get(n, ()):
            if m not in seen:
                seen.add(m)
                q.append(m)
    seen.discard(start)
    return seen


def normalize(value, norm):
    if norm["method"] == "saturating_log":
        return min(1.0, math.log1p(value) / math.log1p(norm["cap"]))
    if norm["method"] == "linear_clamp":
        return min(1.0, value / norm["cap"])
    return value


def category(obs, registry, focus):
    weighted = 0.0
    total = 0.0
    for m in registry:
        if m["focus"] != focus or m["direction"] == "neutral":
            continue
        w = m["default_weight"]
        if w <= 0 or m["id"] not in obs:
            continue
        n = normalize(obs[m["id"]], m["normalization"])
        c = n if m["direction"] == "higher_is_better" else 1.0 - n
        weighted += w * c
        total += w
    if total == 0:
        return None
    return min(1.0, max(0.0, weighted / total))


def criticality(obs):
    num = 0.0
    den = 0.0
    for name in sorted(SIGNALS):
        w, t = SIGNALS[name]
        s = obs.get(name, 0.0)
        num += w * (math.log1p(s) / math.log1p(max(s, t)))
        den += w
    return min(1.0, max(0.0, num / den))


def score_bundle(projects, registry, as_of):
    fwd, bwd = {}, {}
    for p in projects.values():
        for e in p["deps"]:
            fwd.setdefault(e["from"], set()).add(e["to"])
            bwd.setdefault(e["to"], set()).add(e["from"])

    def visible(v):
        v = dict(v)
        if v["fixed_at"] is not None and v["fixed_at"] > as_of:
            v["fixed_at"] = None
        return v

    all_vulns = [visible(v) for p in projects.values() for v in p["vulns"] if v["published_at"] <= as_of]
    vulnerable = {v["package"] for v in all_vulns if v["fixed_at"] is None}

    out = {}
    for cid in sorted(projects):
        p = projects[cid]
        s = p["stats"]
        deps = reach(fwd, cid)
        dependents = reach(bwd, cid)
        vulns = [visible(v) for v in p["vulns"] if v["published_at"] <= as_of]
        fixes = sorted(days(v["published_at"], v["fixed_at"]) for v in vulns if v["fixed_at"] is not None)
        obs = {}
        for k in ["contributors", "commits_total", "commits_90d", "lines_of_code", "forks", "stars",
                  "pull_requests_90d", "mailing_list_posts_90d", "downloads_90d"]:
            if s.get(k) is not None:
                obs[k] = float(s[k])
        obs["direct_deps"] = float(len(fwd.get(cid, ())))
        obs["transitive_deps"] = float(len(deps))
        obs["transitive_dependents"] = float(len(dependents))
        obs["vulnerable_deps"] = float(len(deps & vulnerable))
        obs["open_vulns"] = float(sum(1 for v in vulns if v["fixed_at"] is None))
        obs["high_or_critical_vulns"] = float(sum(1 for v in vulns if v["fixed_at"] is None and v["severity"] in ("high", "critical")))
        if fixes:
            n = len(fixes)
            obs["median_days_to_fix"] = fixes[n // 2] if n % 2 else (fixes[n // 2 - 1] + fixes[n // 2]) / 2.0
        crit = criticality(obs)
        is_crit = crit >= SCORE_THRESHOLD or len(dependents) >= DEPENDENTS_THRESHOLD
        if is_crit:
            newest = {}
            for a in p["atts"]:
                asserted = ts(a["asserted_at"])
                expires = ts(a["expires_at"]) if a.get("expires_at") else None
                if asserted > as_of or (expires is not None and expires <= as_of):
                    continue
                key = a["metric_id"]
                if key not in newest or (asserted, a["id"]) > newest[key][0]:
                    newest[key] = ((asserted, a["id"]), a["value"])
            for k, (_, v) in newest.items():
                obs[k] = float(v)
        scores = {}
        for focus in ("security", "activity", "relevance"):
            c = category(obs, registry, focus)
            if c is not None:
                scores[focus] = c
        out[cid] = {"criticality": crit, "is_critical": is_crit, "category_scores": scores,
                    "transitive_dependents": len(dependents)}
    return out


def table(scored):
    width = max([len("project")] + [len(c) for c in scored])
    fmt = lambda v: "-" if v is None else f"{v:.4f}"
    lines = [f"{'project':<{width}}  {'criticality':>11}  {'critical':<8}  {'security':>8}  {'activity':>8}  {'relevance':>9}"]
    for cid, s in sorted(scored.items()):
        cs = s["category_scores"]
        lines.append(
            f"{cid:<{width}}  {fmt(s['criticality']):>11}  {('yes' if s['is_critical'] else 'no'):<8}  "
            f"{fmt(cs.get('security')):>8}  {fmt(cs.get('activity')):>8}  {fmt(cs.get('relevance')):>9}")
    return "\n".join(lines) + "\n"


def main(root):
    registry = json.load(open(os.path.join(root, "crates/core/data/metric_registry.json")))["metrics"]
    for version, as_of in (("v1", "2024-01-01T00:00:00Z"), ("v2", "2024-02-01T00:00:00Z")):
        projects = load_bundle(os.path.join(root, f"fixtures/corpus-{version}"))
        # fixture facts are all fetched before the scoring instant
        assert all(ts(p["stats"]["fetched_at"]) <= ts(as_of) for p in projects.values())
        scored = score_bundle(projects, registry, ts(as_of))
        golden = [{"project": cid, "computed_at": as_of, "criticality": s["criticality"],
                   "is_critical": s["is_critical"], "category_scores": s["category_scores"]}
                  for cid, s in sorted(scored.items())]
        with open(os.path.join(root, f"fixtures/golden/snapshots-{version}.json"), "w") as f:
            f.write(json.dumps(golden, indent=2) + "\n")
        with open(os.path.join(root, f"fixtures/golden/score-table-{version}.txt"), "w") as f:
            f.write(table(scored))
        for cid, s in sorted(scored.items()):
            print(version, cid, repr(s["criticality"]), s["is_critical"], s["category_scores"], s["transitive_dependents"])


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else ".")
