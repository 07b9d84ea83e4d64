"""Download and convert the small real networks used for the modularity check.

Writes ``<name>.edges`` (0-based edge list) and ``<name>.labels.json`` (node
partition) into ``--out`` (default ``data/``), which the acceptance suite reads
through ``MARKSTAB_DATA``.

football  GML from Newman's network data page; node ``value`` is the conference.
dolphins  GML from the same page; it carries no group labels, so pass
          ``--labels dolphins=path.json`` with a JSON list of per-node labels.
risk      no public download is known to this script; pass
          ``--edges risk=path`` and ``--labels risk=path.json``.

The SHA-256 of every downloaded archive is printed so the download can be
pinned after the first fetch (``--expect name=sha256``).
"""
from __future__ import annotations

import argparse
import hashlib
import io
import json
import re
import sys
import urllib.request
import zipfile
from pathlib import Path

SOURCES = {
    "football": "http://www-personal.umich.edu/~mejn/netdata/football.zip",
    "dolphins": "http://www-personal.umich.edu/~mejn/netdata/dolphins.zip",
}


def parse_gml(text: str) -> tuple[list[int], dict[int, str], list[tuple[int, int]]]:
    """Node ids, optional ``value`` attributes and edges of a flat GML graph."""
    nodes, values, edges = [], {}, []
    for block in re.finditer(r"node\s*\[(.*?)\]", text, re.S):
        body = block.group(1)
        nid = int(re.search(r"\bid\s+(-?\d+)", body).group(1))
        nodes.append(nid)
        val = re.search(r"\bvalue\s+(\S+)", body)
        if val:
            values[nid] = val.group(1).strip('"')
    for block in re.finditer(r"edge\s*\[(.*?)\]", text, re.S):
        body = block.group(1)
        edges.append((int(re.search(r"\bsource\s+(-?\d+)", body).group(1)),
                      int(re.search(r"\btarget\s+(-?\d+)", body).group(1))))
    return nodes, values, edges


def write_graph(out: Path, name: str, nodes, edges, labels) -> None:
    index = {v: i for i, v in enumerate(sorted(nodes))}
    pairs = sorted({tuple(sorted((index[u], index[v]))) for u, v in edges if u != v})
    lines = [f"n={len(index)}"] + [f"{u} {v}" for u, v in pairs]
    (out / f"{name}.edges").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if labels is not None:
        write_labels(out / f"{name}.labels.json", labels)
    print(f"{name}: n={len(index)} m={len(pairs)}")


def write_labels(path: Path, labels) -> None:
    """Partition file with integer labels assigned in order of first appearance."""
    if isinstance(labels, dict):
        labels = labels["labels"]
    ids: dict = {}
    dense = [ids.setdefault(x, len(ids)) for x in labels]
    path.write_text(json.dumps({"n": len(dense), "labels": dense}) + "\n", encoding="utf-8")


def fetch(name: str, expect: str | None) -> str:
    with urllib.request.urlopen(SOURCES[name], timeout=60) as resp:
        blob = resp.read()
    digest = hashlib.sha256(blob).hexdigest()
    print(f"{name}: sha256 {digest}")
    if expect and digest != expect:
        raise SystemExit(f"{name}: checksum mismatch (expected {expect})")
    with zipfile.ZipFile(io.BytesIO(blob)) as zf:
        gml = next(n for n in zf.namelist() if n.endswith(".gml"))
        return zf.read(gml).decode("utf-8", errors="replace")


def pairs_arg(items) -> dict[str, str]:
    out = {}
    for item in items or []:
        key, _, value = item.partition("=")
        out[key] = value
    return out


def main() -> int:
    ap = argparse.ArgumentParser(description="fetch modularity-check datasets")
    ap.add_argument("--out", default="data")
    ap.add_argument("--labels", nargs="*", help="name=path.json overrides")
    ap.add_argument("--edges", nargs="*", help="name=path edge lists for datasets without a download")
    ap.add_argument("--expect", nargs="*", help="name=sha256 pins")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    labels, edges, expect = pairs_arg(args.labels), pairs_arg(args.edges), pairs_arg(args.expect)

    for name in SOURCES:
        try:
            nodes, values, pairs = parse_gml(fetch(name, expect.get(name)))
        except OSError as exc:
            print(f"{name}: download failed ({exc})", file=sys.stderr)
            continue
        if name in labels:
            lab = json.loads(Path(labels[name]).read_text(encoding="utf-8"))
        elif values:
            lab = [values[v] for v in sorted(nodes)]
        else:
            lab = None
            print(f"{name}: no labels in the source; supply --labels {name}=path.json", file=sys.stderr)
        write_graph(out, name, nodes, pairs, lab)

    for name, path in edges.items():
        text = Path(path).read_text(encoding="utf-8")
        (out / f"{name}.edges").write_text(text, encoding="utf-8")
        if name in labels:
            write_labels(out / f"{name}.labels.json", json.loads(Path(labels[name]).read_text(encoding="utf-8")))
        print(f"{name}: copied from {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
