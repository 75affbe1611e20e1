#!/usr/bin/env python3
"""Convert public fact-verification releases into the evaluator's JSONL format.

Output lines look like

    {"id": "...", "claim": "...", "label": "SUPPORTS", "evidence": "...", "hops": 2, "dataset": "hover"}

`evidence` is omitted when the source text is unavailable (open-book runs do
not need it). `hops` is written for HoVer only.

Filtering rules. The FEVEROUS and SciFact filters are this script's own
reading of the usual setup, not a reproduction of any published filter code:

  hover     every record is kept; NOT_SUPPORTED maps to REFUTES.
  feverous  records labelled NOT ENOUGH INFO are dropped; a record is kept only
            if every element of every evidence set is a sentence id
            ("<page>_sentence_<n>"), so no table cells, list items or
            section titles are needed.
  scifact   claims with no rationale are dropped; a claim is kept only if all
            of its rationales agree on one label and every cited document it
            draws rationales from is present in the corpus. Evidence is the
            rationale sentences in document order.
"""

import argparse
import json
import sys
from pathlib import Path

LABELS = {
    "SUPPORTS": "SUPPORTS",
    "SUPPORTED": "SUPPORTS",
    "SUPPORT": "SUPPORTS",
    "REFUTES": "REFUTES",
    "NOT_SUPPORTED": "REFUTES",
    "CONTRADICT": "REFUTES",
}


def read_json_or_jsonl(path):
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("["):
        return json.loads(stripped)
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def load_pages(path):
    """JSONL of {"id": ..., "text": ...} or {"title": ..., "sentences": [...]}."""
    pages = {}
    if path is None:
        return pages
    for rec in read_json_or_jsonl(path):
        if "sentences" in rec:
            for i, s in enumerate(rec["sentences"]):
                pages[(rec["title"], i)] = s
        else:
            pages[rec["id"]] = rec["text"]
    return pages


def hover(records, pages):
    for rec in records:
        out = {
            "id": rec["uid"],
            "claim": rec["claim"],
            "label": LABELS[rec["label"]],
            "hops": rec["num_hops"],
            "dataset": "hover",
        }
        sents = [pages.get((title, idx)) for title, idx in rec.get("supporting_facts", [])]
        if sents and all(s is not None for s in sents):
            out["evidence"] = "\n\n".join(sents)
        yield out


def is_sentence_element(element):
    _, _, rest = element.partition("_sentence_")
    return rest.isdigit()


def feverous(records, pages):
    for rec in records:
        if rec.get("label") not in ("SUPPORTS", "REFUTES"):
            continue
        sets = [ev.get("content", []) for ev in rec.get("evidence", [])]
        if not sets or not all(s and all(is_sentence_element(e) for e in s) for s in sets):
            continue
        out = {
            "id": rec["id"],
            "claim": rec["claim"],
            "label": rec["label"],
            "dataset": "feverous",
        }
        first = sets[0]
        if all(e in pages for e in first):
            out["evidence"] = "\n\n".join(pages[e] for e in first)
        yield out


def scifact(records, corpus):
    docs = {str(d["doc_id"]): d for d in corpus}
    for rec in records:
        evidence = rec.get("evidence") or {}
        if not evidence:
            continue
        labels = {r["label"] for rationales in evidence.values() for r in rationales}
        if len(labels) != 1 or any(doc_id not in docs for doc_id in evidence):
            continue
        paragraphs = []
        for doc_id in sorted(evidence, key=lambda d: (len(d), d)):
            abstract = docs[doc_id]["abstract"]
            idx = sorted({i for r in evidence[doc_id] for i in r["sentences"]})
            paragraphs.append(" ".join(abstract[i].strip() for i in idx))
        yield {
            "id": rec["id"],
            "claim": rec["claim"],
            "label": LABELS[labels.pop()],
            "evidence": "\n\n".join(paragraphs),
            "dataset": "scifact",
        }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("dataset", choices=["hover", "feverous", "scifact"])
    p.add_argument("input", help="claims file (JSON array or JSONL)")
    p.add_argument("output", help="JSONL output path, or - for stdout")
    p.add_argument("--pages", help="hover/feverous: sentence text (JSONL)")
    p.add_argument("--corpus", help="scifact: corpus.jsonl")
    args = p.parse_args(argv)

    records = read_json_or_jsonl(args.input)
    if args.dataset == "hover":
        rows = hover(records, load_pages(args.pages))
    elif args.dataset == "feverous":
        rows = feverous(records, load_pages(args.pages))
    else:
        if not args.corpus:
            p.error("scifact needs --corpus")
        rows = scifact(records, read_json_or_jsonl(args.corpus))

    f = sys.stdout if args.output == "-" else open(args.output, "w", encoding="utf-8")
    kept = 0
    for row in rows:
        f.write(json.dumps(row, ensure_ascii=False) + "\n")
        kept += 1
    if f is not sys.stdout:
        f.close()
    print(f"{args.dataset}: kept {kept} of {len(records)} records", file=sys.stderr)


if __name__ == "__main__":
    main()
