"""Build the 4-class Reuters-21578 TSV fixture used by the cli acceptance tests.

Source: the `reuters-21578-json` npm package (Reuters-21578, Distribution 1.0).
Keeps single-topic documents with a non-empty body from four topics, taking the
first PER_CLASS documents of each topic in article-id order.

    npm pack reuters-21578-json && tar xzf reuters-21578-json-*.tgz
    python3 scripts/make_reuters4.py package/data/full > crates/cli/tests/data/reuters4.tsv
"""
import glob
import json
import re
import sys

TOPICS = ["crude", "interest", "money-fx", "trade"]
PER_CLASS = 200


def main(src):
    docs = []
    for path in sorted(glob.glob(f"{src}/*.json")):
        with open(path) as fh:
            docs.extend(json.load(fh))
    docs.sort(key=lambda d: int(d["id"]))
    taken = {t: 0 for t in TOPICS}
    for d in docs:
        topics = d.get("topics") or []
        body = d.get("body") or ""
        if len(topics) != 1 or topics[0] not in taken or not body.strip():
            continue
        t = topics[0]
        if taken[t] >= PER_CLASS:
            continue
        taken[t] += 1
        text = re.sub(r"\s+", " ", f"{d.get('title', '')} {body}").strip()
        print(f"{t}\t{text}")


if __name__ == "__main__":
    main(sys.argv[1])
