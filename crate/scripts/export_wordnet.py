#!/usr/bin/env python3
"""Export WordNet noun hypernym edges and a word -> synset map as TSV.

Reads the Princeton WordNet 3.0 dictionary files (``data.noun`` and
``index.noun``) directly, so no NLTK installation is needed. Synset names
follow the NLTK convention ``<first lemma lowercased>.n.<sense:02>``.

Outputs (in ``--out``):
  noun_edges.tsv   child<TAB>parent, one line per direct hypernym or
                   instance-hypernym pointer
  noun_synsets.tsv word<TAB>synset1,synset2,... for every noun lemma

Usage:
  python3 scripts/export_wordnet.py --dict /path/to/wordnet-3.0 --out data/wordnet
"""

import argparse
import os
import sys


def read_index(path):
    """lemma -> list of synset offsets in sense order."""
    senses = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("  "):
                continue
            fields = line.split()
            lemma = fields[0]
            synset_cnt = int(fields[2])
            p_cnt = int(fields[3])
            # lemma pos synset_cnt p_cnt [ptr_symbol]*p_cnt sense_cnt tagsense_cnt offsets...
            offsets = fields[4 + p_cnt + 2 :]
            assert len(offsets) == synset_cnt, line
            senses[lemma] = offsets
    return senses


def read_data(path):
    """offset -> (first lemma, [hypernym offsets])"""
    synsets = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("  "):
                continue
            fields = line.split(" | ")[0].split()
            offset = fields[0]
            w_cnt = int(fields[3], 16)
            lemma = fields[4].lower()
            pos = 4 + 2 * w_cnt
            p_cnt = int(fields[pos])
            parents = []
            for i in range(p_cnt):
                sym, target, tpos = fields[pos + 1 + 4 * i : pos + 4 + 4 * i]
                if sym in ("@", "@i") and tpos == "n":
                    parents.append(target)
            synsets[offset] = (lemma, parents)
    return synsets


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dict", required=True, help="WordNet dict directory")
    ap.add_argument("--out", required=True, help="output directory")
    args = ap.parse_args()

    senses = read_index(os.path.join(args.dict, "index.noun"))
    synsets = read_data(os.path.join(args.dict, "data.noun"))

    names = {}
    for offset, (lemma, _) in synsets.items():
        sense = senses[lemma].index(offset) + 1
        names[offset] = "%s.n.%02d" % (lemma, sense)
    if len(set(names.values())) != len(names):
        sys.exit("synset names are not unique")

    os.makedirs(args.out, exist_ok=True)
    n_edges = 0
    with open(os.path.join(args.out, "noun_edges.tsv"), "w", encoding="utf-8") as out:
        out.write("# WordNet 3.0 noun hypernym + instance-hypernym edges: child<TAB>parent\n")
        for offset in sorted(synsets):
            for parent in synsets[offset][1]:
                out.write("%s\t%s\n" % (names[offset], names[parent]))
                n_edges += 1
    with open(os.path.join(args.out, "noun_synsets.tsv"), "w", encoding="utf-8") as out:
        out.write("# WordNet 3.0 noun lemma -> synsets in sense order\n")
        for lemma in sorted(senses):
            out.write("%s\t%s\n" % (lemma, ",".join(names[o] for o in senses[lemma])))
    print("synsets=%d direct_edges=%d lemmas=%d" % (len(synsets), n_edges, len(senses)))


if __name__ == "__main__":
    main()
