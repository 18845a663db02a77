#!/usr/bin/env python3
"""Independent scorer used to cross-check EvalReport snapshots.

Implements the scoring definitions directly (word edit distance, strict
surface+label multiset matching, off-prompt counting) with none of the
library code, so frozen fixture reports can be verified from scratch:

    python3 scripts/score_reference.py prompted.jsonl pred.txt
"""
import json
import re
import sys
from collections import Counter


def normalize(s):
    s = s.lower()
    words = []
    for w in s.split():
        w = w.strip("!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~")
        if w:
            words.append(w)
    return words


def parse_span(s):
    """Strict span-marker parse; raises ValueError on bad markup."""
    text = []
    entities = []
    open_entity = None
    i = 0
    while i < len(s):
        c = s[i]
        if c == "\\":
            if i + 1 < len(s):
                text.append(s[i + 1])
                i += 2
            else:
                text.append("\\")
                i += 1
            continue
        if c != "<":
            text.append(c)
            i += 1
            continue
        j = i + 1
        while j < len(s) and s[j] not in "<>":
            j += 1
        if j >= len(s) or s[j] == "<":
            raise ValueError("unterminated marker")
        lab = s[i + 1:j]
        if not lab or re.search(r"[<>()\\\\]", lab):
            raise ValueError("bad label")
        closer = j + 1 < len(s) and s[j + 1] == ">"
        if closer:
            if open_entity is None or open_entity[0] != lab:
                raise ValueError("bad closer")
            start = open_entity[1]
            if start == len(text):
                raise ValueError("empty span")
            entities.append(("".join(text[start:]), lab))
            open_entity = None
            i = j + 2
        else:
            if open_entity is not None:
                raise ValueError("nested")
            open_entity = (lab, len(text))
            i = j + 1
    if open_entity is not None:
        raise ValueError("unclosed")
    return "".join(text), entities


def edit_distance(ref, hyp):
    d = [[0] * (len(hyp) + 1) for _ in range(len(ref) + 1)]
    for i in range(len(ref) + 1):
        d[i][0] = i
    for j in range(len(hyp) + 1):
        d[0][j] = j
    for i in range(1, len(ref) + 1):
        for j in range(1, len(hyp) + 1):
            d[i][j] = min(d[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1]),
                          d[i][j - 1] + 1,
                          d[i - 1][j] + 1)
    return d[len(ref)][len(hyp)]


def main():
    gold_path, pred_path = sys.argv[1], sys.argv[2]
    gold = [json.loads(l) for l in open(gold_path) if l.strip()]
    preds = [l.rstrip("\n") for l in open(pred_path)]
    assert len(gold) == len(preds), "length mismatch"

    edits = 0
    ref_words = 0
    tp = fp = fn = 0
    predicted = off_prompt = 0
    parse_failures = 0
    per_type = {}

    for rec, line in zip(gold, preds):
        try:
            text, ents = parse_span(line)
        except ValueError:
            text, ents = "", []
            parse_failures += 1

        ref = normalize(rec["text"])
        hyp = normalize(text)
        edits += edit_distance(ref, hyp)
        ref_words += len(ref)

        gold_pairs = Counter(
            (" ".join(normalize(rec["text"][e["start_char"]:e["end_char"]])),
             e["label"]) for e in rec["entities"])
        pred_pairs = Counter(
            (" ".join(normalize(s)), lab) for s, lab in ents)
        for key in gold_pairs | pred_pairs:
            matched = min(gold_pairs[key], pred_pairs[key])
            label = key[1]
            stats = per_type.setdefault(label, [0, 0, 0])
            stats[0] += matched
            stats[1] += pred_pairs[key] - matched
            stats[2] += gold_pairs[key] - matched
            tp += matched
            fp += pred_pairs[key] - matched
            fn += gold_pairs[key] - matched

        prompt_labels = {e["label"] for e in rec.get("prompt", [])}
        predicted += len(ents)
        off_prompt += sum(1 for _, lab in ents if lab not in prompt_labels)

    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    print(json.dumps({
        "n_samples": len(gold),
        "parse_failures": parse_failures,
        "wer": edits / ref_words,
        "edits": edits,
        "ref_words": ref_words,
        "tp": tp, "fp": fp, "fn": fn,
        "precision": precision, "recall": recall, "f1": f1,
        "predicted_entities": predicted,
        "off_prompt_entities": off_prompt,
        "hallucination_rate": off_prompt / predicted if predicted else 0.0,
        "per_type": {k: {"tp": v[0], "fp": v[1], "fn": v[2]}
                     for k, v in sorted(per_type.items())},
    }, indent=2))


if __name__ == "__main__":
    main()
