#!/usr/bin/env python3
"""Regenerates the golden end-to-end fixture under tests/fixtures/.

fixture_dataset.jsonl: 20 records, one gold entity each with a unique
label t00..t19. fixture_model.json: a table model that routes on the
record's positive prompt label and emits a scripted prediction per
record: exact matches for records 0-9, then wrong-word tags, an ASR
substitution, an insertion, an off-prompt label, a miss, an unclosed
marker, a duplicated span, and a mislabeled span.

The frozen golden_eval.json is produced by running the CLI pipeline
(augment --balanced, decode, evaluate) once and cross-checking against
scripts/score_reference.py.
"""
import json
import pathlib

N = 20


def entity_word(i):
    return "e%02d" % i


def label(i):
    return "t%02d" % i


def record(i):
    word = entity_word(i)
    text = "the %s went home" % word
    return {
        "id": "rec-%02d" % i,
        "text": text,
        "entities": [
            {"start_char": 4, "end_char": 4 + len(word), "label": label(i)}
        ],
    }


def prediction_tokens(i):
    """Token sequence (model vocab strings) for record i's prediction."""
    w = entity_word(i)
    t = label(i) + ">"
    tt = label(i) + ">>"
    if i <= 9:  # exact match
        return ["the", " ", "<", t, w, "<", tt, " ", "went", " ", "home"]
    if i <= 12:  # tags the wrong word
        return ["the", " ", w, " ", "went", " ", "<", t, "home", "<", tt]
    if i == 13:  # ASR substitution inside the entity
        return ["the", " ", "<", t, "exx", "<", tt, " ", "went", " ", "home"]
    if i == 14:  # correct entity plus an inserted word
        return ["the", " ", "<", t, w, "<", tt, " ", "went", " ", "home",
                " ", "now"]
    if i == 15:  # off-prompt label
        return ["the", " ", "<", "ghost>", w, "<", "ghost>>", " ", "went",
                " ", "home"]
    if i == 16:  # entity missed entirely
        return ["the", " ", w, " ", "went", " ", "home"]
    if i == 17:  # unclosed marker: unparseable line
        return ["the", " ", "<", t, w, " ", "went", " ", "home"]
    if i == 18:  # same span predicted twice
        return ["the", " ", "<", t, w, "<", tt, " ", "went", " ", "<", t, w,
                "<", tt]
    # i == 19: correct surface, wrong (foreign) label
    return ["the", " ", "<", "t18>", w, "<", "t18>>", " ", "went", " ",
            "home"]


def main():
    fixtures = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures"
    fixtures.mkdir(parents=True, exist_ok=True)

    records = [record(i) for i in range(N)]
    with open(fixtures / "fixture_dataset.jsonl", "w") as f:
        for r in records:
            f.write(json.dumps(r) + "\n")

    vocab = ["the", "went", "home", "now", " ", "<", "exx", "</s>",
             "ghost>", "ghost>>"]
    vocab += [entity_word(i) for i in range(N)]
    vocab += [label(i) + ">" for i in range(N)]
    vocab += [label(i) + ">>" for i in range(N)]
    index = {tok: k for k, tok in enumerate(vocab)}
    OFF = -100.0

    def logits(hot):
        row = [OFF] * len(vocab)
        row[index[hot]] = 1.0
        return row

    rows = []
    for i in range(N):
        tokens = prediction_tokens(i)
        cond = label(i)
        rec_rows = [{
            "context_suffix": tokens[:pos],
            "requires_positive": cond,
            "logits": logits(tok),
        } for pos, tok in enumerate(tokens)]
        rec_rows.append({
            "context_suffix": tokens,
            "requires_positive": cond,
            "logits": logits("</s>"),
        })
        # Longest suffix first: rows are matched in file order and a
        # short prefix row would shadow the longer ones.
        rows.extend(reversed(rec_rows))

    model = {
        "vocab": vocab,
        "eos": "</s>",
        "start_token": "<",
        "rows": rows,
        "default_logits": logits("</s>"),
    }
    with open(fixtures / "fixture_model.json", "w") as f:
        json.dump(model, f, indent=1)
        f.write("\n")
    print("wrote", fixtures / "fixture_dataset.jsonl")
    print("wrote", fixtures / "fixture_model.json", "(%d rows)" % len(rows))


if __name__ == "__main__":
    main()
