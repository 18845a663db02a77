#!/usr/bin/env python3
"""Regenerates tests/fixtures/sweep_model.json and sweep_eval.jsonl.

The model scripts one utterance with three potential entity spans whose
start-token logit gaps are -1, +1 and +3, so a bias grid of {0, 2, 4}
emits one more span per step: first the correct g1/tA span, then the
correct g2/tB span, then a spurious s1/tC span.
"""
import json
import pathlib

VOCAB = ["w1", "g1", "w2", "g2", "w3", "s1", " ", "<",
         "tA>", "tA>>", "tB>", "tB>>", "tC>", "tC>>", "</s>"]
OFF = -100.0


def logits(**hot):
    row = [OFF] * len(VOCAB)
    for token, value in hot.items():
        name = {"SP": " ", "LT": "<", "EOS": "</s>"}.get(token, token)
        row[VOCAB.index(name)] = value
    return row


def row(suffix, **hot):
    return {"context_suffix": suffix, "logits": logits(**hot)}


ROWS = [
    row(["w1"], SP=1.0),
    row(["w1", " "], LT=1.0, g1=0.0),          # gap -1: emitted at bias > -1
    row(["w1", " ", "<"], **{"tA>": 1.0}),
    row(["tA>"], g1=1.0),
    row(["tA>", "g1"], LT=1.0),
    row(["g1", "<"], **{"tA>>": 1.0}),
    row(["tA>>"], SP=1.0),
    row([" ", "g1"], SP=1.0),
    row(["tA>>", " "], w2=1.0),
    row(["g1", " "], w2=1.0),
    row(["w2"], SP=1.0),
    row(["w2", " "], LT=0.0, g2=1.0),          # gap +1: emitted at bias > 1
    row(["w2", " ", "<"], **{"tB>": 1.0}),
    row(["tB>"], g2=1.0),
    row(["tB>", "g2"], LT=1.0),
    row(["g2", "<"], **{"tB>>": 1.0}),
    row(["tB>>"], SP=1.0),
    row([" ", "g2"], SP=1.0),
    row(["tB>>", " "], w3=1.0),
    row(["g2", " "], w3=1.0),
    row(["w3"], SP=1.0),
    row(["w3", " "], LT=-1.0, s1=2.0),         # gap +3: emitted at bias > 3
    row(["w3", " ", "<"], **{"tC>": 1.0}),
    row(["tC>"], s1=1.0),
    row(["tC>", "s1"], LT=1.0),
    row(["s1", "<"], **{"tC>>": 1.0}),
    row(["tC>>"], EOS=1.0),
    row([" ", "s1"], EOS=1.0),
]

MODEL = {
    "vocab": VOCAB,
    "eos": "</s>",
    "start_token": "<",
    "rows": ROWS,
    "default_logits": logits(w1=1.0),
}

RECORD = {
    "id": "sweep-0",
    "text": "w1 g1 w2 g2 w3 s1",
    "entities": [
        {"start_char": 3, "end_char": 5, "label": "tA"},
        {"start_char": 9, "end_char": 11, "label": "tB"},
    ],
    "prompt": [
        {"label": "tA", "polarity": "pos"},
        {"label": "tB", "polarity": "pos"},
        {"label": "tC", "polarity": "neg"},
    ],
}


def main():
    fixtures = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures"
    fixtures.mkdir(parents=True, exist_ok=True)
    (fixtures / "sweep_model.json").write_text(json.dumps(MODEL, indent=2) + "\n")
    (fixtures / "sweep_eval.jsonl").write_text(json.dumps(RECORD) + "\n")
    print("wrote", fixtures / "sweep_model.json")
    print("wrote", fixtures / "sweep_eval.jsonl")


if __name__ == "__main__":
    main()
