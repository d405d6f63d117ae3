#!/usr/bin/env python3
"""Regenerates the bundled corpora under data/.

toy/        bilingual 50-subject vocabulary, 200 records (120 train, 40 dev,
            40 test), a de/en glossary for the mock LLM and a pipeline config.
separable/  50 subjects x 4 documents over disjoint token sets; three
            documents per subject for training, one held out with the
            subject label planted in its title.

Output is a pure function of the seeds below.
"""

import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "data"

ONSETS = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "kl", "st", "tr"]
VOWELS_DE = ["a", "e", "i", "o", "u", "ä", "ö", "ü", "ei", "au"]
VOWELS_EN = ["a", "e", "i", "o", "u", "ea", "oo", "ai"]
CODAS = ["", "n", "r", "l", "s", "t", "m", "nd", "rk"]


class WordMaker:
    def __init__(self, rng, vowels):
        self.rng = rng
        self.vowels = vowels
        self.seen = set()

    def make(self, syllables):
        while True:
            word = "".join(
                self.rng.choice(ONSETS) + self.rng.choice(self.vowels) + self.rng.choice(CODAS)
                for _ in range(syllables)
            )
            if word not in self.seen and len(word) >= 4:
                self.seen.add(word)
                return word


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8", newline="\n") as out:
        for record in records:
            out.write(json.dumps(record, ensure_ascii=False) + "\n")


def toy():
    rng = random.Random(20240817)
    de = WordMaker(rng, VOWELS_DE)
    en = WordMaker(rng, VOWELS_EN)
    en.seen = de.seen  # keep the two languages' word sets disjoint

    subjects = []
    glossary = []
    for i in range(50):
        length = 1 if i % 3 == 0 else 2
        label_de = [de.make(3) for _ in range(length)]
        label_en = [en.make(3) for _ in range(length)]
        topic_de = [de.make(2) for _ in range(3)]
        topic_en = [en.make(2) for _ in range(3)]
        glossary += list(zip(label_de + topic_de, label_en + topic_en))
        subjects.append({
            "id": f"t{i + 1:02d}",
            "label": {"de": " ".join(w.capitalize() for w in label_de),
                      "en": " ".join(label_en)},
            "topic": {"de": topic_de, "en": topic_en},
        })
    noise_de = [de.make(2) for _ in range(40)]
    noise_en = [en.make(2) for _ in range(40)]
    glossary += list(zip(noise_de, noise_en))
    noise = {"de": noise_de, "en": noise_en}

    # subjects are grouped into ten themes that share most of their wording,
    # so only the few subject-specific words and the labels tell them apart
    themes = [list(range(t * 5, t * 5 + 5)) for t in range(10)]
    theme_words = []
    for _ in themes:
        words_de = [de.make(2) for _ in range(10)]
        words_en = [en.make(2) for _ in range(10)]
        glossary.extend(zip(words_de, words_en))
        theme_words.append({"de": words_de, "en": words_en})

    def record(index):
        lang = "de" if rng.random() < 0.7 else "en"
        t = rng.randrange(len(themes))
        count = rng.choice([1, 2, 2, 3])
        chosen = sorted(rng.sample(themes[t], count))
        main = subjects[chosen[0]]
        title_words = []
        if rng.random() < 0.5:
            title_words += main["label"][lang].split()
        title_words += rng.sample(theme_words[t][lang], 2)
        body = rng.sample(theme_words[t][lang], 5)
        for s in chosen:
            body += rng.sample(subjects[s]["topic"][lang], 1)
            if rng.random() < 0.5:
                body += subjects[s]["label"][lang].split()
        body += rng.sample(noise[lang], 5)
        rng.shuffle(body)
        title = " ".join(title_words)
        title = title[0].upper() + title[1:]
        abstract = " ".join(body).capitalize() + "." if rng.random() < 0.9 else ""
        return {
            "id": f"toy{index:03d}",
            "title": title,
            "abstract": abstract,
            "language": lang,
            "subjects": [subjects[s]["id"] for s in chosen],
        }

    records = [record(i) for i in range(200)]
    out = ROOT / "toy"
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "vocab.tsv", "w", encoding="utf-8", newline="\n") as f:
        f.write("id\tlabel_de\tlabel_en\n")
        for s in subjects:
            f.write(f"{s['id']}\t{s['label']['de']}\t{s['label']['en']}\n")
    with open(out / "glossary.tsv", "w", encoding="utf-8", newline="\n") as f:
        f.write("de\ten\n")
        for a, b in glossary:
            f.write(f"{a}\t{b}\n")
    write_jsonl(out / "train.jsonl", records[:120])
    write_jsonl(out / "dev.jsonl", records[120:160])
    write_jsonl(out / "test.jsonl", records[160:])


def separable():
    rng = random.Random(7)
    words = WordMaker(rng, VOWELS_EN)
    subjects = []
    for i in range(50):
        subjects.append({
            "id": f"p{i + 1:02d}",
            "label": f"{words.make(3)} {words.make(3)}",
            "tokens": [words.make(2) for _ in range(8)],
        })
    train, heldout = [], []
    for i, s in enumerate(subjects):
        for d in range(4):
            picked = rng.sample(s["tokens"], 6)
            doc = {
                "id": f"sep{i + 1:02d}-{d}",
                "title": " ".join(picked[:2]),
                "abstract": " ".join(picked[2:]),
                "language": "en",
                "subjects": [s["id"]],
            }
            if d == 3:
                doc["title"] = s["label"] + " " + doc["title"]
                heldout.append(doc)
            else:
                train.append(doc)
    out = ROOT / "separable"
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "vocab.tsv", "w", encoding="utf-8", newline="\n") as f:
        f.write("id\tlabel_en\n")
        for s in subjects:
            f.write(f"{s['id']}\t{s['label']}\n")
    write_jsonl(out / "train.jsonl", train)
    write_jsonl(out / "heldout.jsonl", heldout)


if __name__ == "__main__":
    toy()
    separable()
