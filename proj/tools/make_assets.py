#!/usr/bin/env python3
# Copyright 2026 The gramattn Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates the bundled data/ assets.

Produces a synthetic, lowercased, whitespace-tokenized sentiment corpus in the
SST-2 TSV layout (sentence<TAB>label), a word->tag lexicon covering every word
the generator can emit, and a subword vocabulary whose continuation pieces use
the `##` prefix. Output is a pure function of --seed.

    python3 tools/make_assets.py --out data
"""

import argparse
import os
import random

DET = ["the", "a", "this", "that", "every", "some", "its", "their", "his", "her", "our", "another"]
PRON = ["i", "we", "they", "he", "she", "you", "everyone", "nobody", "critics", "audiences"]
PROPN = ["john", "mary", "paris", "london", "hollywood", "spielberg", "tarantino", "nolan",
         "streep", "hanks", "disney", "pixar", "sundance", "cannes", "broadway", "chicago",
         "kubrick", "scorsese", "hitchcock", "denzel"]
NOUN = ["cat", "film", "movie", "story", "plot", "script", "actor", "actress", "director",
        "cast", "performance", "ending", "soundtrack", "dialogue", "scene", "sequel", "premise",
        "camera", "comedy", "drama", "thriller", "romance", "documentary", "character", "hero",
        "villain", "music", "score", "screenplay", "picture", "production", "effort", "debut",
        "narrative", "pacing", "tone", "atmosphere", "humor", "twist", "climax", "finale",
        "adaptation", "remake", "feature", "cinema", "experience", "journey", "tale", "portrait",
        "satire", "spectacle", "editing", "direction", "writing", "acting", "lead", "ensemble",
        "premiere", "trailer", "studio", "budget", "audience", "critic", "theater", "screen",
        "moment", "minute", "hour", "night", "year", "world", "life", "family", "friend",
        "love", "war", "city", "town", "child", "mother", "father", "heart", "mind", "idea",
        "message", "vision", "style", "mood", "effect", "costume", "set", "stunt", "voice",
        "song", "dance", "joke", "line", "chapter", "season", "episode", "series", "animation",
        "cartoon", "horror", "western", "musical", "mystery", "fantasy", "fable", "epic",
        "melodrama", "noir", "farce", "biopic", "saga"]
ADJ_POS = ["good", "great", "wonderful", "brilliant", "beautiful", "charming", "delightful",
           "moving", "funny", "clever", "smart", "fresh", "engaging", "gripping", "powerful",
           "stunning", "superb", "excellent", "lovely", "touching", "heartfelt", "witty",
           "inventive", "original", "memorable", "fascinating", "compelling", "impressive",
           "magnificent", "remarkable", "thoughtful", "elegant", "vibrant", "joyous", "warm",
           "tender", "gorgeous", "hilarious", "masterful", "splendid", "terrific", "enjoyable",
           "entertaining", "satisfying", "inspiring", "rich", "graceful", "sharp", "bold",
           "lively", "wondrous", "glorious", "marvelous", "fabulous", "sublime", "radiant"]
ADJ_NEG = ["bad", "awful", "terrible", "boring", "dull", "tedious", "stupid", "lame", "weak",
           "bland", "clumsy", "messy", "pointless", "predictable", "forgettable", "tiresome",
           "annoying", "painful", "dreadful", "horrible", "mediocre", "lifeless", "shallow",
           "silly", "sloppy", "stale", "tired", "hollow", "flat", "confusing", "ugly", "crude",
           "lousy", "poor", "miserable", "disappointing", "unfunny", "overlong", "pretentious",
           "incoherent", "listless", "joyless", "grating", "sluggish", "limp", "wretched",
           "dismal", "insipid", "vapid", "cheap", "contrived", "bloated", "murky", "numbing",
           "tepid", "trite"]
ADJ_NEU = ["long", "short", "new", "old", "french", "american", "british", "young", "small",
           "big", "quiet", "loud", "dark", "familiar", "modern", "classic", "recent", "early",
           "late", "first", "final", "second", "latest", "independent", "low", "high", "main",
           "whole", "entire", "other", "local", "foreign", "animated", "historical", "political",
           "romantic", "digital", "silent", "black", "white"]
# Verbs: (base, third person, past, gerund).
VERB_POS = [("love", "loves", "loved", "loving"), ("enjoy", "enjoys", "enjoyed", "enjoying"),
            ("admire", "admires", "admired", "admiring"), ("adore", "adores", "adored", "adoring"),
            ("praise", "praises", "praised", "praising"), ("cherish", "cherishes", "cherished", "cherishing"),
            ("recommend", "recommends", "recommended", "recommending"),
            ("appreciate", "appreciates", "appreciated", "appreciating"),
            ("treasure", "treasures", "treasured", "treasuring"), ("like", "likes", "liked", "liking")]
VERB_NEG = [("hate", "hates", "hated", "hating"), ("dislike", "dislikes", "disliked", "disliking"),
            ("regret", "regrets", "regretted", "regretting"), ("loathe", "loathes", "loathed", "loathing"),
            ("despise", "despises", "despised", "despising"), ("resent", "resents", "resented", "resenting"),
            ("detest", "detests", "detested", "detesting"), ("mock", "mocks", "mocked", "mocking"),
            ("endure", "endures", "endured", "enduring"), ("tolerate", "tolerates", "tolerated", "tolerating")]
VERB_NEU = [("watch", "watches", "watched", "watching"), ("see", "sees", "saw", "seeing"),
            ("play", "plays", "played", "playing"), ("make", "makes", "made", "making"),
            ("show", "shows", "showed", "showing"), ("tell", "tells", "told", "telling"),
            ("follow", "follows", "followed", "following"), ("remember", "remembers", "remembered", "remembering"),
            ("describe", "describes", "described", "describing"), ("review", "reviews", "reviewed", "reviewing"),
            ("sit", "sits", "sat", "sitting"), ("visit", "visits", "visited", "visiting"),
            ("discuss", "discusses", "discussed", "discussing"), ("explore", "explores", "explored", "exploring")]
ADV_INT = ["very", "really", "quite", "truly", "so", "rather", "fairly", "deeply", "utterly",
           "thoroughly", "genuinely", "remarkably", "incredibly", "surprisingly", "oddly",
           "always", "often", "sometimes", "still", "just", "simply", "mostly", "largely"]
ADV_POS = ["beautifully", "brilliantly", "wonderfully", "gracefully", "cleverly", "warmly", "superbly"]
ADV_NEG = ["badly", "poorly", "clumsily", "terribly", "awkwardly", "painfully", "sloppily"]
AUX = ["is", "was", "seems", "feels", "looks", "remains", "becomes"]
AUX_PL = ["are", "were", "seem", "feel", "look", "remain", "become"]
AUX_MOD = ["will", "can", "could", "would", "should", "did", "does", "do"]
PART = ["not", "never", "to"]
ADP = ["in", "on", "with", "about", "for", "of", "by", "from", "at", "through", "after", "before",
       "during", "despite", "without", "into", "beyond", "among"]
CCONJ = ["and", "but", "or", "yet"]
SCONJ = ["because", "although", "while", "since", "though", "whereas"]
INTJ = ["wow", "oh", "alas", "well", "hey", "ugh", "yes"]
NUM_WORDS = ["two", "three", "four", "five", "ten", "twenty", "hundred"]
PUNCT = [".", ",", "!", "?", ";", "--"]
SYM = ["$", "%", "&", "+", "="]
X = ["etc", "vs", "ie", "eg"]


def polar_adj(rng, pol):
    return rng.choice(ADJ_POS if pol > 0 else ADJ_NEG)


def polar_verb(rng, pol):
    return rng.choice(VERB_POS if pol > 0 else VERB_NEG)


def noun_phrase(rng, allow_adj=True):
    out = []
    r = rng.random()
    if r < 0.15:
        return [rng.choice(PROPN)], "PROPN"
    out.append(rng.choice(DET))
    if allow_adj and rng.random() < 0.3:
        out.append(rng.choice(ADJ_NEU))
    out.append(rng.choice(NOUN))
    if rng.random() < 0.15:
        out += [rng.choice(ADP), rng.choice(DET), rng.choice(NOUN)]
    return out, "NOUN"


def clause(rng, pol):
    """A clause whose sentiment is `pol` (+1/-1) after negation is applied."""
    negate = rng.random() < 0.25
    surface = -pol if negate else pol
    t = rng.randrange(5)
    if t == 0:
        np_, _ = noun_phrase(rng)
        words = np_ + [rng.choice(AUX)]
        if negate:
            words.append("not")
        if rng.random() < 0.5:
            words.append(rng.choice(ADV_INT))
        words.append(polar_adj(rng, surface))
    elif t == 1:
        subj = rng.choice(PRON)
        v = polar_verb(rng, surface)
        if negate:
            words = [subj, rng.choice(["did", "do", "would"]), "not", v[0]]
        else:
            words = [subj, v[2] if rng.random() < 0.5 else v[0]]
        np_, _ = noun_phrase(rng)
        words += np_
    elif t == 2:
        words = [rng.choice(DET)]
        if rng.random() < 0.5:
            words.append(rng.choice(ADV_INT))
        words += [polar_adj(rng, surface), rng.choice(NOUN)]
        if negate:
            # "hardly a good film" style is avoided; negate through the verb.
            words = ["it", "is", "not"] + words
        else:
            words = ["it", "is"] + words
    elif t == 3:
        np_, _ = noun_phrase(rng)
        v = rng.choice(VERB_NEU)
        words = np_ + [v[2]]
        if negate:
            words = np_ + ["was", "not"]
            words.append((ADV_POS if surface > 0 else ADV_NEG)[rng.randrange(7)])
            words.append(v[2])
        else:
            words.append((ADV_POS if surface > 0 else ADV_NEG)[rng.randrange(7)])
    else:
        subj = rng.choice(PRON)
        v = rng.choice(VERB_NEU)
        words = [subj, v[2] if rng.random() < 0.5 else v[1]]
        np_, _ = noun_phrase(rng, allow_adj=False)
        words += np_
        words += ["and", "it", "was"]
        if negate:
            words.append("not")
        words.append(polar_adj(rng, surface))
    return words


def sentence(rng):
    label = rng.randrange(2)
    pol = 1 if label == 1 else -1
    r = rng.random()
    if r < 0.55:
        words = clause(rng, pol)
    elif r < 0.75:
        # Contrast: the clause after "but"/"yet" carries the verdict.
        words = clause(rng, -pol) + [",", rng.choice(["but", "yet"])] + clause(rng, pol)
    elif r < 0.88:
        # Subordinate clause is neutral context; main clause decides.
        ctx = [rng.choice(SCONJ)] + noun_phrase(rng)[0] + [rng.choice(VERB_NEU)[2]]
        if rng.random() < 0.3:
            ctx += ["in", str(rng.choice([1970, 1985, 1999, 2004, 2012, 2019])) ]
        words = ctx + [","] + clause(rng, pol)
    else:
        words = [rng.choice(INTJ), ","] + clause(rng, pol)
        if rng.random() < 0.4:
            words += ["and", rng.choice(["two", "three", "ten"]), rng.choice(["hours", "minutes", "scenes"])]
    words.append(rng.choice([".", ".", ".", "!"]))
    return " ".join(words), label


def lexicon_entries():
    lex = {}

    def put(words, tag):
        for w in words:
            lex.setdefault(w, tag)

    put(DET, "DET")
    put(["it"], "PRON")
    put(PRON, "PRON")
    put(PROPN, "PROPN")
    put(AUX + AUX_PL + AUX_MOD, "AUX")
    put(PART, "PART")
    put(ADP, "ADP")
    put(CCONJ, "CCONJ")
    put(SCONJ, "SCONJ")
    put(INTJ, "INTJ")
    put(NUM_WORDS, "NUM")
    put(PUNCT, "PUNCT")
    put(SYM, "SYM")
    put(X, "X")
    for verbs in (VERB_POS, VERB_NEG, VERB_NEU):
        for forms in verbs:
            put(forms, "VERB")
    put(NOUN + [n + "s" for n in NOUN if not n.endswith("s")] + ["hours", "minutes", "scenes"], "NOUN")
    put(ADJ_POS + ADJ_NEG + ADJ_NEU, "ADJ")
    put(ADV_INT + ADV_POS + ADV_NEG, "ADV")
    return lex


SUFFIXES = ["ing", "ed", "ly", "s", "es", "ful", "less", "ness", "able", "ous", "ive", "er"]


def build_vocab(words):
    pieces = set()
    for w in words:
        split = None
        for suf in SUFFIXES:
            stem = w[: -len(suf)]
            if w.endswith(suf) and len(stem) >= 3:
                split = (stem, "##" + suf)
                break
        if split and not w.isdigit():
            pieces.add(split[0])
            pieces.add(split[1])
        else:
            pieces.add(w)
    for c in "abcdefghijklmnopqrstuvwxyz0123456789":
        pieces.add(c)
        pieces.add("##" + c)
    for c in ".,!?;'-$%&+=:()\"":
        pieces.add(c)
    specials = ["[PAD]", "[UNK]", "[CLS]", "[SEP]"]
    return specials + sorted(pieces - set(specials))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data")
    ap.add_argument("--seed", type=int, default=20251016)
    ap.add_argument("--train", type=int, default=2000)
    ap.add_argument("--dev", type=int, default=500)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    seen = set()
    rows = []
    while len(rows) < args.train + args.dev:
        s, y = sentence(rng)
        if s in seen:
            continue
        seen.add(s)
        rows.append((s, y))

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "train.tsv"), "w") as f:
        f.write("sentence\tlabel\n")
        for s, y in rows[: args.train]:
            f.write(f"{s}\t{y}\n")
    with open(os.path.join(args.out, "dev.tsv"), "w") as f:
        f.write("sentence\tlabel\n")
        for s, y in rows[args.train:]:
            f.write(f"{s}\t{y}\n")

    lex = lexicon_entries()
    corpus_words = {w for s, _ in rows for w in s.split()}
    for w in sorted(corpus_words):
        if w not in lex and w.isdigit():
            lex[w] = "NUM"
    missing = sorted(w for w in corpus_words if w not in lex)
    if missing:
        raise SystemExit(f"lexicon misses corpus words: {missing[:10]}")
    with open(os.path.join(args.out, "lexicon.tsv"), "w") as f:
        for w in sorted(lex):
            f.write(f"{w}\t{lex[w]}\n")

    vocab = build_vocab(sorted(set(lex) | corpus_words))
    with open(os.path.join(args.out, "vocab.txt"), "w") as f:
        for t in vocab:
            f.write(t + "\n")
    print(f"train={args.train} dev={args.dev} lexicon={len(lex)} vocab={len(vocab)}")


if __name__ == "__main__":
    main()
