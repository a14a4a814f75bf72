"""Token corruptions that must never parse."""


MUTATIONS = [
    lambda t: t.replace(")", "") if ")" in t else t + "(",
    lambda t: t.replace(",", ",q", 1) if "," in t else t + "x",
    lambda t: t.split(",")[0] + ")" if "," in t else "!" + t,
    lambda t: t[0] + "0" + t[1 + len(t[1:].split("(")[0]):] if t[1:2].isdigit() else "!" + t,
    lambda t: "!" + t,
    lambda t: t.replace("(", "(Q", 1) if "(" in t else t + ")",
]


def corrupt(text, rng):
    tokens = text.split(" ")
    i = rng.randrange(len(tokens))
    mutated = rng.choice(MUTATIONS)(tokens[i])
    col = sum(len(t) + 1 for t in tokens[:i]) + 1
    tokens[i] = mutated
    return " ".join(tokens), col, mutated
