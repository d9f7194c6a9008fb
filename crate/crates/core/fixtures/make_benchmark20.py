"""Writes benchmark20.bif: CHILD topology with locally chosen CPTs.

Each child's distribution is a softmax over ordinal logits driven by an
additive score of its parents, so every edge carries a clear dependence.
"""
import itertools
import math

NODES = [
    # name, states, parents, (bias, weights)
    ("BirthAsphyxia", ["yes", "no"], [], (0.0, [])),
    ("Disease", ["PFC", "TGA", "Fallot"], ["BirthAsphyxia"], (0.0, [1.6])),
    ("LVH", ["yes", "no"], ["Disease"], (-1.5, [1.5])),
    ("DuctFlow", ["Lt_to_Rt", "None", "Rt_to_Lt"], ["Disease"], (-1.5, [1.5])),
    ("CardiacMixing", ["Mild", "Complete"], ["Disease"], (1.5, [-1.6])),
    ("LungParench", ["Normal", "Abnormal"], ["Disease"], (-1.4, [1.5])),
    ("LungFlow", ["Normal", "High"], ["Disease"], (1.4, [-1.5])),
    ("Sick", ["yes", "no"], ["Disease"], (-1.3, [1.4])),
    ("Age", ["0-3_days", "4-10_days", "11-30_days"], ["Disease", "Sick"], (-2.0, [1.1, 1.3])),
    ("Grunting", ["yes", "no"], ["LungParench", "Sick"], (-2.0, [2.0, 1.8])),
    ("HypDistrib", ["Equal", "Unequal"], ["DuctFlow", "CardiacMixing"], (-2.2, [1.3, 2.0])),
    ("HypoxiaInO2", ["Mild", "Severe"], ["CardiacMixing", "LungParench"], (-1.9, [1.9, 1.9])),
    ("CO2", ["Normal", "High"], ["LungParench"], (-1.3, [2.6])),
    ("ChestXray", ["Normal", "Abnormal"], ["LungParench", "LungFlow"], (-1.9, [2.0, 1.8])),
    ("LVHreport", ["yes", "no"], ["LVH"], (-1.5, [3.0])),
    ("GruntingReport", ["yes", "no"], ["Grunting"], (-1.5, [3.0])),
    ("LowerBodyO2", ["Low", "Normal"], ["HypDistrib", "HypoxiaInO2"], (-2.0, [2.0, 2.0])),
    ("RUQO2", ["Low", "Normal"], ["HypoxiaInO2"], (-1.4, [2.8])),
    ("CO2Report", ["Normal", "High"], ["CO2"], (-1.5, [3.0])),
    ("XrayReport", ["Normal", "Abnormal"], ["ChestXray"], (-1.5, [3.0])),
]

ARITY = {name: len(states) for name, states, _, _ in NODES}


def row(k, score):
    # ordinal logits 0, s, 2s, ... shifted for stability
    logits = [i * score for i in range(k)]
    m = max(logits)
    ex = [math.exp(v - m) for v in logits]
    z = sum(ex)
    ps = [round(e / z, 4) for e in ex]
    ps = [min(max(p, 0.02), 0.98) for p in ps]
    ps[-1] = round(1.0 - sum(ps[:-1]), 4)
    return ps


def main():
    out = ["network benchmark20 {", "}"]
    for name, states, _, _ in NODES:
        out.append(f"variable {name} {{")
        out.append(f"  type discrete [ {len(states)} ] {{ {', '.join(states)} }};")
        out.append("}")
    states_of = {name: states for name, states, _, _ in NODES}
    for name, states, parents, (bias, weights) in NODES:
        k = len(states)
        if not parents:
            out.append(f"probability ( {name} ) {{")
            out.append("  table " + ", ".join(f"{p:.4f}" for p in row(k, bias)) + ";")
            out.append("}")
            continue
        out.append(f"probability ( {name} | {', '.join(parents)} ) {{")
        for cfg in itertools.product(*(range(ARITY[p]) for p in parents)):
            # parent state index scaled to [0, 1]
            s = bias + sum(w * c / (ARITY[p] - 1) for w, c, p in zip(weights, cfg, parents))
            labels = ", ".join(states_of[p][c] for p, c in zip(parents, cfg))
            out.append(f"  ({labels}) " + ", ".join(f"{p:.4f}" for p in row(k, s)) + ";")
        out.append("}")
    with open("benchmark20.bif", "w") as f:
        f.write("\n".join(out) + "\n")


if __name__ == "__main__":
    main()
