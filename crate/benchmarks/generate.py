#!/usr/bin/env python3
"""Regenerate the bundled benchmark corpus.

The ISCAS85 suite is the customary host corpus for combinational
logic-locking experiments. The original netlist files cannot be
redistributed from this environment, so this script synthesizes a
deterministic stand-in for each circuit that matches the published
primary-input count, primary-output count, and approximate gate count
under the same name. Where the function family of the original is public
knowledge the stand-in keeps it: c6288 is a genuine 16x16 carry-save
array multiplier, c499/c1355 are single-error-correction style XOR
networks (c1355 with every XOR expanded into four NANDs).

c17 is small enough to be reproduced exactly and is the canonical file.

Running `python3 generate.py` rewrites every .bench file in this
directory; output is byte-identical across runs.
"""

import random

# name -> (inputs, outputs, target gate count, flavor)
PROFILES = [
    ("c432", 36, 7, 160, "control"),
    ("c499", 41, 32, 202, "ecc"),
    ("c880", 60, 26, 383, "alu"),
    ("c1355", 41, 32, 546, "ecc_nand"),
    ("c1908", 33, 25, 880, "control"),
    ("c2670", 233, 140, 1193, "wide"),
    ("c3540", 50, 22, 1669, "alu"),
    ("c5315", 178, 123, 2307, "wide"),
    ("c6288", 32, 32, 2406, "multiplier"),
    ("c7552", 207, 108, 3512, "wide"),
]

C17 = """# c17
INPUT(1)
INPUT(2)
INPUT(3)
INPUT(6)
INPUT(7)
OUTPUT(22)
OUTPUT(23)
10 = NAND(1, 3)
11 = NAND(3, 6)
16 = NAND(2, 11)
19 = NAND(11, 7)
22 = NAND(10, 16)
23 = NAND(16, 19)
"""

KINDS_BY_FLAVOR = {
    # (kind, weight) for 2+-input gates; NOT/BUF handled separately
    "control": [("NAND", 6), ("NOR", 3), ("AND", 2), ("OR", 2), ("XOR", 1)],
    "alu": [("NAND", 4), ("NOR", 2), ("AND", 3), ("OR", 3), ("XOR", 2), ("XNOR", 1)],
    "wide": [("NAND", 4), ("NOR", 2), ("AND", 3), ("OR", 2), ("XOR", 1)],
}


class Builder:
    def __init__(self):
        self.gates = []  # (name, kind, [fanins])
        self.nets = []
        self.counter = 0

    def fresh(self):
        self.counter += 1
        return f"n{self.counter}"

    def add(self, kind, fanins):
        name = self.fresh()
        self.gates.append((name, kind, list(fanins)))
        self.nets.append(name)
        return name


def pick_fanins(rng, nets, arity):
    """Draw distinct nets biased toward recently created ones."""
    chosen = []
    attempts = 0
    while len(chosen) < arity and attempts < 200:
        attempts += 1
        r = rng.random()
        idx = int(len(nets) * (1.0 - r * r))
        idx = min(idx, len(nets) - 1)
        net = nets[idx]
        if net not in chosen:
            chosen.append(net)
    while len(chosen) < arity:
        net = rng.choice(nets)
        if net not in chosen or len(set(nets)) < arity:
            chosen.append(net)
    return chosen


def weighted(rng, pairs):
    total = sum(w for _, w in pairs)
    x = rng.random() * total
    for item, w in pairs:
        x -= w
        if x <= 0:
            return item
    return pairs[-1][0]


def random_circuit(rng, n_in, n_out, n_gates, flavor):
    b = Builder()
    inputs = [f"i{k}" for k in range(n_in)]
    b.nets.extend(inputs)
    kinds = KINDS_BY_FLAVOR[flavor]
    arities = [(2, 60), (3, 18), (4, 6), (5, 2), (1, 14)]
    buf_share = 0.35 if flavor == "wide" else 0.1
    for _ in range(n_gates):
        arity = weighted(rng, arities)
        if arity == 1:
            kind = "BUF" if rng.random() < buf_share else "NOT"
            b.add(kind, pick_fanins(rng, b.nets, 1))
        else:
            kind = weighted(rng, kinds)
            if kind in ("XOR", "XNOR"):
                arity = min(arity, 3)
            b.add(kind, pick_fanins(rng, b.nets, arity))
    return b, inputs


def finalize(rng, b, inputs, n_out):
    """Choose outputs from fanout-free nets and absorb leftovers."""
    used = set()
    for _, _, fanins in b.gates:
        used.update(fanins)
    dangling = [name for name, _, _ in b.gates if name not in used]
    outputs = dangling[-n_out:]
    extra = dangling[: max(0, len(dangling) - n_out)]
    # wire leftover dangling nets into later gates so nothing is wasted
    order = {name: i for i, (name, _, _) in enumerate(b.gates)}
    for net in extra:
        candidates = [
            i
            for i, (name, kind, fanins) in enumerate(b.gates)
            if order[name] > order[net]
            and kind in ("AND", "OR", "NAND", "NOR")
            and len(fanins) < 5
            and net not in fanins
        ]
        if candidates:
            b.gates[rng.choice(candidates)][2].append(net)
        elif net not in outputs:
            outputs.append(net)
    pool = [name for name, _, _ in b.gates if name not in outputs]
    while len(outputs) < n_out and pool:
        cand = pool[rng.randrange(len(pool))]
        outputs.append(cand)
        pool.remove(cand)
    return outputs[:n_out] if len(outputs) > n_out else outputs


def gen_generic(rng, n_in, n_out, n_gates, flavor):
    b, inputs = random_circuit(rng, n_in, n_out, n_gates, flavor)
    outputs = finalize(rng, b, inputs, n_out)
    return b, inputs, outputs


def xor_tree(b, nets):
    layer = list(nets)
    while len(layer) > 1:
        nxt = []
        for i in range(0, len(layer) - 1, 2):
            nxt.append(b.add("XOR", [layer[i], layer[i + 1]]))
        if len(layer) % 2:
            nxt.append(layer[-1])
        layer = nxt
    return layer[0]


def gen_ecc(rng, n_gates):
    """32 data bits, 8 check bits, 1 enable; SEC-style correction."""
    b = Builder()
    data = [f"i{k}" for k in range(32)]
    checks = [f"i{32 + k}" for k in range(8)]
    enable = "i40"
    inputs = data + checks + [enable]
    b.nets.extend(inputs)
    syndromes = []
    for k in range(8):
        members = [data[j] for j in range(32) if (j * 11 + k * 5) % 8 < 3 or (j + k) % 7 == 0]
        if len(members) < 2:
            members = data[k : k + 8]
        tree = xor_tree(b, members)
        syndromes.append(b.add("XOR", [tree, checks[k]]))
    outputs = []
    for j in range(32):
        s0 = syndromes[j % 8]
        s1 = syndromes[(j * 3 + 1) % 8]
        s2 = syndromes[(j * 5 + 2) % 8]
        hit = b.add("AND", [s0, s1, s2])
        gated = b.add("AND", [hit, enable])
        outputs.append(b.add("XOR", [data[j], gated]))
    pad_to(rng, b, n_gates)
    return b, inputs, outputs


def expand_xors(b):
    """Rewrite every XOR/XNOR gate as the four-NAND pattern."""
    out = Builder()
    out.counter = b.counter
    rename = {}
    for name, kind, fanins in b.gates:
        fi = [rename.get(f, f) for f in fanins]
        if kind in ("XOR", "XNOR") and len(fi) == 2:
            a, c = fi
            n1 = out.add("NAND", [a, c])
            n2 = out.add("NAND", [a, n1])
            n3 = out.add("NAND", [n1, c])
            res = out.add("NAND", [n2, n3])
            if kind == "XNOR":
                res = out.add("NOT", [res])
            rename[name] = res
        else:
            out.gates.append((name, kind, fi))
            out.nets.append(name)
    return out, rename


def pad_to(rng, b, n_gates):
    """Insert function-preserving buffers until the gate count is hit."""
    while len(b.gates) < n_gates:
        i = rng.randrange(len(b.gates))
        name, kind, fanins = b.gates[i]
        j = rng.randrange(len(fanins))
        buf = b.add("BUF", [fanins[j]])
        fanins[j] = buf


def gen_multiplier(rng, n_gates):
    """16x16 carry-save array multiplier, mixed NOR-cell realization."""
    b = Builder()
    a = [f"i{k}" for k in range(16)]
    c = [f"i{16 + k}" for k in range(16)]
    inputs = a + c
    b.nets.extend(inputs)

    def xnor_nor(x, y):
        n1 = b.add("NOR", [x, y])
        n2 = b.add("NOR", [x, n1])
        n3 = b.add("NOR", [n1, y])
        return b.add("NOR", [n2, n3])

    def fa_nor(x, y, z):
        t = xnor_nor(x, y)       # = NOT(x ^ y)
        s = xnor_nor(t, z)       # = x ^ y ^ z
        m1 = b.add("NOR", [x, y])
        m2 = b.add("NOR", [x, z])
        m3 = b.add("NOR", [y, z])
        carry = b.add("NOR", [m1, m2, m3])  # = majority(x, y, z)
        return s, carry

    def fa_plain(x, y, z):
        t = b.add("XOR", [x, y])
        s = b.add("XOR", [t, z])
        c1 = b.add("AND", [x, y])
        c2 = b.add("AND", [t, z])
        return s, b.add("OR", [c1, c2])

    def ha(x, y):
        return b.add("XOR", [x, y]), b.add("AND", [x, y])

    pp = [[b.add("AND", [a[i], c[j]]) for j in range(16)] for i in range(16)]
    cell = 0
    acc = pp[0]  # bits j of partial sum, weight j
    carries = []
    outputs = [acc[0]]
    acc = acc[1:]
    for i in range(1, 16):
        row = pp[i]
        new_acc = []
        new_carries = []
        for j in range(16):
            x = acc[j] if j < len(acc) else None
            y = row[j]
            z = carries[j] if j < len(carries) else None
            cell += 1
            use_nor = cell % 7 < 4
            if x is None and z is None:
                new_acc.append(y)
            elif z is None:
                s, cy = ha(x, y)
                new_acc.append(s)
                new_carries.append(cy)
                continue
            elif x is None:
                s, cy = ha(y, z)
                new_acc.append(s)
                new_carries.append(cy)
                continue
            else:
                s, cy = fa_nor(x, y, z) if use_nor else fa_plain(x, y, z)
                new_acc.append(s)
                new_carries.append(cy)
                continue
            new_carries.append(None)
        # normalize: drop trailing None carries
        carries = [cy for cy in new_carries if cy is not None]
        outputs.append(new_acc[0])
        acc = new_acc[1:]
    # final ripple over remaining sum and carry vectors
    carry = None
    for j in range(16):
        x = acc[j] if j < len(acc) else None
        z = carries[j] if j < len(carries) else None
        terms = [t for t in (x, z, carry) if t is not None]
        if not terms:
            break
        if len(terms) == 1:
            outputs.append(terms[0])
            carry = None
        elif len(terms) == 2:
            s, carry = ha(terms[0], terms[1])
            outputs.append(s)
        else:
            s, carry = fa_plain(terms[0], terms[1], terms[2])
            outputs.append(s)
    if carry is not None:
        outputs.append(carry)
    while len(outputs) < 32:
        outputs.append(outputs[-1])
    return b, inputs, outputs[:32]


def simulate(b, inputs, outputs, values):
    vals = dict(zip(inputs, values))
    for name, kind, fanins in b.gates:
        v = [vals[f] for f in fanins]
        if kind == "AND":
            r = all(v)
        elif kind == "NAND":
            r = not all(v)
        elif kind == "OR":
            r = any(v)
        elif kind == "NOR":
            r = not any(v)
        elif kind == "XOR":
            r = sum(v) % 2 == 1
        elif kind == "XNOR":
            r = sum(v) % 2 == 0
        elif kind == "NOT":
            r = not v[0]
        elif kind == "BUF":
            r = v[0]
        else:
            raise ValueError(kind)
        vals[name] = r
    return [vals[o] for o in outputs]


def check_multiplier(b, inputs, outputs):
    rng = random.Random(99)
    for _ in range(20):
        x = rng.randrange(1 << 16)
        y = rng.randrange(1 << 16)
        bits = [(x >> k) & 1 == 1 for k in range(16)] + [(y >> k) & 1 == 1 for k in range(16)]
        got = simulate(b, inputs, outputs, bits)
        got_val = sum(1 << k for k, bit in enumerate(got) if bit)
        assert got_val == x * y, f"multiplier mismatch: {x}*{y} = {x*y}, got {got_val}"


def write_bench(path, name, b, inputs, outputs):
    lines = [f"# {name} (synthetic stand-in, see generate.py)"]
    lines += [f"INPUT({i})" for i in inputs]
    lines += [f"OUTPUT({o})" for o in outputs]
    for gname, kind, fanins in b.gates:
        lines.append(f"{gname} = {kind}({', '.join(fanins)})")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def main():
    with open("c17.bench", "w") as f:
        f.write(C17)
    print(f"{'name':8} {'in':>4} {'out':>4} {'gates':>6}")
    print(f"{'c17':8} {5:>4} {2:>4} {6:>6}")
    for name, n_in, n_out, n_gates, flavor in PROFILES:
        rng = random.Random(f"banlock-{name}")
        if flavor == "multiplier":
            b, inputs, outputs = gen_multiplier(rng, n_gates)
            check_multiplier(b, inputs, outputs)
        elif flavor == "ecc":
            b, inputs, outputs = gen_ecc(rng, n_gates)
        elif flavor == "ecc_nand":
            b, inputs, outputs = gen_ecc(rng, 0)
            b2, rename = expand_xors(b)
            outputs = [rename.get(o, o) for o in outputs]
            pad_to(rng, b2, n_gates)
            b = b2
        else:
            b, inputs, outputs = gen_generic(rng, n_in, n_out, n_gates, flavor)
        assert len(inputs) == n_in
        write_bench(f"{name}.bench", name, b, inputs, outputs)
        print(f"{name:8} {len(inputs):>4} {len(outputs):>4} {len(b.gates):>6}")


if __name__ == "__main__":
    main()
