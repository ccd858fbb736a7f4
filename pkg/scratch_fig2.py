import sys
sys.path.insert(0, "src")
from evadesim.topology import Dart, build_fat_graph, boundary_cycles, canonicalize
from evadesim.geometry import rotation_data, AlphaComplex
import math

# vertices A..I = 0..8; embedding intended to realize the fixture's rotations
POS = {
    0: (0.0, 2.0),      # A
    1: (-1.56, 1.25),   # B
    2: (-1.95, -0.45),  # C
    3: (-0.87, -1.8),   # D
    4: (0.87, -1.8),    # E
    5: (1.95, -0.45),   # F
    6: (1.56, 1.25),    # G
    7: (0.0, -0.3),     # H
    8: (0.0, -1.0),      # I
}
EDGES = {(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (0, 6), (2, 4), (1, 7), (5, 7), (7, 8)}
NUM2DART = {
    1: (0, 1), 2: (1, 0), 3: (1, 2), 4: (2, 1), 5: (2, 3), 6: (3, 2), 7: (3, 4),
    8: (4, 3), 9: (4, 5), 10: (5, 4), 11: (5, 6), 12: (6, 5), 13: (6, 0), 14: (0, 6),
    15: (4, 2), 16: (2, 4), 17: (5, 7), 18: (7, 5), 19: (7, 1), 20: (1, 7), 21: (7, 8), 22: (8, 7),
}
DART2NUM = {Dart(*v): k for k, v in NUM2DART.items()}

cx = AlphaComplex(frozenset(POS), frozenset(EDGES), frozenset(), 1.0)
rot = rotation_data(POS, cx)
fat = build_fat_graph(EDGES, rot)
cycles = boundary_cycles(fat)
got = sorted(tuple(DART2NUM[d] for d in c) for c in cycles)
for c in got:
    print(c)
expected = [(2, 14, 12, 17, 19), (4, 20, 21, 22, 18, 10, 15), (6, 16, 8), (1, 3, 5, 7, 9, 11, 13)]
def canon_num(seq):
    m = seq.index(min(seq))
    return seq[m:] + seq[m:0:-1][::-1] if False else tuple(seq[m:] + seq[:m])
exp = sorted(canon_num(list(e)) for e in expected)
print("match:", got == exp)
# sigma spot checks at B
print("sigma(3) =", DART2NUM[fat.sigma[Dart(*NUM2DART[3])]])
print("sigma(20) =", DART2NUM[fat.sigma[Dart(*NUM2DART[20])]])
print("sigma(2) =", DART2NUM[fat.sigma[Dart(*NUM2DART[2])]])
