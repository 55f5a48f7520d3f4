"""Building one splitter tree by dynamic programming.

A gate drives four sinks whose levels sit 2, 5, 6 and 10 phases after it.
Edges may skip one phase (ps = 2) and a splitter has four outputs. The sink
at offset 6 trails its own buffer chain, so it could start up to three
phases later at no cost: that is its slack.
"""

from aqfp_bsopt import PhaseConfig
from aqfp_bsopt.splitter import FanoutLeaf, Mode, build_tree, build_tree_dp

# delay = level offset from the driver minus one
leaves = [FanoutLeaf(0, 1), FanoutLeaf(1, 4), FanoutLeaf(2, 5, slack=3), FanoutLeaf(3, 9)]

# The table entry for "last three leaves, under one splitter output at depth 1"
# shows what slack buys: with it the subtree needs two cells, without it three.
for slack in (3, 0):
    ls = leaves[:2] + [FanoutLeaf(2, 5, slack)] + leaves[3:]
    t = build_tree_dp(ls, ps=2, X=4, mode=Mode.RECONSTRUCT)
    print(f"slack {slack}: dp[3][4][1][4] = {tuple(t.dp(3, 4, 1, 4))}, "
          f"pivot = {tuple(t.pt(3, 4, 1, 4))}")

print()
print(build_tree_dp(leaves, ps=2, X=4, mode=Mode.RECONSTRUCT).dump(3, 4))

# Materialize the best tree. Root cost is (max extra delay, total extra delay,
# buffers + splitters); a feasible reconstruct-mode tree never pays extra delay.
tree, root = build_tree(leaves, PhaseConfig(skip=1, max_fanout=4), Mode.RECONSTRUCT)
print(f"\nroot cost {tuple(root)}: {tree.splitters} splitter(s), {tree.buffers} buffer(s)")
for k, node in enumerate(tree.nodes):
    parent = "driver" if node.parent < 0 else f"node {node.parent}"
    print(f"  node {k}: {node.kind.value} at depth {node.depth}, fed by {parent}")
for a in tree.attachments:
    parent = "driver" if a.parent < 0 else f"node {a.parent}"
    print(f"  sink {a.leaf.node}: from {parent}, extra delay {a.extra}")
