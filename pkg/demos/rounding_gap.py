"""Where the relaxed level assignment loses buffers.

With span N an edge covering D levels needs ceil(D / N) - 1 buffers, but the
LP charges only D / N - 1. At span 2 a 3-level edge therefore costs half a
buffer in the LP and a whole buffer in hardware. Exact branch-and-bound
closes the gap on small circuits.
"""

from aqfp_bsopt import PhaseConfig, optimize
from aqfp_bsopt.corpus import c17, random_logic
from aqfp_bsopt.flow import splice_out
from aqfp_bsopt.levels import assign_levels, buffers_on_edge
from aqfp_bsopt.netlist import Kind

for name, net in [("c17", c17()), ("random 6x30", random_logic(6, 30, seed=2))]:
    for skip in (1, 2):
        cfg = PhaseConfig(skip=skip)
        relaxed = optimize(net, cfg)
        exact = optimize(net, cfg, exact_ilp=True)
        print(f"{name:>12} skip {skip}: LP bound {relaxed.fractional_cost:6.1f}  "
              f"relaxed {relaxed.cost.total:3d}  exact {exact.cost.total:3d}")

# Per-edge view on c17 at span 2 for the final topology.
cfg = PhaseConfig(skip=1)
sol = optimize(c17(), cfg)
graph, _ = splice_out(sol.netlist, (Kind.BUF,))
levels, frac = assign_levels(graph, cfg)
odd = [e for e in graph.edges() if (levels[e.dst] - levels[e.src]) % cfg.span
       and levels[e.dst] - levels[e.src] > cfg.span]
print(f"\nc17, span 2: LP objective {frac:.1f}, "
      f"{sum(buffers_on_edge(levels[e.dst] - levels[e.src], 2) for e in graph.edges())} "
      f"buffers after rounding")
for e in odd:
    d = levels[e.dst] - levels[e.src]
    print(f"  {graph.names[e.src]} -> {graph.names[e.dst]}: {d} levels, "
          f"LP charge {d / 2 - 1:.1f}, real {buffers_on_edge(d, 2)}")
