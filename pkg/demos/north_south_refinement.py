"""Refine the grid on the north-south circle map and watch the basin picture settle.

Prints the chain components at a few depths, then the coverage table:
the fraction of boxes with a unique terminal target grows toward 1 while
the ambiguous boxes shrink onto the repelling fixed point at 1/2.
"""
from chainrec import chain_graph as cg
from chainrec.chain_graph import ChainGraphParams
from chainrec.components import profile, terminal_components
from chainrec.limits_basins import CoverageParams, coverage_study
from chainrec.phase_space import subdivide
from chainrec.systems import builtin


def main():
    s = builtin("north_south")
    for depth in (4, 6, 8):
        grid = subdivide(s.domain, depth)
        dec = cg.scc_decompose(cg.build_chain_graph(s, grid, ChainGraphParams(grid.box_width)))
        print(f"depth {depth}: {dec.n_components} components, {int(dec.has_cycle.sum())} cyclic")
        for t in sorted(terminal_components(dec)):
            p = profile(dec, t)
            print(f"  terminal C{t}: {p.box_count} boxes, period {p.period}, measure {p.measure:.4f}")

    print("\ndepth  boxes  ambiguous  v_fraction  w_fraction")
    for row in coverage_study(s, [4, 5, 6, 7, 8, 9], CoverageParams(samples=100)):
        print(f"{row.depth:5d}  {row.n_boxes:5d}  {row.n_ambiguous:9d}  {row.v_fraction:10.4f}  "
              f"{row.w_sample_fraction:10.3f}")


if __name__ == "__main__":
    main()
