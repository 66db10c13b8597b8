"""Terminal component periods of the logistic family under grid refinement.

At r = 3.2 the period locks at 2 (a periodic orbit).  At the accumulation
point of period doubling the period keeps multiplying as the grid refines,
which is the finite-depth trace of an odometer.  At r = 3.5 the true
attractor is a 4-cycle, yet these depths also read odometer_like: the
verdict is evidence from a finite ladder, not a proof.
"""
from chainrec.components import classify_terminal, track_terminal
from chainrec.systems import builtin

FEIGENBAUM = 3.5699456718695445


def main():
    for r, depths in ((3.2, range(6, 11)), (3.5, range(6, 12)), (FEIGENBAUM, range(6, 13))):
        profiles = track_terminal(builtin("logistic", {"r": r}), depths)
        cls = classify_terminal(profiles)
        print(f"r = {r:.10f}")
        print(f"  periods  {cls.period_sequence}")
        print(f"  measures {tuple(round(m, 4) for m in cls.measure_sequence)}")
        print(f"  verdict  {cls.verdict}")


if __name__ == "__main__":
    main()
