"""A sign-flipped range reading with and without the plausibility monitor.

Without the monitor the follower reads a negative gap, stops treating the
lead as ahead and closes in at set speed. With the monitor the negative
range is rejected, the last good value is held and the fallback
deceleration keeps the gap open.

    python3 demos/reverse_range_monitor.py
"""

from dataclasses import replace

from perception_hazop import data_path
from perception_hazop.model import Guideword
from perception_hazop.sim import InjectionSpec, load_scenario, simulate


def main():
    sc = load_scenario(data_path("scenarios", "t_rdr_acc_2.json"))
    # a faster ego so the lead is closed on quickly once it is lost
    sc = replace(sc, ego_init=replace(sc.ego_init, set_speed=30.0))
    for window in (None, (5.0, 15.0)):
        inj = InjectionSpec("rdr_range", Guideword.Reverse, window=window)
        for monitor in (False, True):
            out, _ = simulate(sc, [inj], monitor_enabled=monitor, trace=False)
            label = "whole run" if window is None else f"{window[0]:g}-{window[1]:g} s"
            print(f"reverse {label:>9}  monitor={'on ' if monitor else 'off'}  "
                  f"{out.classification:<18} min gap {out.min_gap:7.2f} m  rejects {out.plausibility_flags}")


if __name__ == "__main__":
    main()
