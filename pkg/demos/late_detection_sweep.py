"""Sweep detection latency on the emergency braking scenario.

Compares the simulated outcome with a closed-form stopping check: the
obstacle is first seen late by ``L`` seconds, braking starts when the
warning threshold is reached, and the car stops at ``aeb_decel``.

    python3 demos/late_detection_sweep.py
"""

from perception_hazop import data_path
from perception_hazop.model import Guideword
from perception_hazop.sim import ControllerConfig, InjectionSpec, load_scenario, simulate


def predicted_collision(late, v, gap, decel, t_trigger):
    seen_at = gap - v * late
    coast = max(0.0, (seen_at - v * t_trigger) / v)
    return v * late + v * coast + v * v / (2 * decel) > gap


def main():
    sc = load_scenario(data_path("scenarios", "t_rdr_aeb_3.json"))
    cfg = ControllerConfig()
    v, gap = sc.ego_init.v, sc.targets[0].initial_gap
    print(f"ego {v:g} m/s, static obstacle at {gap:g} m, braking {cfg.aeb_decel:g} m/s^2")
    print(" late   simulated          predicted")
    for k in range(0, 16):
        late = k * 0.1
        inj = InjectionSpec("rdr_present", Guideword.Late, magnitude={"dt": late})
        out, _ = simulate(sc, [inj], trace=False)
        pred = predicted_collision(late, v, gap, cfg.aeb_decel, cfg.fcw_ttc)
        print(f" {late:4.1f}   {out.classification:<18} {'collision' if pred else 'success'}")


if __name__ == "__main__":
    main()
