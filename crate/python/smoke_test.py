"""Smoke test for the loadsim_py extension module.

Build first, e.g. `maturin develop -m crates/py/Cargo.toml --features extension-module`,
or copy the cdylib from `cargo build -p loadsim-py --features extension-module`
next to this script as `loadsim_py.so`.
"""

import math

import loadsim_py as ls


def main() -> None:
    assert sorted(ls.archetypes()) == ["r12", "r3", "r4", "r5"]

    p = ls.compute_p_start(40.5, 1.0, 1, step_min=5)
    assert math.isclose(p, 0.140625, rel_tol=0, abs_tol=1e-12), p

    assert ls.step_appliance(0, 1.0, 0.5, 3) == (3, True)
    assert ls.step_appliance(1, 0.0, 0.5, 3) == (0, False)

    corrected, literal = ls.eq2("r12")
    assert corrected > literal > 0

    daily, monthly, per = ls.expected("r12")
    assert math.isclose(monthly, 30 * daily)
    assert len(per) == 15

    fleet = ls.simulate("r12", days=5, households=20, seed=1)
    assert len(fleet.profile) == 5 * 288
    assert abs(fleet.mean_monthly_kwh - monthly) < 6 * fleet.se_monthly_kwh + 1.0, fleet
    assert math.isclose(ls.monthly(fleet.profile, 5), fleet.mean_monthly_kwh, rel_tol=1e-9)

    bumps = [100.0] * 288
    for i in range(288):
        if 450 <= 5 * i < 510:
            bumps[i] = 300.0
        if 1230 <= 5 * i < 1290:
            bumps[i] = 500.0
    assert ls.find_peaks(bumps, 5, 30, 2) == [(1230, 1290, 500.0), (450, 510, 300.0)]

    try:
        ls.simulate("bogus")
    except ValueError as e:
        assert "unknown archetype" in str(e)
    else:
        raise AssertionError("bogus archetype accepted")

    print("smoke test ok:", fleet)


if __name__ == "__main__":
    main()
