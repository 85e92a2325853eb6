mod common;

use common::rc::rc_max_error;
use proptest::prelude::*;
use xtalk_core::engine::{assemble, dc_operating_point, run_transient, Method, SimConfig, Stimulus};
use xtalk_core::netbuild::{
    build_ladder, preset_inputs, CoupledNetwork, LineRole, LineSpec, PairCoupling, PresetParams, Scenario,
    TerminationSpec,
};

fn two_lines(
    n: usize,
    m: f64,
    cm: f64,
    roles: (LineRole, LineRole),
    r_drv: f64,
) -> CoupledNetwork {
    let mk = |name: &str, role| LineSpec {
        name: name.into(),
        role,
        r_total: 40.0,
        l_total: 4e-9,
        c_total: 0.8e-12,
    };
    let term = TerminationSpec {
        driver_resistance_ohm: r_drv,
        load_capacitance_f: 20e-15,
    };
    build_ladder(
        "pair",
        &[mk("p", roles.0), mk("q", roles.1)],
        &[PairCoupling {
            a: 0,
            b: 1,
            m_total: m,
            cm_total: cm,
        }],
        &term,
        None,
        n,
    )
    .unwrap()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn unknown_count_matches_brute_force() {
    let net = two_lines(2, 1e-9, 0.1e-12, (LineRole::Aggressor, LineRole::Victim), 50.0);
    let sys = assemble(&net).unwrap();
    // 2 lines x (in, m1, 1, m2, 2) plus one current per inductor
    assert_eq!(sys.size(), 14);
    let zero_ohm = net.resistors.iter().filter(|r| r.ohms == 0.0).count()
        + net.drivers.iter().filter(|d| d.resistance == 0.0).count();
    assert_eq!(sys.size(), net.node_count() + net.inductors.len() + zero_ohm);

    // ideal ties and ideal drivers each add a current unknown
    let tapped = preset_inputs(Scenario::Shield { taps: 3 }, &PresetParams::reference().with_segments(4))
        .build()
        .unwrap();
    let sys = assemble(&tapped).unwrap();
    assert_eq!(sys.size(), 3 * 9 + 3 * 4 + 5);
}

#[test]
fn trapezoidal_is_second_order() {
    for dt in [0.02, 0.01] {
        let ratio = rc_max_error(Method::Trapezoidal, dt) / rc_max_error(Method::Trapezoidal, dt / 2.0);
        assert!((3.5..=4.5).contains(&ratio), "dt {dt}: ratio {ratio}");
    }
}

#[test]
fn backward_euler_is_first_order() {
    for dt in [0.02, 0.01] {
        let ratio = rc_max_error(Method::BackwardEuler, dt) / rc_max_error(Method::BackwardEuler, dt / 2.0);
        assert!((1.8..=2.2).contains(&ratio), "dt {dt}: ratio {ratio}");
    }
}

#[test]
fn step_response_settles_to_dc_point() {
    // slowest scale is the R/2L envelope of the 500 ohm lines, about 0.33 us
    let t_end = 4e-6;
    for scenario in Scenario::ALL_PRESETS {
        let net = preset_inputs(scenario, &PresetParams::reference()).build().unwrap();
        let cfg = SimConfig::new(1e-9, t_end, Method::Trapezoidal);
        let w = run_transient(&net, &Stimulus::step(1.0), &cfg).unwrap();
        let dc = dc_operating_point(&net, 1.0).unwrap();
        for (id, node) in net.nodes.iter().enumerate().skip(1) {
            let trace = w.node(&node.name).unwrap();
            let last = trace[trace.len() - 1];
            let want = dc.node_voltages[id];
            assert!((last - want).abs() <= 1e-3, "{scenario} {}: {last} vs {want}", node.name);
        }
    }
}

#[test]
fn driver_divider_at_dc() {
    let net = preset_inputs(Scenario::NoShield, &PresetParams::reference()).build().unwrap();
    let dc = dc_operating_point(&net, 1.0).unwrap();
    let agg = net.line_by_role(LineRole::Aggressor).unwrap();
    // no DC path to ground on a capacitively loaded line: the far end sits at the source
    assert!((dc.voltage(agg.load_node) - 1.0).abs() < 1e-12);
    let vic = net.line_by_role(LineRole::Victim).unwrap();
    assert!(dc.voltage(vic.load_node).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decoupled_victim_stays_at_zero(n in 1usize..=6, rise in 0.0f64..0.5e-9, amp in 0.1f64..5.0) {
        let net = two_lines(n, 0.0, 0.0, (LineRole::Aggressor, LineRole::Victim), 50.0);
        let stim = Stimulus::ramp(amp, rise);
        let w = run_transient(&net, &stim, &SimConfig::new(5e-12, 2e-9, Method::Trapezoidal)).unwrap();
        for node in net.nodes.iter().filter(|n| n.name.starts_with("q_")) {
            prop_assert!(max_abs(w.node(&node.name).unwrap()) <= 1e-12 * amp);
        }
        prop_assert!(max_abs(w.node("p_1").unwrap()) > 0.1 * amp);
    }

    #[test]
    fn doubling_amplitude_doubles_every_trace(
        n in 1usize..=6,
        m in 0.0f64..2e-9,
        cm in 0.0f64..0.5e-12,
        amp in 0.1f64..5.0,
        method in prop_oneof![Just(Method::Trapezoidal), Just(Method::BackwardEuler)],
    ) {
        let net = two_lines(n, m, cm, (LineRole::Aggressor, LineRole::Victim), 50.0);
        let cfg = SimConfig::new(5e-12, 1e-9, method);
        let stim = Stimulus::ramp(amp, 0.1e-9);
        let one = run_transient(&net, &stim, &cfg).unwrap();
        let two = run_transient(&net, &stim.scaled(2.0), &cfg).unwrap();
        let scale = max_abs(&one.node_traces.concat());
        for (a, b) in one.node_traces.iter().flatten().zip(two.node_traces.iter().flatten()) {
            prop_assert!((2.0 * a - b).abs() <= 1e-12 * scale);
        }
        for (a, b) in one.branch_traces.iter().flatten().zip(two.branch_traces.iter().flatten()) {
            let iscale = max_abs(&one.branch_traces.concat());
            prop_assert!((2.0 * a - b).abs() <= 1e-12 * iscale);
        }
    }

    #[test]
    fn exchanging_the_driven_line_mirrors_the_waveforms(
        n in 1usize..=6,
        m in 0.0f64..2e-9,
        cm in 0.0f64..0.5e-12,
        r_drv in prop_oneof![Just(0.0), 10.0f64..100.0],
    ) {
        let cfg = SimConfig::new(5e-12, 1e-9, Method::Trapezoidal);
        let stim = Stimulus::ramp(1.0, 0.1e-9);
        let fwd = two_lines(n, m, cm, (LineRole::Aggressor, LineRole::Victim), r_drv);
        let rev = two_lines(n, m, cm, (LineRole::Victim, LineRole::Aggressor), r_drv);
        let a = run_transient(&fwd, &stim, &cfg).unwrap();
        let b = run_transient(&rev, &stim, &cfg).unwrap();
        let mirror = |name: &str| match name.split_once('_') {
            Some(("p", rest)) => format!("q_{rest}"),
            Some(("q", rest)) => format!("p_{rest}"),
            _ => name.to_string(),
        };
        for (name, trace) in a.node_names.iter().zip(&a.node_traces) {
            let other = b.node(&mirror(name)).unwrap();
            for (x, y) in trace.iter().zip(other) {
                prop_assert!((x - y).abs() <= 1e-9, "{}: {} vs {}", name, x, y);
            }
        }
    }
}
