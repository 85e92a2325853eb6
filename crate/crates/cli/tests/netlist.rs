use std::collections::BTreeSet;

use xtalk_cli::commands::{cmd_export_netlist, cmd_run};
use xtalk_cli::config::ToolkitConfig;
use xtalk_cli::netlist::{coupling_k, export_netlist, TieStyle};
use xtalk_core::engine::{Method, SimConfig, Stimulus};
use xtalk_core::netbuild::{build_ladder, preset_inputs, LineRole, LineSpec, PairCoupling, PresetParams, Scenario, TerminationSpec};

fn cards<'a>(deck: &'a str, prefix: &str) -> Vec<Vec<&'a str>> {
    deck.lines()
        .filter(|l| l.starts_with(prefix))
        .map(|l| l.split(' ').collect())
        .collect()
}

fn deck_nodes(deck: &str) -> BTreeSet<String> {
    let mut nodes = BTreeSet::new();
    for line in deck.lines() {
        let f: Vec<&str> = line.split(' ').collect();
        match line.chars().next() {
            Some('R' | 'L' | 'C' | 'V') => {
                nodes.insert(f[1].to_string());
                nodes.insert(f[2].to_string());
            }
            _ => {}
        }
    }
    nodes.remove("0");
    nodes
}

#[test]
fn coupled_pair_has_two_k_cards_at_the_reference_ratio() {
    let lines: Vec<LineSpec> = ["a", "b"]
        .iter()
        .zip([LineRole::Aggressor, LineRole::Victim])
        .map(|(n, role)| LineSpec {
            name: n.to_string(),
            role,
            r_total: 500.0,
            l_total: 83.24e-6,
            c_total: 134.41e-12,
        })
        .collect();
    let coupling = [PairCoupling {
        a: 0,
        b: 1,
        m_total: 8.21e-6,
        cm_total: 69.5e-12,
    }];
    let net = build_ladder("pair", &lines, &coupling, &TerminationSpec::default(), None, 2).unwrap();
    let deck = export_netlist(&net, &Stimulus::default(), &SimConfig::default(), TieStyle::default()).unwrap();
    let ks = cards(&deck, "K");
    assert_eq!(ks.len(), 2);
    // 8.21 / 83.24, computed independently
    let want = 0.098_630_466_122_056_71;
    for k in &ks {
        let got: f64 = k[3].parse().unwrap();
        assert!(((got - want) / want).abs() < 5e-7, "{got}");
    }
    assert_eq!(ks[0][1..3], ["La_1", "Lb_1"]);
    assert!(deck.starts_with("* pair coupled interconnect\n"));
    assert!(deck.contains("k = M / sqrt(L1 L2)"));
}

#[test]
fn k_cards_match_the_inductances_to_six_digits() {
    for scenario in Scenario::ALL_PRESETS {
        let net = preset_inputs(scenario, &PresetParams::reference()).build().unwrap();
        let deck = export_netlist(&net, &Stimulus::default(), &SimConfig::default(), TieStyle::default()).unwrap();
        let ks = cards(&deck, "K");
        assert_eq!(ks.len(), net.mutuals.len());
        for (i, card) in ks.iter().enumerate() {
            let m = &net.mutuals[i];
            let la = &net.inductors[m.branch_a];
            let lb = &net.inductors[m.branch_b];
            assert_eq!((card[1], card[2]), (la.name.as_str(), lb.name.as_str()));
            let got: f64 = card[3].parse().unwrap();
            let want = m.henries / (la.henries * lb.henries).sqrt();
            assert!(got < 1.0);
            assert!(((got - want) / want).abs() < 1e-6);
            assert_eq!(coupling_k(&net, i), Some(want));
        }
    }
}

#[test]
fn export_is_byte_stable() {
    let cfg = ToolkitConfig::load(
        &std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/shield-3taps.toml"),
        &[],
    )
    .unwrap();
    let (_, a) = cmd_export_netlist(&cfg, TieStyle::ZeroVoltSource).unwrap();
    let (_, b) = cmd_export_netlist(&cfg.clone(), TieStyle::ZeroVoltSource).unwrap();
    assert_eq!(a, b);
    assert!(a.ends_with("\n.tran 5e-11 5e-7\n.end\n"), "{}", &a[a.len() - 60..]);
}

#[test]
fn shield_ties_follow_the_dialect_option() {
    let net = preset_inputs(Scenario::Shield { taps: 3 }, &PresetParams::reference()).build().unwrap();
    let sim = SimConfig::new(5e-11, 5e-7, Method::Trapezoidal);
    let v = export_netlist(&net, &Stimulus::default(), &sim, TieStyle::ZeroVoltSource).unwrap();
    let ties = cards(&v, "Vtie_sh_");
    let names: Vec<&str> = ties.iter().map(|c| c[1]).collect();
    assert_eq!(names, ["sh_in", "sh_3", "sh_6", "sh_9", "sh_12"]);
    assert!(ties.iter().all(|c| c[2] == "0" && c[3] == "0"));

    let r = export_netlist(&net, &Stimulus::default(), &sim, TieStyle::TinyResistor).unwrap();
    let ties = cards(&r, "Rtie_sh_");
    assert_eq!(ties.len(), 5);
    assert!(ties.iter().all(|c| c[3] == "1e-9"));
    assert!(cards(&r, "Vtie").is_empty());
}

#[test]
fn deck_nodes_match_waveform_headers() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ToolkitConfig::default();
    cfg.set_preset("shield-3taps");
    cfg.sim.t_end = 1e-9;
    let (_, deck) = cmd_export_netlist(&cfg, TieStyle::ZeroVoltSource).unwrap();
    let (result, _) = cmd_run(&cfg, dir.path()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join(result.files.waveforms.unwrap())).unwrap();
    let header: BTreeSet<String> = csv.lines().next().unwrap().split(',').skip(1).map(String::from).collect();
    assert_eq!(deck_nodes(&deck), header);
}
