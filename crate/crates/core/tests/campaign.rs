use radar_acquisition::codebook::build_codebook;
use radar_acquisition::harness::{simulate, CampaignConfig, CampaignResult};
use radar_acquisition::signal::Strategy;

fn run(cfg: &CampaignConfig) -> CampaignResult {
    let p = &cfg.physical;
    let cb = build_codebook(p.num_antennas, p.num_beams, p.aoa_range_rad).unwrap();
    simulate(cfg, &cb).unwrap()
}

#[test]
fn silent_transmitter_detects_at_chance_level() {
    let mut cfg = CampaignConfig {
        strategies: vec![Strategy::Sweep, Strategy::Random],
        slots: vec![36],
        num_geometries: 8,
        num_realizations: 10,
        master_seed: 11,
        ..CampaignConfig::default()
    };
    cfg.physical.tx_power_w = 0.0;
    // noise-only guesses of P out of N_b beams hit a true beam at rate P / N_b
    let chance = 1.0 - cfg.physical.num_targets as f64 / cfg.physical.num_beams as f64;
    for row in run(&cfg).md_fa {
        assert!(row.p_md_mean > 0.85, "{row:?}");
        assert!((row.p_md_mean - chance).abs() <= 3.0 * row.p_md_stderr + 0.02, "{row:?} vs chance {chance}");
    }
}

#[test]
fn stderr_shrinks_with_square_root_of_trials() {
    let cfg = |realizations| CampaignConfig {
        strategies: vec![Strategy::Sweep],
        slots: vec![18],
        num_geometries: 5,
        num_realizations: realizations,
        master_seed: 5,
        ..CampaignConfig::default()
    };
    let small = run(&cfg(20)).md_fa[0].p_md_stderr;
    let large = run(&cfg(80)).md_fa[0].p_md_stderr;
    let ratio = small / large;
    assert!((ratio - 2.0).abs() <= 0.6, "stderr ratio {ratio} for 4x trials");
}

#[test]
fn genie_never_loses_beyond_noise() {
    let cfg = CampaignConfig {
        slots: vec![6, 24],
        num_geometries: 3,
        num_realizations: 10,
        master_seed: 9,
        genie_delays: true,
        ..CampaignConfig::default()
    };
    let res = run(&cfg);
    for &s in &Strategy::ALL {
        for l in [6, 24] {
            let (two, genie) = (res.row(s, l, false).unwrap(), res.row(s, l, true).unwrap());
            let se = two.p_md_stderr.hypot(genie.p_md_stderr);
            assert!(genie.p_md_mean <= two.p_md_mean + 2.0 * se, "{two:?} vs {genie:?}");
        }
    }
}

#[test]
fn same_seed_same_result_different_seed_different_scenes() {
    let cfg = CampaignConfig { slots: vec![6], num_geometries: 2, num_realizations: 3, master_seed: 1, ..CampaignConfig::default() };
    let (a, b) = (run(&cfg), run(&cfg));
    assert_eq!(a.md_fa, b.md_fa);
    let c = run(&CampaignConfig { master_seed: 2, ..cfg });
    let beams = |r: &CampaignResult| r.trials.iter().map(|t| t.true_beam_indices.clone()).collect::<Vec<_>>();
    assert_ne!(beams(&a), beams(&c));
}
