use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use radar_acquisition::codebook::build_codebook;
use radar_acquisition::harness::campaign::{campaign_geometry, campaign_realization};
use radar_acquisition::harness::{rng, with_jobs, CampaignConfig, PepSettings};
use radar_acquisition::music::estimate_delays_or_fallback;
use radar_acquisition::pep::{rank_geomean_campaign, write_pep_csv, PepCampaign};
use radar_acquisition::scene::circular_distance;
use radar_acquisition::signal::{make_schedule, noise_variance, observe, radar_response, Strategy};
use radar_acquisition::{harness, Result};

#[derive(Parser)]
#[command(name = "radar-acq", version, about = "Radar-assisted user acquisition simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Missed-detection and false-alarm campaign; writes md_fa.csv and trials.csv.
    Simulate(Common),
    /// Rank and geometric-mean analysis of every distortion; writes pep.csv.
    PepEval(Common),
    /// One trial's MUSIC pseudo-spectrum; writes pseudo_spectrum.csv.
    MusicDemo(Common),
    /// Codebook Gram matrix and gain profiles; writes gram.csv and gain_profile.csv.
    CodebookDump(Common),
}

#[derive(Args)]
struct Common {
    /// TOML campaign configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also run every grid point with the true delays.
    #[arg(long)]
    genie_delays: bool,
    /// Restrict to one probing strategy.
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Comma-separated slot budgets.
    #[arg(long = "L", value_delimiter = ',')]
    slots: Option<Vec<usize>>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

impl Common {
    fn config(&self) -> Result<CampaignConfig> {
        let mut cfg = match &self.config {
            Some(path) => CampaignConfig::from_path(path)?,
            None => CampaignConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        cfg.genie_delays |= self.genie_delays;
        if let Some(s) = self.strategy {
            cfg.strategies = vec![s];
        }
        if let Some(slots) = &self.slots {
            cfg.slots = slots.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn simulate(args: &Common) -> Result<()> {
    let cfg = args.config()?;
    let (result, files) = harness::run_campaign(&cfg, args.jobs)?;
    println!("strategy  L   genie  trials  failures  p_md        p_fa");
    for r in &result.md_fa {
        println!(
            "{:<8} {:>3}  {:<5}  {:>6}  {:>8}  {:.4}±{:.4}  {:.4}±{:.4}",
            r.strategy.to_string(),
            r.slots,
            r.genie,
            r.trials,
            r.failures,
            r.p_md_mean,
            r.p_md_stderr,
            r.p_fa_mean,
            r.p_fa_stderr
        );
    }
    println!("wrote {} and {}", files.md_fa.display(), files.trials.display());
    if let Some(p) = files.pep {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn pep_eval(args: &Common) -> Result<()> {
    let cfg = args.config()?;
    let settings = cfg.pep.clone().unwrap_or_else(PepSettings::default);
    let p = &cfg.physical;
    let codebook = build_codebook(p.num_antennas, p.num_beams, p.aoa_range_rad)?;
    let mut rows = Vec::new();
    for &strategy in &cfg.strategies {
        let campaign = PepCampaign {
            config: p.clone(),
            strategy,
            slots: cfg.slots.clone(),
            num_instances: settings.num_instances,
            master_seed: cfg.master_seed,
            rank_rel_tol: settings.rank_rel_tol,
            convention: settings.convention,
        };
        rows.extend(with_jobs(args.jobs, || rank_geomean_campaign(&campaign, &codebook))??);
    }
    println!("strategy  L   mean_rank  median_geomean");
    for &strategy in &cfg.strategies {
        for &l in &cfg.slots {
            let sel: Vec<_> = rows.iter().filter(|r| r.strategy == strategy && r.slots == l).collect();
            let mean_rank = sel.iter().map(|r| r.rank as f64).sum::<f64>() / sel.len().max(1) as f64;
            let mut gm: Vec<f64> = sel.iter().filter_map(|r| r.geomean).collect();
            gm.sort_by(f64::total_cmp);
            let median = gm.get(gm.len() / 2).map(|g| format!("{g:.3e}")).unwrap_or_else(|| "-".into());
            println!("{:<8} {:>3}  {:>9.3}  {}", strategy.to_string(), l, mean_rank, median);
        }
    }
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|source| radar_acquisition::Error::Io { path: cfg.output_dir.clone(), source })?;
    let path = cfg.output_dir.join("pep.csv");
    write_pep_csv(&path, &rows)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn music_demo(args: &Common) -> Result<()> {
    let cfg = args.config()?;
    let p = &cfg.physical;
    let strategy = cfg.strategies.first().copied().unwrap_or(Strategy::Sweep);
    let slots = args.slots.as_ref().and_then(|s| s.first().copied()).unwrap_or(p.num_beams);
    let codebook = build_codebook(p.num_antennas, p.num_beams, p.aoa_range_rad)?;
    let geometry = campaign_geometry(&cfg, 0)?;
    let scene = campaign_realization(&cfg, &geometry, 0);
    let ts = p.symbol_duration_s();
    let schedule = make_schedule(strategy, p.num_beams, slots, &mut rng::stream(cfg.master_seed, rng::SCHEDULE, &[0, 0]));
    let response = radar_response(&scene, &codebook, p.num_subcarriers, ts)?;
    let obs = observe(&response, &schedule, noise_variance(p), p.tx_power_w, &mut rng::stream(cfg.master_seed, rng::NOISE, &[0, 0]))?;
    let est = estimate_delays_or_fallback(&obs.r, p.num_targets, ts, cfg.knobs.grid_oversampling)?;
    println!("{strategy}, L = {slots}, noise subspace dimension {}", est.noise_subspace_dim);
    for t in scene.delays() {
        let t = t.rem_euclid(ts);
        let nearest = est.delays_s.iter().copied().min_by(|a, b| circular_distance(*a, t, ts).total_cmp(&circular_distance(*b, t, ts)));
        if let Some(e) = nearest {
            println!("true {:9.3} ns  estimated {:9.3} ns", t * 1e9, e * 1e9);
        }
    }
    if est.degenerate {
        println!("pseudo-spectrum had too few separated minima; fell back to the smallest grid values");
    }
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|source| radar_acquisition::Error::Io { path: cfg.output_dir.clone(), source })?;
    let path = cfg.output_dir.join("pseudo_spectrum.csv");
    est.write_pseudo_spectrum(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn codebook_dump(args: &Common) -> Result<()> {
    let cfg = args.config()?;
    let p = &cfg.physical;
    let codebook = build_codebook(p.num_antennas, p.num_beams, p.aoa_range_rad)?;
    codebook.write_dump(&cfg.output_dir)?;
    println!("{} beams over {} antennas, max |Gram| off-diagonal {:.3e}", codebook.num_beams(), codebook.num_antennas(), codebook.max_gram_off_diagonal());
    println!("wrote gram.csv and gain_profile.csv to {}", cfg.output_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::PepEval(a) => pep_eval(a),
        Command::MusicDemo(a) => music_demo(a),
        Command::CodebookDump(a) => codebook_dump(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("radar-acq: {e}");
            ExitCode::FAILURE
        }
    }
}
