use std::fmt::Write as _;
use std::path::Path;

use selex_core::chipeval::{self, ChipConfig};
use selex_core::fit::{self, FitConfig, SimplexConfig};
use selex_core::io::{self, fmt6};
use selex_core::seq;
use selex_core::simulate::{self, SimConfig};
use selex_core::thermo::{self, SelexModel};
use selex_core::EnergyMatrix;

use crate::args::{ChipEvalArgs, Cli, Command, FitArgs, OracleArgs, ScanArgs, ScoreArgs, SimulateArgs};
use crate::manifest::{self, Recorder};
use crate::CliError;

pub fn dispatch(cli: &Cli, argv: &[String]) -> Result<(), CliError> {
    let mut rec = Recorder::start();
    if let Some(path) = &cli.command.common().config {
        rec.input(path)?;
    }
    let seeds = match &cli.command {
        Command::Fit(a) => fit_cmd(a, &mut rec)?,
        Command::Simulate(a) => simulate_cmd(a, &mut rec)?,
        Command::Score(a) => score_cmd(a, &mut rec)?,
        Command::Scan(a) => scan_cmd(a, &mut rec)?,
        Command::ChipEval(a) => chip_eval_cmd(a, &mut rec)?,
        Command::Oracle(a) => oracle_cmd(a, &mut rec)?,
    };
    let common = cli.command.common();
    let config = serde_json::to_value(&cli.command).expect("arguments serialize");
    let m = rec.finish(cli.command.name(), argv, config, seeds)?;
    let path = common
        .manifest
        .clone()
        .unwrap_or_else(|| manifest::default_path(&common.out));
    manifest::write(&m, &path)
}

fn write_output(rec: &mut Recorder, path: &Path, text: &str) -> Result<(), CliError> {
    io::write_text(path, text)?;
    rec.output(path);
    Ok(())
}

fn load_matrix(rec: &mut Recorder, path: &Path) -> Result<EnergyMatrix, CliError> {
    let m = io::read_energy_matrix(path)?;
    rec.input(path)?;
    Ok(m)
}

fn fit_cmd(a: &FitArgs, rec: &mut Recorder) -> Result<Vec<u64>, CliError> {
    let data = io::read_round_counts(&a.rounds)?;
    rec.input(&a.rounds)?;
    let mut config = FitConfig::new(a.site_len, a.seed);
    config.fit_junk = a.fit_junk;
    config.c_junk = a.c_junk;
    config.log_tf = a.log_tf.clone();
    config.restarts = a.restarts;
    config.refine = a.refine;
    config.refine_passes = a.refine_passes;
    config.mc_sample_size = a.mc_samples;
    config.simplex = SimplexConfig {
        f_tol: a.f_tol,
        x_tol: a.x_tol,
        max_iter: a.max_iter,
        initial_step: a.initial_step,
        ..SimplexConfig::default()
    };
    let result = fit::multi_start_fit(&data, &config)?;

    let mut echo = vec![
        ("rounds_file".to_string(), a.rounds.display().to_string()),
        ("site_len".to_string(), a.site_len.to_string()),
        ("seed".to_string(), a.seed.to_string()),
        ("restarts".to_string(), a.restarts.to_string()),
        ("refine".to_string(), a.refine.to_string()),
        ("mc_samples".to_string(), a.mc_samples.to_string()),
        ("fit_junk".to_string(), a.fit_junk.to_string()),
        ("max_iter".to_string(), a.max_iter.to_string()),
    ];
    if let Some(v) = &a.log_tf {
        let v: Vec<String> = v.iter().map(|&x| fmt6(x)).collect();
        echo.push(("fixed_log_tf".to_string(), v.join(", ")));
    }
    write_output(rec, &a.common.out, &io::format_fit_result(&result, &echo))?;
    if let Some(path) = &a.matrix_out {
        write_output(rec, path, &io::format_energy_matrix(result.model.matrix()))?;
    }
    Ok(vec![a.seed])
}

fn simulate_cmd(a: &SimulateArgs, rec: &mut Recorder) -> Result<Vec<u64>, CliError> {
    let matrix = load_matrix(rec, &a.matrix)?;
    let model = SelexModel::new(matrix, a.log_tf.clone(), a.c_junk)?;
    let config = SimConfig {
        pool_size: a.pool_size,
        k: a.k,
        rounds: a.log_tf.len(),
        sample_per_round: a.sample,
        model,
        seed: a.seed,
    };
    let counts = simulate::simulate_selex(&config)?;
    write_output(rec, &a.common.out, &io::format_round_counts(&counts))?;
    if let Some(path) = &a.truth_out {
        write_output(rec, path, &io::format_energy_matrix(config.model.matrix()))?;
    }
    Ok(vec![a.seed])
}

fn score_cmd(a: &ScoreArgs, rec: &mut Recorder) -> Result<Vec<u64>, CliError> {
    let matrix = load_matrix(rec, &a.matrix)?;
    let text = io::read_text(&a.sequences)?;
    let seqs = io::parse_sequences(&text).map_err(|e| e.in_file(&a.sequences))?;
    rec.input(&a.sequences)?;
    let mut out = String::from("sequence\tenergy\toffset\tstrand\tsite\n");
    for s in &seqs {
        let best = matrix.best_site(s)?;
        let _ = writeln!(
            out,
            "{s}\t{}\t{}\t{}\t{}",
            fmt6(best.energy),
            best.offset,
            best.strand,
            best.site
        );
    }
    write_output(rec, &a.common.out, &out)?;
    Ok(Vec::new())
}

fn scan_cmd(a: &ScanArgs, rec: &mut Recorder) -> Result<Vec<u64>, CliError> {
    let matrix = load_matrix(rec, &a.matrix)?;
    let genome = io::read_genome(&a.genome)?;
    rec.input(&a.genome)?;
    let mut out = String::from("contig\tposition\tscore");
    if a.threshold.is_some() {
        out.push_str("\thit");
    }
    out.push('\n');
    for contig in genome.contigs() {
        let scores = chipeval::position_scores(&matrix, contig.codes());
        for (i, &s) in scores.iter().enumerate() {
            let shown = if s.is_nan() { "NA".to_string() } else { fmt6(s) };
            let _ = write!(out, "{}\t{i}\t{shown}", contig.name);
            if let Some(t) = a.threshold {
                let _ = write!(out, "\t{}", u8::from(s > t));
            }
            out.push('\n');
        }
    }
    write_output(rec, &a.common.out, &out)?;
    Ok(Vec::new())
}

fn chip_eval_cmd(a: &ChipEvalArgs, rec: &mut Recorder) -> Result<Vec<u64>, CliError> {
    let matrix = load_matrix(rec, &a.matrix)?;
    let mut genome = io::read_genome(&a.genome)?;
    rec.input(&a.genome)?;
    let peaks = io::parse_peaks(&io::read_text(&a.peaks)?).map_err(|e| e.in_file(&a.peaks))?;
    rec.input(&a.peaks)?;
    if let Some(path) = &a.exclusions {
        let regions = io::parse_regions(&io::read_text(path)?).map_err(|e| e.in_file(path))?;
        rec.input(path)?;
        genome.exclude(regions).map_err(|e| e.in_file(path))?;
    }
    let config = ChipConfig {
        n_peaks: a.n_peaks,
        half_window: a.half_window,
        n_background: a.n_background,
        alpha: a.alpha,
        smoothing: a.smoothing,
        seed: a.seed,
    };
    let profile = chipeval::enrichment_profile(&genome, &peaks, &matrix, &config)?;

    let mut out = String::new();
    let _ = writeln!(out, "# threshold = {}", fmt6(profile.threshold));
    let _ = writeln!(out, "# null_hit_rate = {:.6e}", profile.null_hit_rate);
    let _ = writeln!(out, "# null_rate_floored = {}", profile.null_rate_floored);
    let _ = writeln!(out, "# peaks_used = {}", profile.peaks_used);
    let _ = writeln!(out, "# peaks_dropped = {}", profile.peaks_dropped);
    out.push_str("position\tenrichment\n");
    for (p, v) in profile.positions.iter().zip(&profile.values) {
        let _ = writeln!(out, "{p}\t{}", fmt6(*v));
    }
    write_output(rec, &a.common.out, &out)?;
    Ok(vec![a.seed])
}

fn oracle_cmd(a: &OracleArgs, rec: &mut Recorder) -> Result<Vec<u64>, CliError> {
    let mut out = String::new();
    let _ = writeln!(out, "k = {}", a.k);
    let _ = writeln!(out, "kmers = {}", seq::count_distinct_types(a.k)?);
    let _ = writeln!(out, "strand_classes = {}", seq::strand_class_count(a.k)?);
    let _ = writeln!(
        out,
        "strand_classes_enumerated = {}",
        seq::brute_force_class_count(a.k)?
    );
    if let (Some(path), Some(log_tf)) = (&a.matrix, &a.log_tf) {
        let matrix = load_matrix(rec, path)?;
        let model = SelexModel::new(matrix, log_tf.clone(), a.c_junk)?;
        for rbar in 1..=model.rounds() {
            let z = thermo::exact_denominator(&model, rbar, a.k)?;
            let _ = writeln!(out, "denominator_{rbar} = {z:.6e}");
        }
    }
    write_output(rec, &a.common.out, &out)?;
    Ok(Vec::new())
}
