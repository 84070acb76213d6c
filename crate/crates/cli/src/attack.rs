use captchapass_core::attack::{run_trials, AttackerModel, SimLimits, Solver, TrialSummary};
use captchapass_core::combinatorics::expected_candidates;
use captchapass_core::SchemeParams;
use clap::ValueEnum;
use serde::Serialize;

use crate::{CmdResult, Format};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// 100 images of 8 letters, 3 pass-images with one position each.
    Analytical,
    /// 50 images of 8 letters, 3 pass-images with one position each.
    Experimental,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverArg {
    None,
    Oracle,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long, value_enum, default_value = "analytical")]
    pub preset: Preset,
    /// Override the grid size of the preset.
    #[arg(short = 'n', long)]
    pub grid_size: Option<usize>,
    /// Override the string length of the preset.
    #[arg(short = 'm', long)]
    pub string_len: Option<usize>,
    #[arg(short = 'k', long, default_value_t = 3)]
    pub pass_images: usize,
    /// Pass-positions per pass-image.
    #[arg(long, default_value_t = 1)]
    pub positions: usize,
    #[arg(long, value_enum, default_value = "oracle")]
    pub solver: SolverArg,
    /// Stop reading CAPTCHAs after this many.
    #[arg(long)]
    pub budget: Option<u64>,
    /// Attacker does not know where one image's code ends.
    #[arg(long)]
    pub unknown_segmentation: bool,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Observations per trial before giving up.
    #[arg(long, default_value_t = 30)]
    pub max_sessions: usize,
    /// Keep observing at least this many sessions. Per-session means are
    /// reported only up to here, where every trial contributes.
    #[arg(long, default_value_t = 5)]
    pub min_sessions: usize,
    /// Random seed; drawn from the OS and printed when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

impl Args {
    pub fn check(&self) -> Result<(), String> {
        if self.trials == 0 {
            return Err("--trials must be positive".into());
        }
        if self.max_sessions == 0 {
            return Err("--max-sessions must be positive".into());
        }
        if self.positions == 0 {
            return Err("--positions must be positive".into());
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct Output<'a> {
    grid_size: usize,
    string_len: usize,
    pass_images: usize,
    positions: usize,
    solver: SolverArg,
    known_segmentation: bool,
    seed: u64,
    predicted_candidates: Vec<f64>,
    summary: &'a TrialSummary,
    note: String,
}

pub fn run(args: Args) -> CmdResult {
    let mut params = match args.preset {
        Preset::Analytical => SchemeParams::analytical(),
        Preset::Experimental => SchemeParams::experimental(),
    };
    if args.grid_size.is_some() || args.string_len.is_some() {
        params = SchemeParams::new(
            args.grid_size.unwrap_or(params.grid_size),
            args.string_len.unwrap_or(params.string_len),
        );
    }
    params.validate()?;
    let seed = args.seed.unwrap_or_else(rand::random);
    let attacker = AttackerModel {
        solver: match args.solver {
            SolverArg::None => Solver::None,
            SolverArg::Oracle => Solver::Oracle,
        },
        solver_budget: args.budget,
        knows_segmentation: !args.unknown_segmentation,
    };
    let limits = SimLimits {
        max_sessions: args.max_sessions,
        min_sessions: args.min_sessions,
    };
    let blocks = vec![args.positions; args.pass_images];
    let (summary, reports) = run_trials(&params, &blocks, &attacker, &limits, args.trials, seed)?;

    // Closed-form decoy count only applies to one-letter codes.
    let horizon = summary.mean_pair_candidates.len().min(args.min_sessions.max(1));
    let predicted: Vec<f64> = if args.positions == 1 {
        (1..=horizon)
            .map(|s| expected_candidates(params.grid_size, params.alphabet_size(), params.string_len, s as u32).0)
            .collect()
    } else {
        Vec::new()
    };
    let note = reports
        .iter()
        .find(|r| !r.note.is_empty())
        .map(|r| r.note.clone())
        .unwrap_or_default();

    if args.format == Format::Json {
        let out = Output {
            grid_size: params.grid_size,
            string_len: params.string_len,
            pass_images: args.pass_images,
            positions: args.positions,
            solver: args.solver,
            known_segmentation: !args.unknown_segmentation,
            seed,
            predicted_candidates: predicted,
            summary: &summary,
            note,
        };
        println!("{}", serde_json::to_string_pretty(&out)?);
        return Ok(());
    }

    println!(
        "N={} M={} K={} positions={} solver={:?} segmentation={} trials={} seed={seed}",
        params.grid_size,
        params.string_len,
        args.pass_images,
        args.positions,
        args.solver,
        if args.unknown_segmentation { "unknown" } else { "known" },
        args.trials,
    );
    println!("{:>7}  {:>10}  {:>10}  {:>10}", "session", "images", "pairs", "predicted");
    for s in 0..horizon {
        let pred = predicted.get(s).map(|p| format!("{p:.2}")).unwrap_or_else(|| "-".into());
        println!(
            "{:>7}  {:>10.2}  {:>10.2}  {:>10}",
            s + 1,
            summary.mean_image_candidates[s],
            summary.mean_pair_candidates[s],
            pred
        );
    }
    println!("converged: {}/{}", summary.converged, summary.trials);
    match (summary.sessions_median, summary.sessions_p10, summary.sessions_p90) {
        (Some(m), p10, p90) => println!(
            "sessions until unique: median {m} (p10 {}, p90 {})",
            p10.map_or("-".into(), |v| v.to_string()),
            p90.map_or("-".into(), |v| v.to_string()),
        ),
        _ => println!("sessions until unique: median not reached"),
    }
    if let Some(c) = summary.mean_captchas_to_unique {
        println!("captchas read until unique: mean {c:.1}");
    }
    if summary.converged > 0 {
        println!(
            "recovered passwords log in: {}",
            if summary.all_recovered_verify { "all" } else { "NOT all" }
        );
    }
    if !note.is_empty() {
        println!("note: {note}");
    }
    Ok(())
}
