use captchapass_core::combinatorics::{space_size, SpaceQuery};
use serde::Serialize;

use crate::{CmdResult, Format};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Images shown per login (N).
    #[arg(short = 'n', long, default_value_t = 50)]
    pub grid_size: usize,
    /// Letters per CAPTCHA string (M).
    #[arg(short = 'm', long, default_value_t = 8)]
    pub string_len: usize,
    /// Smallest entered length.
    #[arg(long, default_value_t = 3)]
    pub min_len: usize,
    /// Largest entered length.
    #[arg(long, default_value_t = 10)]
    pub max_len: usize,
    /// Minimum number of pass-images (K_min).
    #[arg(short = 'k', long, default_value_t = 3)]
    pub min_pass_images: usize,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

impl Args {
    pub fn check(&self) -> Result<(), String> {
        if self.max_len < self.min_len {
            return Err(format!(
                "--max-len ({}) is smaller than --min-len ({})",
                self.max_len, self.min_len
            ));
        }
        if self.min_len == 0 {
            return Err("--min-len must be positive".into());
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct Row {
    entered_len: usize,
    count: String,
    approx: String,
    log2: f64,
}

pub fn run(args: Args) -> CmdResult {
    let mut rows = Vec::new();
    for l in args.min_len..=args.max_len {
        let q = SpaceQuery::new(l, args.grid_size, args.string_len)
            .with_min_pass_images(args.min_pass_images);
        let size = space_size(&q)?;
        rows.push(Row {
            entered_len: l,
            count: size.count.to_string(),
            approx: size.count.scientific(2),
            log2: size.log2,
        });
    }
    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&rows)?),
        Format::Text => {
            println!(
                "N={} M={} K_min={}",
                args.grid_size, args.string_len, args.min_pass_images
            );
            println!("{:>3}  {:>28}  {:>8}  {:>7}", "L", "passwords", "approx", "log2");
            for r in &rows {
                println!(
                    "{:>3}  {:>28}  {:>8}  {:>7.2}",
                    r.entered_len, r.count, r.approx, r.log2
                );
            }
        }
    }
    Ok(())
}
