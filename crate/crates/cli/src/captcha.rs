use std::path::PathBuf;

use captchapass_core::captcha::{render, RenderParams};

use crate::CmdResult;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Lowercase text to render.
    pub text: String,
    #[arg(short, long, default_value = "captcha.png")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub glyph_height: Option<u32>,
    /// Maximum rotation per letter, in degrees.
    #[arg(long)]
    pub rotation: Option<f64>,
    #[arg(long)]
    pub wave_amplitude: Option<f64>,
    #[arg(long)]
    pub wave_period: Option<f64>,
    /// Horizontal overlap of neighbouring letters, in pixels.
    #[arg(long)]
    pub overlap: Option<u32>,
    /// Fraction of pixels flipped.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Start from no distortion instead of the defaults.
    #[arg(long)]
    pub plain: bool,
}

pub fn run(args: Args) -> CmdResult {
    let mut p = if args.plain {
        RenderParams::plain(RenderParams::default().glyph_height)
    } else {
        RenderParams::default()
    };
    p.seed = args.seed;
    if let Some(v) = args.glyph_height {
        p.glyph_height = v;
    }
    if let Some(v) = args.rotation {
        p.rotation_jitter = v;
    }
    if let Some(v) = args.wave_amplitude {
        p.wave_amplitude = v;
    }
    if let Some(v) = args.wave_period {
        p.wave_period = v;
    }
    if let Some(v) = args.overlap {
        p.overlap = v;
    }
    if let Some(v) = args.noise {
        p.noise_density = v;
    }
    let img = render(&args.text, &p)?;
    std::fs::write(&args.out, img.to_png()?)?;
    println!("wrote {} ({}x{})", args.out.display(), img.width, img.height);
    Ok(())
}
