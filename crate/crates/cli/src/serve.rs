use std::path::PathBuf;

use captchapass_server::{serve, ServerConfig};

use crate::CmdResult;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Configuration file (`key = value` lines).
    pub config: Option<PathBuf>,
    /// Override the configured port.
    #[arg(long)]
    pub port: Option<u16>,
    /// Override the configured store file.
    #[arg(long)]
    pub store: Option<PathBuf>,
}

pub fn run(args: Args) -> CmdResult {
    let mut config = match &args.config {
        Some(path) => ServerConfig::load(path)?,
        None => ServerConfig::default(),
    };
    if let Some(p) = args.port {
        config.port = p;
    }
    if let Some(s) = args.store {
        config.store_path = s;
    }
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(serve(config, |addr| {
        println!("listening on http://{addr}");
    }))?;
    Ok(())
}
