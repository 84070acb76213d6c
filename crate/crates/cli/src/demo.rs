use std::collections::BTreeSet;

use captchapass_core::attack::{crack_basic_scheme, replay_attack, Observation};
use captchapass_core::captcha::gen_string;
use captchapass_core::rng::derive_seed;
use captchapass_core::{
    accepted_strings, create_basic_profile, create_profile, expected_codes, generate_challenge,
    verify, ImageId, SchemeParams,
};

use crate::CmdResult;

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Keep the generated strings under the pass-images instead of the
    /// fixed example strings.
    #[arg(long)]
    pub random: bool,
}

const EXAMPLE: [(&str, &str, &[usize]); 3] = [
    ("img003", "qarwrxex", &[1, 2, 4]),
    ("img017", "heeqreso", &[4, 6, 8]),
    ("img042", "mvgqqebh", &[3, 5]),
];

pub fn run(args: Args) -> CmdResult {
    let params = SchemeParams::experimental();
    let images: Vec<ImageId> = EXAMPLE.iter().map(|e| ImageId::from(e.0)).collect();
    let positions: Vec<Vec<usize>> = EXAMPLE.iter().map(|e| e.2.to_vec()).collect();
    let profile = create_profile("demo", &images, &positions, &params)?;

    println!("profile: {} pass-images, entered length {}", profile.image_count(), profile.entered_len());
    for p in profile.pass_images() {
        println!("  {} positions {:?}", p.image, p.positions);
    }

    let mut challenge = generate_challenge(&profile, &params, args.seed)?;
    if !args.random {
        for (img, text, _) in EXAMPLE {
            for cell in challenge.cells.iter_mut().filter(|c| c.image.as_str() == img) {
                cell.text = text.to_owned();
            }
        }
        // Keep every string on screen distinct.
        let fixed: BTreeSet<&str> = EXAMPLE.iter().map(|e| e.1).collect();
        let mut salt = 0;
        for cell in challenge.cells.iter_mut() {
            let is_pass = EXAMPLE.iter().any(|e| e.0 == cell.image.as_str());
            while !is_pass && fixed.contains(cell.text.as_str()) {
                salt += 1;
                cell.text = gen_string(&params.alphabet, params.string_len, derive_seed(args.seed, salt))?;
            }
        }
    }
    println!("\nchallenge {} shows {} images; under the pass-images:", challenge.id, challenge.cells.len());
    for cell in challenge.cells.iter().filter(|c| images.contains(&c.image)) {
        println!("  slot {:>2}  {}  {}", cell.slot, cell.image, cell.text);
    }

    let codes = expected_codes(&profile, &challenge)?;
    println!("\ncodes: {}", codes.join(" "));
    let accepted = accepted_strings(&profile, &challenge)?;
    println!("accepted strings ({}):", accepted.len());
    for s in &accepted {
        println!("  {s}");
    }

    let typed: String = codes.iter().rev().map(String::as_str).collect();
    let recorded = Observation::from_challenge(&challenge, typed.clone());
    let verdict = verify(&profile, &mut challenge, &typed, 0)?;
    println!("\nlogin with {typed}: {verdict:?}");
    match verify(&profile, &mut challenge, &typed, 0) {
        Ok(v) => println!("same challenge again: {v:?}"),
        Err(e) => println!("same challenge again: {e}"),
    }
    let fresh = generate_challenge(&profile, &params, derive_seed(args.seed, 1))?;
    let replayed = replay_attack(&recorded, &fresh, &profile);
    println!(
        "replaying {typed} on a fresh challenge: {}",
        if replayed { "accepted" } else { "rejected" }
    );

    let basic = create_basic_profile("demo-basic", &images, &params)?;
    let mut basic_challenge = generate_challenge(&basic, &params, derive_seed(args.seed, 2))?;
    let basic_typed = expected_codes(&basic, &basic_challenge)?.concat();
    let obs = Observation::from_challenge(&basic_challenge, basic_typed.clone());
    verify(&basic, &mut basic_challenge, &basic_typed, 0)?;
    let found = crack_basic_scheme(&obs, params.string_len)?;
    let found_set: BTreeSet<&ImageId> = found.iter().collect();
    let real: BTreeSet<&ImageId> = images.iter().collect();
    println!("\nbasic scheme (whole strings typed): {basic_typed}");
    println!(
        "one recorded login reveals {}: {}",
        found.iter().map(ImageId::as_str).collect::<Vec<_>>().join(" "),
        if found_set == real { "all pass-images recovered" } else { "recovery failed" }
    );
    Ok(())
}
