//! CAPTCHA-augmented graphical passwords.
//!
//! A user registers a few pass-images and, for each, a set of secret string
//! positions. At login every image in the grid shows a fresh random string
//! rendered as a CAPTCHA, and the user types the characters at their
//! pass-positions under their pass-images, in any image order. Spyware that
//! records the session sees only a string that changes every time; undoing
//! it requires reading the CAPTCHAs.
//!
//! Besides the scheme itself the crate counts the password space exactly
//! ([`combinatorics`]) and simulates the adversaries that record logins
//! ([`attack`]).

pub mod attack;
pub mod captcha;
pub mod challenge;
pub mod combinatorics;
pub mod error;
pub mod params;
pub mod profile;
pub mod rng;
pub mod verify;

pub use challenge::{generate_challenge, Challenge, GridCell};
pub use error::SchemeError;
pub use params::{ImageId, SchemeParams};
pub use profile::{create_basic_profile, create_profile, PassImage, PasswordProfile};
pub use verify::{accepted_strings, expected_codes, verify, verify_multi_round, RejectReason, Verdict};
