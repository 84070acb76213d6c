//! Exact size of the password space and the closed-form probabilities of
//! the guessing and spyware analyses.
//!
//! A password with `K` pass-images and `n_q` positions on image `q` can be
//! chosen in `C(N, K) * prod_q C(M, n_q)` ways. Summing the product over the
//! ordered compositions `n_1 + ... + n_K = L` with `1 <= n_q <= M` gives
//! `O(K, L, N, M)`, and summing `C(N, K) * O` over `K >= K_min` gives the
//! number of passwords of entered length `L`.

use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CombinatoricsError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("accepted count {accepted} exceeds {k}! = {max}")]
    AcceptedExceedsFactorial { accepted: u64, k: usize, max: BigUint },
}

/// Arbitrary-precision nonnegative count.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactCount(pub BigUint);

impl ExactCount {
    pub fn zero() -> Self {
        ExactCount(BigUint::zero())
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    /// Base-2 logarithm; `-inf` for zero. Computed from the bit length and
    /// the leading 53 bits so counts far beyond `f64` range stay accurate.
    pub fn log2(&self) -> f64 {
        let bits = self.0.bits();
        if bits == 0 {
            return f64::NEG_INFINITY;
        }
        if bits <= 53 {
            return self.0.to_f64().unwrap().log2();
        }
        let shift = bits - 53;
        let top = (&self.0 >> shift).to_f64().unwrap();
        top.log2() + shift as f64
    }

    /// Decimal scientific notation rounded half-up to `sig` significant
    /// digits, e.g. `2.6e19`.
    pub fn scientific(&self, sig: usize) -> String {
        let (mantissa, exp) = self.round_sig(sig);
        if mantissa.len() == 1 {
            format!("{mantissa}e{exp}")
        } else {
            format!("{}.{}e{exp}", &mantissa[..1], &mantissa[1..])
        }
    }

    /// Leading `sig` decimal digits (rounded) and the decimal exponent.
    pub fn round_sig(&self, sig: usize) -> (String, usize) {
        let sig = sig.max(1);
        let digits = self.0.to_str_radix(10);
        let exp = digits.len() - 1;
        if digits.len() <= sig {
            let mut m = digits.clone();
            m.extend(std::iter::repeat_n('0', sig - digits.len()));
            return (m, exp);
        }
        let mut head: Vec<u8> = digits.as_bytes()[..sig].iter().map(|b| b - b'0').collect();
        let round_up = digits.as_bytes()[sig] >= b'5';
        let mut exp = exp;
        if round_up {
            let mut i = sig;
            loop {
                if i == 0 {
                    head.insert(0, 1);
                    head.pop();
                    exp += 1;
                    break;
                }
                i -= 1;
                if head[i] == 9 {
                    head[i] = 0;
                } else {
                    head[i] += 1;
                    break;
                }
            }
        }
        (head.iter().map(|d| (b'0' + d) as char).collect(), exp)
    }
}

impl fmt::Display for ExactCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for ExactCount {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_str_radix(10))
    }
}

impl From<u64> for ExactCount {
    fn from(v: u64) -> Self {
        ExactCount(BigUint::from(v))
    }
}

/// Parameters of one row of the password-space table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SpaceQuery {
    pub entered_len: usize,
    pub grid_size: usize,
    pub string_len: usize,
    pub min_pass_images: usize,
}

impl SpaceQuery {
    pub fn new(entered_len: usize, grid_size: usize, string_len: usize) -> Self {
        SpaceQuery {
            entered_len,
            grid_size,
            string_len,
            min_pass_images: 3,
        }
    }

    pub fn with_min_pass_images(mut self, k: usize) -> Self {
        self.min_pass_images = k;
        self
    }

    pub fn validate(&self) -> Result<(), CombinatoricsError> {
        let bad = |m: String| Err(CombinatoricsError::InvalidQuery(m));
        if self.min_pass_images == 0 {
            return bad("min_pass_images must be positive".into());
        }
        if self.entered_len < self.min_pass_images {
            return bad(format!(
                "L = {} is below K_min = {}",
                self.entered_len, self.min_pass_images
            ));
        }
        if self.string_len == 0 {
            return bad("M must be positive".into());
        }
        if self.grid_size < self.min_pass_images {
            return bad(format!(
                "N = {} is below K_min = {}",
                self.grid_size, self.min_pass_images
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceSize {
    pub count: ExactCount,
    pub log2: f64,
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

pub fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * i)
}

/// Ordered tuples `(n_1..n_K)` with `1 <= n_q <= M` summing to `L`, in
/// lexicographic order.
pub fn compositions(total: usize, parts: usize, max_part: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if parts == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    let mut cur = Vec::with_capacity(parts);
    compose(total, parts, max_part, &mut cur, &mut out);
    out
}

fn compose(
    remaining: usize,
    parts_left: usize,
    max_part: usize,
    cur: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if parts_left == 0 {
        if remaining == 0 {
            out.push(cur.clone());
        }
        return;
    }
    // Remaining parts need at least 1 and at most max_part each.
    let rest = parts_left - 1;
    if remaining < parts_left || remaining > parts_left * max_part {
        return;
    }
    let lo = remaining.saturating_sub(rest * max_part).max(1);
    let hi = max_part.min(remaining - rest);
    for n in lo..=hi {
        cur.push(n);
        compose(remaining - n, rest, max_part, cur, out);
        cur.pop();
    }
}

/// Coefficients `c[0..=L]` of `(sum_{j=1..M} w(j) x^j)^K`.
fn weighted_power(total: usize, parts: usize, max_part: usize, weight: impl Fn(usize) -> BigUint) -> Vec<BigUint> {
    let w: Vec<BigUint> = (0..=max_part.min(total)).map(|j| if j == 0 { BigUint::zero() } else { weight(j) }).collect();
    let mut poly = vec![BigUint::zero(); total + 1];
    poly[0] = BigUint::one();
    for _ in 0..parts {
        let mut next = vec![BigUint::zero(); total + 1];
        for (deg, c) in poly.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (j, wj) in w.iter().enumerate().skip(1) {
                if deg + j > total {
                    break;
                }
                next[deg + j] += c * wj;
            }
        }
        poly = next;
    }
    poly
}

/// Number of compositions of `L` into `K` parts in `[1, M]`: the
/// coefficient of `x^L` in `(x + ... + x^M)^K`.
pub fn composition_count(total: usize, parts: usize, max_part: usize) -> BigUint {
    weighted_power(total, parts, max_part, |_| BigUint::one())
        .pop()
        .unwrap_or_default()
}

/// Passwords of length `L` once the `K` pass-images are fixed:
/// `sum over compositions of prod_q C(M, n_q)`.
pub fn count_o(parts: usize, total: usize, _grid_size: usize, string_len: usize) -> ExactCount {
    ExactCount(
        weighted_power(total, parts, string_len, |j| binomial(string_len, j))
            .pop()
            .unwrap_or_default(),
    )
}

/// `C(N, K) * O(K, L, N, M)`.
pub fn count_p(parts: usize, total: usize, grid_size: usize, string_len: usize) -> ExactCount {
    let choose = binomial(grid_size, parts);
    if choose.is_zero() {
        return ExactCount::zero();
    }
    ExactCount(choose * count_o(parts, total, grid_size, string_len).0)
}

/// Number of passwords of entered length `L`, summed over `K_min <= K <= L`.
pub fn space_size(q: &SpaceQuery) -> Result<SpaceSize, CombinatoricsError> {
    q.validate()?;
    let mut total = BigUint::zero();
    for k in q.min_pass_images..=q.entered_len {
        total += count_p(k, q.entered_len, q.grid_size, q.string_len).0;
    }
    let count = ExactCount(total);
    let log2 = count.log2();
    Ok(SpaceSize { count, log2 })
}

/// Chance that one uniformly random string of length `L` is accepted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GuessProbability {
    #[serde(serialize_with = "ser_ratio")]
    pub exact: BigRational,
    pub value: f64,
    /// `K! / A^L`, reached when every ordering yields a different string.
    #[serde(serialize_with = "ser_ratio")]
    pub bound_exact: BigRational,
    pub bound: f64,
}

fn ser_ratio<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    // Scale into range before converting so A^L beyond 2^1023 still works.
    let num = ExactCount(r.numer().to_biguint().unwrap_or_default());
    let den = ExactCount(r.denom().to_biguint().unwrap_or_default());
    if num.0.is_zero() {
        return 0.0;
    }
    (num.log2() - den.log2()).exp2()
}

/// `accepted / A^L` together with its analytic ceiling `K! / A^L`.
/// `block_lens` are the per-image code lengths; `L` is their sum.
pub fn guess_success_probability(
    block_lens: &[usize],
    alphabet_size: usize,
    accepted: u64,
) -> Result<GuessProbability, CombinatoricsError> {
    if alphabet_size == 0 {
        return Err(CombinatoricsError::InvalidQuery("empty alphabet".into()));
    }
    let k = block_lens.len();
    let max = factorial(k);
    if BigUint::from(accepted) > max {
        return Err(CombinatoricsError::AcceptedExceedsFactorial { accepted, k, max });
    }
    let total: usize = block_lens.iter().sum();
    let space = num_traits::pow(BigUint::from(alphabet_size), total);
    let to_rat = |n: BigUint| BigRational::new(n.into(), space.clone().into());
    let exact = to_rat(BigUint::from(accepted));
    let bound_exact = to_rat(max);
    Ok(GuessProbability {
        value: ratio_to_f64(&exact),
        bound: ratio_to_f64(&bound_exact),
        exact,
        bound_exact,
    })
}

/// Probability that a given letter occurs somewhere in a uniform string of
/// length `M` over `A` letters: `1 - ((A-1)/A)^M`.
pub fn char_presence_prob(alphabet_size: usize, string_len: usize) -> f64 {
    let a = alphabet_size as f64;
    1.0 - ((a - 1.0) / a).powi(string_len as i32)
}

/// Expected images consistent with a one-letter segment after `s`
/// independent observations: the pass-image plus `(N-1) p^s` decoys.
/// Returns `(total, decoys)`.
pub fn expected_candidates(
    grid_size: usize,
    alphabet_size: usize,
    string_len: usize,
    observations: u32,
) -> (f64, f64) {
    if grid_size == 0 {
        return (0.0, 0.0);
    }
    let p = char_presence_prob(alphabet_size, string_len);
    let decoys = (grid_size - 1) as f64 * p.powi(observations as i32);
    (1.0 + decoys, decoys)
}

/// Chance of naming the pass-image for one segment after a single
/// observation by picking among the images that contain its letter:
/// `1 / (N p)`.
pub fn per_image_identification_prob(
    grid_size: usize,
    alphabet_size: usize,
    string_len: usize,
) -> f64 {
    1.0 / (grid_size as f64 * char_presence_prob(alphabet_size, string_len))
}

/// `(1 / (N p))^K`: all `K` one-position pass-images guessed from one
/// observation.
pub fn single_shot_crack_prob(
    grid_size: usize,
    alphabet_size: usize,
    string_len: usize,
    pass_images: usize,
) -> f64 {
    per_image_identification_prob(grid_size, alphabet_size, string_len).powi(pass_images as i32)
}
