//! Photon-number distributions for the worked example states, plus qubit
//! Bloch vectors.
//!
//! Number distributions are truncated to a finite cutoff with a *certified*
//! tail: both the total mass above the cutoff and a per-entry geometric
//! envelope. The inversion series amplify tails by factors that grow with
//! the cell index, so tails are certified, never guessed.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::Pow;
use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::numerics::{binomial_int, rational_to_f64, Scalar, ScalarMode};

/// Inflate a float upper bound slightly to absorb its own rounding.
pub(crate) fn upper(v: f64) -> f64 {
    v * (1.0 + 1e-9) + f64::MIN_POSITIVE
}

/// Certified per-entry bound on probabilities above the cutoff.
#[derive(Debug, Clone)]
pub enum TailEnvelope {
    /// Probabilities above the cutoff are exactly zero.
    Zero,
    /// p(cutoff + 1 + j) ≤ first · ratio^j with 0 ≤ ratio < 1.
    Geometric { first: f64, ratio: f64 },
    /// Each entry above the cutoff is at most `per_entry`, with no certified
    /// decay (explicitly supplied distributions with a mass deficit).
    Mass { per_entry: f64 },
}

/// Truncated photon-number distribution with certified tail.
#[derive(Debug, Clone)]
pub struct NumberDistribution {
    probs: Vec<Scalar>,
    tail_bound: f64,
    envelope: TailEnvelope,
    mean: Option<f64>,
}

impl NumberDistribution {
    pub fn cutoff(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn probs(&self) -> &[Scalar] {
        &self.probs
    }

    /// p(n), zero above the cutoff.
    pub fn prob(&self, n: usize) -> Scalar {
        self.probs.get(n).cloned().unwrap_or_else(Scalar::zero)
    }

    /// Certified bound on the total mass above the cutoff.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn envelope(&self) -> &TailEnvelope {
        &self.envelope
    }

    /// Certified upper bound on p(n) for any n (entries above the cutoff
    /// fall back to the envelope).
    pub fn entry_bound(&self, n: usize) -> f64 {
        if n < self.probs.len() {
            return self.probs[n].abs_upper();
        }
        let j = n - self.probs.len();
        match self.envelope {
            TailEnvelope::Zero => 0.0,
            TailEnvelope::Geometric { first, ratio } => first * ratio.powi(j as i32),
            TailEnvelope::Mass { per_entry } => per_entry,
        }
    }

    /// Analytically known mean photon number, when the family provides one.
    pub fn analytic_mean(&self) -> Option<f64> {
        self.mean
    }

    /// Σ n p(n) over the stored range. The mass above the cutoff is not
    /// included; its contribution is bounded by the tail only for families
    /// with a decaying envelope.
    pub fn mean_photon_number(&self) -> Scalar {
        let mut acc = Scalar::zero();
        for (n, p) in self.probs.iter().enumerate() {
            acc = &acc + &(&Scalar::from_int(n as i64) * p);
        }
        acc
    }

    /// Σ p(n) over the stored range.
    pub fn total_mass(&self) -> Scalar {
        let mut acc = Scalar::zero();
        for p in &self.probs {
            acc = &acc + p;
        }
        acc
    }

    /// Dominant scalar mode of the stored probabilities.
    pub fn mode(&self) -> ScalarMode {
        if self.probs.iter().all(Scalar::is_exact) {
            ScalarMode::Exact
        } else {
            ScalarMode::Float
        }
    }

    /// Build directly from explicit probabilities (used by the sampler for
    /// empirical frequencies and by custom state specs).
    pub fn from_probs(probs: Vec<Scalar>, tail_bound: f64, envelope: TailEnvelope) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution(
                "empty probability vector".into(),
            ));
        }
        for (n, p) in probs.iter().enumerate() {
            if p.certified_negative() {
                return Err(Error::InvalidDistribution(format!(
                    "p({n}) = {} is negative",
                    p.to_f64()
                )));
            }
        }
        Ok(NumberDistribution {
            probs,
            tail_bound,
            envelope,
            mean: None,
        })
    }
}

/// Tagged state family with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Fock(u32),
    Coherent { nbar: BigRational },
    Thermal { nbar: BigRational },
    PhotonAddedThermal { k: u32, nbar: BigRational },
    SqueezedVacuum { r: f64 },
    Custom { probs: Vec<Scalar> },
}

impl StateSpec {
    /// Default arithmetic mode: rational-parameter families are exact,
    /// coherent and squeezed vacuum involve e^n̄ or tanh r and default to
    /// tracked floats.
    pub fn default_mode(&self) -> ScalarMode {
        match self {
            StateSpec::Fock(_)
            | StateSpec::Thermal { .. }
            | StateSpec::PhotonAddedThermal { .. } => ScalarMode::Exact,
            StateSpec::Coherent { .. } | StateSpec::SqueezedVacuum { .. } => ScalarMode::Float,
            StateSpec::Custom { probs } => {
                if probs.iter().all(Scalar::is_exact) {
                    ScalarMode::Exact
                } else {
                    ScalarMode::Float
                }
            }
        }
    }

    /// Mean photon number of the family, when closed-form.
    pub fn analytic_mean(&self) -> Option<f64> {
        match self {
            StateSpec::Fock(n) => Some(*n as f64),
            StateSpec::Coherent { nbar } | StateSpec::Thermal { nbar } => {
                Some(rational_to_f64(nbar))
            }
            StateSpec::PhotonAddedThermal { k, nbar } => {
                let nb = rational_to_f64(nbar);
                Some(*k as f64 + nb * (*k as f64 + 1.0))
            }
            StateSpec::SqueezedVacuum { r } => Some(r.sinh().powi(2)),
            StateSpec::Custom { .. } => None,
        }
    }

    /// Parse a state expression such as `fock:7`, `pats:k=1,nbar=1`,
    /// `sqvac:r=0.3`, `coherent:nbar=1`, `thermal:nbar=1/2`,
    /// `custom:0.5,0.5` or `custom:@probs.csv`.
    pub fn parse(text: &str) -> Result<StateSpec> {
        let text = text.trim();
        if text == "vacuum" {
            return Ok(StateSpec::Fock(0));
        }
        let (head, args) = match text.split_once(':') {
            Some((h, a)) => (h, a),
            None => (text, ""),
        };
        match head {
            "fock" => {
                let n: u32 = args
                    .parse()
                    .map_err(|_| Error::Parse(format!("fock photon number {args:?}")))?;
                Ok(StateSpec::Fock(n))
            }
            "coherent" => Ok(StateSpec::Coherent {
                nbar: require_rational_field(args, "nbar")?,
            }),
            "thermal" => Ok(StateSpec::Thermal {
                nbar: require_rational_field(args, "nbar")?,
            }),
            "pats" => {
                let fields = parse_fields(args)?;
                let k = fields
                    .iter()
                    .find(|(k, _)| k == "k")
                    .ok_or_else(|| Error::Parse("pats requires k=".into()))?;
                let k: u32 = k
                    .1
                    .parse()
                    .map_err(|_| Error::Parse(format!("pats k {:?}", k.1)))?;
                let nbar = fields
                    .iter()
                    .find(|(k, _)| k == "nbar")
                    .ok_or_else(|| Error::Parse("pats requires nbar=".into()))?;
                Ok(StateSpec::PhotonAddedThermal {
                    k,
                    nbar: parse_rational(&nbar.1)?,
                })
            }
            "sqvac" => {
                let fields = parse_fields(args)?;
                let r = fields
                    .iter()
                    .find(|(k, _)| k == "r")
                    .ok_or_else(|| Error::Parse("sqvac requires r=".into()))?;
                let r: f64 = rational_to_f64(&parse_rational(&r.1)?);
                if r < 0.0 {
                    return Err(Error::InvalidParameter("sqvac r must be >= 0".into()));
                }
                Ok(StateSpec::SqueezedVacuum { r })
            }
            "custom" => {
                let body = if let Some(path) = args.strip_prefix('@') {
                    std::fs::read_to_string(path)?
                } else {
                    args.to_string()
                };
                let probs: Vec<Scalar> = body
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(|t| parse_rational_or_float(t))
                    .collect::<Result<_>>()?;
                if probs.is_empty() {
                    return Err(Error::Parse("custom state has no probabilities".into()));
                }
                Ok(StateSpec::Custom { probs })
            }
            other => Err(Error::Parse(format!("unknown state family {other:?}"))),
        }
    }
}

impl std::fmt::Display for StateSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StateSpec::Fock(n) => write!(f, "fock:{n}"),
            StateSpec::Coherent { nbar } => write!(f, "coherent:nbar={nbar}"),
            StateSpec::Thermal { nbar } => write!(f, "thermal:nbar={nbar}"),
            StateSpec::PhotonAddedThermal { k, nbar } => write!(f, "pats:k={k},nbar={nbar}"),
            StateSpec::SqueezedVacuum { r } => write!(f, "sqvac:r={r}"),
            StateSpec::Custom { probs } => {
                write!(f, "custom:")?;
                for (i, p) in probs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
        }
    }
}

fn parse_fields(args: &str) -> Result<Vec<(String, String)>> {
    args.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {t:?}")))
        })
        .collect()
}

fn require_rational_field(args: &str, name: &str) -> Result<BigRational> {
    let fields = parse_fields(args)?;
    let field = fields
        .iter()
        .find(|(k, _)| k == name)
        .ok_or_else(|| Error::Parse(format!("missing {name}=")))?;
    parse_rational(&field.1)
}

/// Parse an exact rational from `p/q`, decimal, or integer text.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let text = text.trim();
    let bad = || Error::Parse(format!("not a rational number: {text:?}"));
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = text.split_once('.') {
        let neg = int.starts_with('-');
        let int: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().map_err(|_| bad())?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let digits: BigInt = frac.parse().map_err(|_| bad())?;
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_part = BigRational::new(digits, scale);
        let int_part = BigRational::from_integer(int);
        return Ok(if neg {
            int_part - frac_part
        } else {
            int_part + frac_part
        });
    }
    let n: BigInt = text.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(n))
}

fn parse_rational_or_float(text: &str) -> Result<Scalar> {
    if let Ok(r) = parse_rational(text) {
        return Ok(Scalar::Exact(r));
    }
    text.trim()
        .parse::<f64>()
        .map(Scalar::tracked)
        .map_err(|_| Error::Parse(format!("not a number: {text:?}")))
}

/// Options for [`number_distribution`].
#[derive(Debug, Clone)]
pub struct DistributionOptions {
    /// Explicit cutoff; when absent the smallest cutoff with certified tail
    /// below `tail_ceiling` is used.
    pub cutoff: Option<usize>,
    /// Scalar mode override; defaults per family.
    pub mode: Option<ScalarMode>,
    pub tail_ceiling: f64,
}

impl Default for DistributionOptions {
    fn default() -> Self {
        DistributionOptions {
            cutoff: None,
            mode: None,
            tail_ceiling: 1e-15,
        }
    }
}

const MAX_AUTO_CUTOFF: usize = 20_000;

/// Generate the truncated number distribution of a state family.
pub fn number_distribution(spec: &StateSpec, opts: &DistributionOptions) -> Result<NumberDistribution> {
    let mode = opts.mode.unwrap_or_else(|| spec.default_mode());
    let mut dist = match spec {
        StateSpec::Fock(n) => fock_distribution(*n as usize, opts),
        StateSpec::Thermal { nbar } => pats_distribution(0, nbar, opts),
        StateSpec::PhotonAddedThermal { k, nbar } => pats_distribution(*k as usize, nbar, opts),
        StateSpec::Coherent { nbar } => {
            if opts.mode == Some(ScalarMode::Exact) && !nbar.is_zero() {
                return Err(Error::UnsupportedState(
                    "coherent probabilities involve e^(-nbar); use float mode".into(),
                ));
            }
            coherent_distribution(nbar, opts)
        }
        StateSpec::SqueezedVacuum { r } => {
            if opts.mode == Some(ScalarMode::Exact) && *r != 0.0 {
                return Err(Error::UnsupportedState(
                    "squeezed vacuum probabilities involve tanh r; use float mode".into(),
                ));
            }
            squeezed_vacuum_distribution(*r, opts)
        }
        StateSpec::Custom { probs } => custom_distribution(probs, opts),
    }?;
    if mode == ScalarMode::Float {
        for p in &mut dist.probs {
            *p = p.in_mode(ScalarMode::Float);
        }
    }
    dist.mean = spec.analytic_mean();
    Ok(dist)
}

fn fock_distribution(n: usize, opts: &DistributionOptions) -> Result<NumberDistribution> {
    let cutoff = opts.cutoff.unwrap_or(n);
    if cutoff < n {
        return Err(Error::CutoffTooSmall {
            cutoff,
            tail: 1.0,
            ceiling: opts.tail_ceiling,
        });
    }
    let mut probs = vec![Scalar::zero(); cutoff + 1];
    probs[n] = Scalar::one();
    Ok(NumberDistribution {
        probs,
        tail_bound: 0.0,
        envelope: TailEnvelope::Zero,
        mean: None,
    })
}

/// Photon-added thermal family; k = 0 is the plain thermal state.
/// p(n ≥ k) = C(n,k) q^(n−k) / (n̄+1)^(k+1) with q = n̄/(n̄+1).
fn pats_distribution(
    k: usize,
    nbar: &BigRational,
    opts: &DistributionOptions,
) -> Result<NumberDistribution> {
    if nbar.is_negative() {
        return Err(Error::InvalidParameter("nbar must be >= 0".into()));
    }
    if nbar.is_zero() {
        // thermal reduces to vacuum, k-added to the Fock state |k>
        return fock_distribution(k, opts);
    }
    let one = BigRational::one();
    let q = nbar / (nbar + &one);
    let qf = upper(rational_to_f64(&q));
    // geometric-envelope tail: ratio of successive entries is
    // q (n+1)/(n+1-k), decreasing in n towards q.
    let tail_at = |c: usize, p_next: f64| -> (f64, f64) {
        let ratio = upper(qf * (c as f64 + 2.0) / (c as f64 + 2.0 - k as f64));
        if ratio >= 1.0 {
            (f64::INFINITY, ratio)
        } else {
            (upper(p_next / (1.0 - ratio)), ratio)
        }
    };

    let mut probs: Vec<BigRational> = Vec::new();
    let mut extend = |probs: &mut Vec<BigRational>, upto: usize| {
        while probs.len() <= upto {
            let n = probs.len();
            let p = if n < k {
                BigRational::zero()
            } else if n == k {
                Pow::pow(&one / (nbar + &one), (k + 1) as i32)
            } else {
                &probs[n - 1] * &q * BigRational::new(BigInt::from(n), BigInt::from(n - k))
            };
            probs.push(p);
        }
    };

    let cutoff = match opts.cutoff {
        Some(c) => {
            extend(&mut probs, c + 1);
            let (tail, _) = tail_at(c, rational_to_f64(&probs[c + 1]));
            if tail > opts.tail_ceiling {
                return Err(Error::CutoffTooSmall {
                    cutoff: c,
                    tail,
                    ceiling: opts.tail_ceiling,
                });
            }
            c
        }
        None => {
            let mut c = k.max(1);
            loop {
                extend(&mut probs, c + 1);
                let (tail, _) = tail_at(c, rational_to_f64(&probs[c + 1]));
                if tail <= opts.tail_ceiling {
                    break c;
                }
                c += 1;
                if c > MAX_AUTO_CUTOFF {
                    return Err(Error::CutoffTooSmall {
                        cutoff: c,
                        tail,
                        ceiling: opts.tail_ceiling,
                    });
                }
            }
        }
    };
    let (tail, ratio) = tail_at(cutoff, rational_to_f64(&probs[cutoff + 1]));
    let first = upper(rational_to_f64(&probs[cutoff + 1]));
    probs.truncate(cutoff + 1);
    Ok(NumberDistribution {
        probs: probs.into_iter().map(Scalar::Exact).collect(),
        tail_bound: tail,
        envelope: TailEnvelope::Geometric { first, ratio },
        mean: None,
    })
}

fn coherent_distribution(
    nbar: &BigRational,
    opts: &DistributionOptions,
) -> Result<NumberDistribution> {
    if nbar.is_negative() {
        return Err(Error::InvalidParameter("nbar must be >= 0".into()));
    }
    if nbar.is_zero() {
        return fock_distribution(0, opts);
    }
    let m = rational_to_f64(nbar);
    // p(n+1)/p(n) = m/(n+1); certified envelope once past the mean.
    let tail_at = |c: usize, p_next: f64| -> (f64, f64) {
        let ratio = upper(m / (c as f64 + 2.0));
        if ratio >= 1.0 {
            (f64::INFINITY, ratio)
        } else {
            (upper(p_next / (1.0 - ratio)), ratio)
        }
    };
    let mut probs: Vec<Scalar> = vec![Scalar::tracked_rounded((-m).exp())];
    let mut extend = |probs: &mut Vec<Scalar>, upto: usize| {
        while probs.len() <= upto {
            let n = probs.len();
            let p = &(probs.last().unwrap() * &Scalar::tracked(m)) / &Scalar::from_int(n as i64);
            probs.push(p);
        }
    };
    let cutoff = match opts.cutoff {
        Some(c) => {
            extend(&mut probs, c + 1);
            let (tail, _) = tail_at(c, probs[c + 1].abs_upper());
            if tail > opts.tail_ceiling {
                return Err(Error::CutoffTooSmall {
                    cutoff: c,
                    tail,
                    ceiling: opts.tail_ceiling,
                });
            }
            c
        }
        None => {
            let mut c = (2.0 * m).ceil() as usize + 10;
            loop {
                extend(&mut probs, c + 1);
                let (tail, _) = tail_at(c, probs[c + 1].abs_upper());
                if tail <= opts.tail_ceiling {
                    break c;
                }
                c += 1;
                if c > MAX_AUTO_CUTOFF {
                    return Err(Error::CutoffTooSmall {
                        cutoff: c,
                        tail,
                        ceiling: opts.tail_ceiling,
                    });
                }
            }
        }
    };
    let (tail, ratio) = tail_at(cutoff, probs[cutoff + 1].abs_upper());
    let first = probs[cutoff + 1].abs_upper();
    probs.truncate(cutoff + 1);
    Ok(NumberDistribution {
        probs,
        tail_bound: tail,
        envelope: TailEnvelope::Geometric { first, ratio },
        mean: None,
    })
}

/// Squeezed vacuum: only even numbers populated,
/// p(n) = n!/(2^n ((n/2)!)^2) tanh^n r / cosh r.
fn squeezed_vacuum_distribution(r: f64, opts: &DistributionOptions) -> Result<NumberDistribution> {
    if r == 0.0 {
        return fock_distribution(0, opts);
    }
    let t = r.tanh();
    let t2 = Scalar::tracked_rounded(t * t);
    // p(n+2)/p(n) = tanh^2 r (n+1)/(n+2) ≤ tanh^2 r
    let mut probs: Vec<Scalar> = vec![Scalar::tracked_rounded(1.0 / r.cosh())];
    let mut extend = |probs: &mut Vec<Scalar>, upto: usize| {
        while probs.len() <= upto {
            let n = probs.len();
            let p = if n % 2 == 1 {
                Scalar::zero()
            } else {
                let prev = &probs[n - 2];
                &(prev * &t2) * &Scalar::tracked((n as f64 - 1.0) / n as f64)
            };
            probs.push(p);
        }
    };
    // tail beyond cutoff c: even entries from e+2 on, with e the largest
    // even index ≤ c; bounded by p(e) t^2/(1−t^2).
    let tail_at = |probs: &[Scalar], c: usize| -> f64 {
        let e = if c % 2 == 0 { c } else { c - 1 };
        upper(probs[e].abs_upper() * t * t / (1.0 - t * t))
    };
    let cutoff = match opts.cutoff {
        Some(c) => {
            extend(&mut probs, c);
            let tail = tail_at(&probs, c);
            if tail > opts.tail_ceiling {
                return Err(Error::CutoffTooSmall {
                    cutoff: c,
                    tail,
                    ceiling: opts.tail_ceiling,
                });
            }
            c
        }
        None => {
            let mut c = 2usize;
            loop {
                extend(&mut probs, c);
                let tail = tail_at(&probs, c);
                if tail <= opts.tail_ceiling {
                    break c;
                }
                c += 2;
                if c > MAX_AUTO_CUTOFF {
                    return Err(Error::CutoffTooSmall {
                        cutoff: c,
                        tail,
                        ceiling: opts.tail_ceiling,
                    });
                }
            }
        }
    };
    let e = if cutoff % 2 == 0 { cutoff } else { cutoff - 1 };
    let first = upper(probs[e].abs_upper() * t.powi((cutoff + 1 - e) as i32));
    let tail = tail_at(&probs, cutoff);
    probs.truncate(cutoff + 1);
    Ok(NumberDistribution {
        probs,
        tail_bound: tail,
        envelope: TailEnvelope::Geometric { first, ratio: t },
        mean: None,
    })
}

fn custom_distribution(probs: &[Scalar], opts: &DistributionOptions) -> Result<NumberDistribution> {
    let mut probs = probs.to_vec();
    if let Some(c) = opts.cutoff {
        if c + 1 < probs.len() {
            return Err(Error::CutoffTooSmall {
                cutoff: c,
                tail: 1.0,
                ceiling: opts.tail_ceiling,
            });
        }
        probs.resize(c + 1, Scalar::zero());
    }
    let dist = NumberDistribution::from_probs(probs, 0.0, TailEnvelope::Zero)?;
    let mass = dist.total_mass();
    let deficit = 1.0 - mass.to_f64();
    if deficit < -1e-9 - mass.error_bound() {
        return Err(Error::InvalidDistribution(format!(
            "probabilities sum to {} > 1",
            mass.to_f64()
        )));
    }
    let exact_unit = mass.as_rational().map(|r| r.is_one()).unwrap_or(false);
    let (tail, envelope) = if exact_unit || deficit.abs() <= mass.error_bound() + 1e-15 {
        (deficit.max(0.0), TailEnvelope::Zero)
    } else {
        (
            deficit.max(0.0),
            TailEnvelope::Mass {
                per_entry: deficit.max(0.0),
            },
        )
    };
    Ok(NumberDistribution {
        tail_bound: tail,
        envelope,
        ..dist
    })
}

/// Qubit state as a real 3-vector with |s| ≤ 1.
#[derive(Debug, Clone)]
pub struct BlochState {
    s: [Scalar; 3],
}

impl BlochState {
    pub fn new(s: [f64; 3]) -> Result<Self> {
        let norm_sq = s.iter().map(|c| c * c).sum::<f64>();
        if norm_sq > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "Bloch vector norm {} exceeds 1",
                norm_sq.sqrt()
            )));
        }
        Ok(BlochState {
            s: [
                Scalar::tracked(s[0]),
                Scalar::tracked(s[1]),
                Scalar::tracked(s[2]),
            ],
        })
    }

    /// Exact-rational Bloch vector; s·s ≤ 1 is checked exactly.
    pub fn exact(sx: BigRational, sy: BigRational, sz: BigRational) -> Result<Self> {
        let norm_sq = &sx * &sx + &sy * &sy + &sz * &sz;
        if norm_sq > BigRational::one() {
            return Err(Error::InvalidParameter(
                "Bloch vector norm exceeds 1".into(),
            ));
        }
        Ok(BlochState {
            s: [Scalar::Exact(sx), Scalar::Exact(sy), Scalar::Exact(sz)],
        })
    }

    pub fn components(&self) -> &[Scalar; 3] {
        &self.s
    }

    pub fn as_f64(&self) -> [f64; 3] {
        [self.s[0].to_f64(), self.s[1].to_f64(), self.s[2].to_f64()]
    }

    pub fn norm_sq(&self) -> f64 {
        self.as_f64().iter().map(|c| c * c).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(spec: &str) -> NumberDistribution {
        number_distribution(
            &StateSpec::parse(spec).unwrap(),
            &DistributionOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn fock_is_a_delta() {
        let d = dist("fock:7");
        assert_eq!(d.prob(7), Scalar::one());
        assert!(d.probs().iter().enumerate().all(|(n, p)| (n == 7) != p.is_zero()));
        assert_eq!(d.tail_bound(), 0.0);
        assert_eq!(d.mean_photon_number(), Scalar::from_int(7));
    }

    #[test]
    fn pats_closed_form() {
        // k=1, nbar=1: p(0) = 0, p(n) = (1/4) n (1/2)^(n-1)
        let d = dist("pats:k=1,nbar=1");
        assert!(d.prob(0).is_zero());
        for n in 1..=10usize {
            let expected = Scalar::from_ratio(n as i64, 1)
                * Scalar::from_ratio(1, 4)
                * Scalar::Exact(Pow::pow(
                    BigRational::new(BigInt::from(1), BigInt::from(2)),
                    (n - 1) as i32,
                ));
            assert_eq!(d.prob(n), expected, "n = {n}");
        }
        assert!(d.tail_bound() < 1e-15);
    }

    #[test]
    fn thermal_is_pats_with_k_zero() {
        let t = dist("thermal:nbar=1");
        let p = dist("pats:k=0,nbar=1");
        for n in 0..=t.cutoff().min(p.cutoff()) {
            assert_eq!(t.prob(n), p.prob(n));
        }
        // thermal p(n) = (1/2)^(n+1) at nbar = 1
        assert_eq!(t.prob(0), Scalar::from_ratio(1, 2));
        assert_eq!(t.prob(3), Scalar::from_ratio(1, 16));
    }

    #[test]
    fn squeezed_vacuum_mean_and_parity() {
        let d = dist("sqvac:r=0.3");
        let nbar = 0.3f64.sinh().powi(2);
        assert!((nbar - 0.09181).abs() < 1e-5);
        let mean = d.mean_photon_number();
        assert!((mean.to_f64() - nbar).abs() < 1e-12);
        for n in (1..=d.cutoff()).step_by(2) {
            assert!(d.prob(n).is_zero());
        }
    }

    #[test]
    fn coherent_mean_within_tolerance() {
        let d = number_distribution(
            &StateSpec::parse("coherent:nbar=1").unwrap(),
            &DistributionOptions {
                cutoff: Some(40),
                ..Default::default()
            },
        )
        .unwrap();
        assert!((d.mean_photon_number().to_f64() - 1.0).abs() < 1e-12);
        let mass = d.total_mass().to_f64();
        assert!(1.0 - mass >= 0.0 || (1.0 - mass).abs() < 1e-14);
        assert!(1.0 - mass <= d.tail_bound() + 1e-14);
    }

    #[test]
    fn cutoff_too_small_is_reported() {
        let err = number_distribution(
            &StateSpec::parse("thermal:nbar=1").unwrap(),
            &DistributionOptions {
                cutoff: Some(3),
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::CutoffTooSmall { .. }));
    }

    #[test]
    fn normalization_with_certified_tail() {
        for spec in ["thermal:nbar=1", "pats:k=2,nbar=1/2", "coherent:nbar=2", "sqvac:r=0.4"] {
            let d = dist(spec);
            let mass = d.total_mass().to_f64();
            let low = 1.0 - d.tail_bound() - d.total_mass().error_bound() - 1e-12;
            assert!(mass >= low, "{spec}: mass {mass} below {low}");
            assert!(mass <= 1.0 + d.total_mass().error_bound() + 1e-12, "{spec}");
        }
    }

    #[test]
    fn parse_roundtrip() {
        for text in [
            "fock:7",
            "coherent:nbar=1",
            "thermal:nbar=1/2",
            "pats:k=1,nbar=1",
            "sqvac:r=0.3",
            "custom:1/2,1/2",
        ] {
            let spec = StateSpec::parse(text).unwrap();
            assert_eq!(StateSpec::parse(&spec.to_string()).unwrap(), spec);
        }
        assert_eq!(StateSpec::parse("vacuum").unwrap(), StateSpec::Fock(0));
        assert_eq!(
            parse_rational("0.3").unwrap(),
            BigRational::new(BigInt::from(3), BigInt::from(10))
        );
    }

    #[test]
    fn bloch_norm_validation() {
        assert!(BlochState::new([0.8, 0.7, 0.0]).is_err());
        let s = BlochState::new([1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt(), 0.0]).unwrap();
        assert!((s.norm_sq() - 1.0).abs() < 1e-12);
        assert!(BlochState::exact(
            BigRational::new(BigInt::from(3), BigInt::from(5)),
            BigRational::new(BigInt::from(4), BigInt::from(5)),
            BigRational::zero(),
        )
        .is_ok());
    }
}
