//! Nonlinearities `s -> f(s)` and finite-sample checks of the growth
//! hypotheses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Critical Sobolev exponent `(N+2)/(N-2)`, kept as a rational.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CriticalExponent {
    pub numerator: u32,
    pub denominator: u32,
}

impl CriticalExponent {
    pub fn for_dimension(n: u32) -> Option<Self> {
        (n >= 3).then_some(CriticalExponent {
            numerator: n + 2,
            denominator: n - 2,
        })
    }

    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

/// Piecewise nonlinearity oscillating between `s^p` and `s^q`.
///
/// On `[0, a_1]` it is `s^p`; on `[a_j, b_j]` it is `s^{N*} / a_j^{N*-p}`; on
/// `[b_j, a_{j+1}]` it is the constant `f(b_j)`, with
/// `b_j = a_j^{(N*-p)/(N*-q)}` and `a_{j+1} = b_j^{q/p}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Staircase {
    pub p: f64,
    pub q: f64,
    pub critical: f64,
    /// `a_1 .. a_{n}`
    pub a: Vec<f64>,
    /// `b_1 .. b_{n}`
    pub b: Vec<f64>,
}

impl Staircase {
    pub fn new(p: f64, q: f64, a1: f64, dim: u32, n_levels: usize) -> Result<Staircase> {
        let critical = CriticalExponent::for_dimension(dim)
            .ok_or_else(|| Error::InvalidArgument("staircase needs N >= 3".into()))?
            .value();
        if !(1.0 < p && p < q && q < critical) {
            return Err(Error::InvalidArgument(format!(
                "staircase needs 1 < p < q < N* (p = {p}, q = {q}, N* = {critical})"
            )));
        }
        if !(a1 > 1.0 && a1.is_finite()) {
            return Err(Error::InvalidArgument(format!("staircase needs a_1 > 1, got {a1}")));
        }
        if n_levels == 0 {
            return Err(Error::InvalidArgument("staircase needs at least one level".into()));
        }
        let ratio = (critical - p) / (critical - q);
        let mut a = vec![a1];
        let mut b = Vec::with_capacity(n_levels);
        for j in 0..n_levels {
            let bj = a[j].powf(ratio);
            // f(b_j) = b_j^q must stay representable, as must s^{N*} on [a_j, b_j]
            if !bj.is_finite() || !bj.powf(critical).is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "staircase level {} overflows f64; use fewer levels",
                    j + 1
                )));
            }
            b.push(bj);
            if j + 1 < n_levels {
                a.push(bj.powf(q / p));
            }
        }
        Ok(Staircase {
            p,
            q,
            critical,
            a,
            b,
        })
    }

    pub fn levels(&self) -> usize {
        self.a.len()
    }

    /// Past `b_n` the last power rule is continued.
    pub fn extrapolates(&self, s: f64) -> bool {
        s > *self.b.last().unwrap()
    }

    fn piece(&self, s: f64) -> Piece {
        if s <= self.a[0] {
            return Piece::Lower;
        }
        // largest j with a_j <= s
        let j = self.a.partition_point(|&aj| aj <= s) - 1;
        if s <= self.b[j] || j + 1 == self.a.len() && self.extrapolates(s) {
            Piece::Rising(j)
        } else {
            Piece::Flat(j)
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        let s = s.max(0.0);
        match self.piece(s) {
            Piece::Lower => s.powf(self.p),
            Piece::Rising(j) => s.powf(self.critical) / self.a[j].powf(self.critical - self.p),
            Piece::Flat(j) => self.b[j].powf(self.q),
        }
    }

    /// Piecewise derivative; at breakpoints the left-hand value is used.
    pub fn deriv(&self, s: f64) -> f64 {
        let s = s.max(0.0);
        match self.piece(s) {
            Piece::Lower => self.p * s.powf(self.p - 1.0),
            Piece::Rising(j) => {
                self.critical * s.powf(self.critical - 1.0) / self.a[j].powf(self.critical - self.p)
            }
            Piece::Flat(_) => 0.0,
        }
    }
}

enum Piece {
    Lower,
    Rising(usize),
    Flat(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    /// `s^p`
    Power { exponent: f64 },
    /// `s^{N*} / ln(s + 2)`
    LogCritical,
    Staircase(Staircase),
    /// `e^s`
    Exponential,
    /// `c s`
    Linear { slope: f64 },
    /// constant `c`
    Constant { value: f64 },
    /// Piecewise-linear interpolation of `(s, f)` points; constant extension.
    Table { points: Vec<(f64, f64)> },
}

/// A nonlinearity together with the dimension `N` fixing `N*`.
#[derive(Debug, Clone, PartialEq)]
pub struct Nonlinearity {
    pub kind: Kind,
    pub dim: u32,
    pub label: String,
}

impl Nonlinearity {
    pub fn power(exponent: f64, dim: u32) -> Result<Self> {
        if !(exponent >= 1.0 && exponent.is_finite()) {
            return Err(Error::InvalidArgument(format!("power exponent must be >= 1, got {exponent}")));
        }
        Ok(Nonlinearity {
            kind: Kind::Power { exponent },
            dim,
            label: format!("s^{exponent}"),
        })
    }

    pub fn log_critical(dim: u32) -> Result<Self> {
        if dim < 3 {
            return Err(Error::InvalidArgument("log-critical nonlinearity needs N >= 3".into()));
        }
        Ok(Nonlinearity {
            kind: Kind::LogCritical,
            dim,
            label: "s^N*/ln(s+2)".into(),
        })
    }

    pub fn staircase(p: f64, q: f64, a1: f64, dim: u32, n_levels: usize) -> Result<Self> {
        Ok(Nonlinearity {
            kind: Kind::Staircase(Staircase::new(p, q, a1, dim, n_levels)?),
            dim,
            label: format!("staircase(p={p},q={q},a1={a1})"),
        })
    }

    pub fn exponential(dim: u32) -> Self {
        Nonlinearity {
            kind: Kind::Exponential,
            dim,
            label: "e^s".into(),
        }
    }

    pub fn linear(slope: f64, dim: u32) -> Self {
        Nonlinearity {
            kind: Kind::Linear { slope },
            dim,
            label: format!("{slope}*s"),
        }
    }

    pub fn constant(value: f64, dim: u32) -> Self {
        Nonlinearity {
            kind: Kind::Constant { value },
            dim,
            label: format!("{value}"),
        }
    }

    pub fn table(mut points: Vec<(f64, f64)>, dim: u32) -> Result<Self> {
        if points.len() < 2 || points.iter().any(|(s, f)| !s.is_finite() || !f.is_finite()) {
            return Err(Error::InvalidArgument("table needs at least two finite points".into()));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("table abscissae must be distinct".into()));
        }
        Ok(Nonlinearity {
            kind: Kind::Table { points },
            dim,
            label: "table".into(),
        })
    }

    pub fn critical_exponent(&self) -> Option<CriticalExponent> {
        CriticalExponent::for_dimension(self.dim)
    }

    /// `f(s)` for `s >= 0`. Negative arguments use the tangent line at zero,
    /// which keeps Newton and shooting iterates well defined.
    pub fn eval(&self, s: f64) -> f64 {
        if s < 0.0 {
            return self.eval_nonneg(0.0) + self.deriv_nonneg(0.0) * s;
        }
        self.eval_nonneg(s)
    }

    pub fn deriv(&self, s: f64) -> f64 {
        self.deriv_nonneg(s.max(0.0))
    }

    fn eval_nonneg(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::Power { exponent } => s.powf(*exponent),
            Kind::LogCritical => {
                let c = CriticalExponent::for_dimension(self.dim).map_or(f64::NAN, |c| c.value());
                s.powf(c) / (s + 2.0).ln()
            }
            Kind::Staircase(st) => st.eval(s),
            Kind::Exponential => s.exp(),
            Kind::Linear { slope } => slope * s,
            Kind::Constant { value } => *value,
            Kind::Table { points } => table_eval(points, s).0,
        }
    }

    fn deriv_nonneg(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::Power { exponent } => {
                if *exponent == 1.0 {
                    1.0
                } else {
                    exponent * s.powf(exponent - 1.0)
                }
            }
            Kind::LogCritical => {
                let c = CriticalExponent::for_dimension(self.dim).map_or(f64::NAN, |c| c.value());
                let l = (s + 2.0).ln();
                c * s.powf(c - 1.0) / l - s.powf(c) / ((s + 2.0) * l * l)
            }
            Kind::Staircase(st) => st.deriv(s),
            Kind::Exponential => s.exp(),
            Kind::Linear { slope } => *slope,
            Kind::Constant { .. } => 0.0,
            Kind::Table { points } => table_eval(points, s).1,
        }
    }
}

fn table_eval(points: &[(f64, f64)], s: f64) -> (f64, f64) {
    let first = points[0];
    let last = points[points.len() - 1];
    if s <= first.0 {
        return (first.1, 0.0);
    }
    if s >= last.0 {
        return (last.1, 0.0);
    }
    let i = points.partition_point(|p| p.0 <= s) - 1;
    let (s0, f0) = points[i];
    let (s1, f1) = points[i + 1];
    let slope = (f1 - f0) / (s1 - s0);
    (f0 + slope * (s - s0), slope)
}

/// JSON form of a nonlinearity: `{"kind": ..., params...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearitySpec {
    LogCritical {
        dim: u32,
    },
    Staircase {
        dim: u32,
        p: f64,
        q: f64,
        a1: f64,
        levels: usize,
    },
    Power {
        dim: u32,
        exponent: f64,
    },
    CustomTable {
        dim: u32,
        points: Vec<(f64, f64)>,
    },
    Exponential {
        dim: u32,
    },
    Linear {
        dim: u32,
        slope: f64,
    },
    Constant {
        dim: u32,
        value: f64,
    },
}

impl NonlinearitySpec {
    pub fn build(&self) -> Result<Nonlinearity> {
        match self {
            NonlinearitySpec::LogCritical { dim } => Nonlinearity::log_critical(*dim),
            NonlinearitySpec::Staircase {
                dim,
                p,
                q,
                a1,
                levels,
            } => Nonlinearity::staircase(*p, *q, *a1, *dim, *levels),
            NonlinearitySpec::Power { dim, exponent } => Nonlinearity::power(*exponent, *dim),
            NonlinearitySpec::CustomTable { dim, points } => Nonlinearity::table(points.clone(), *dim),
            NonlinearitySpec::Exponential { dim } => Ok(Nonlinearity::exponential(*dim)),
            NonlinearitySpec::Linear { dim, slope } => {
                if !slope.is_finite() {
                    return Err(Error::InvalidArgument("slope must be finite".into()));
                }
                Ok(Nonlinearity::linear(*slope, *dim))
            }
            NonlinearitySpec::Constant { dim, value } => {
                if !value.is_finite() {
                    return Err(Error::InvalidArgument("constant must be finite".into()));
                }
                Ok(Nonlinearity::constant(*value, *dim))
            }
        }
    }

    pub fn dim(&self) -> u32 {
        match self {
            NonlinearitySpec::LogCritical { dim }
            | NonlinearitySpec::Staircase { dim, .. }
            | NonlinearitySpec::Power { dim, .. }
            | NonlinearitySpec::CustomTable { dim, .. }
            | NonlinearitySpec::Exponential { dim }
            | NonlinearitySpec::Linear { dim, .. }
            | NonlinearitySpec::Constant { dim, .. } => *dim,
        }
    }
}

/// Verdict of one hypothesis; every verdict is a finite-sample surrogate of a
/// statement about limits or all of `(0, inf)`.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisVerdict {
    pub pass: bool,
    pub surrogate: &'static str,
    /// Sample value that decided the verdict (first violation or extreme value).
    pub witness: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub label: String,
    pub dim: u32,
    pub critical_exponent: f64,
    pub lambda1: f64,
    pub s_max: f64,
    pub n_samples: usize,
    pub h1: HypothesisVerdict,
    pub h2: HypothesisVerdict,
    pub h3: HypothesisVerdict,
    pub note: &'static str,
}

/// Threshold on `f(s_max) / s_max^{N*}` for the vanishing-limit surrogate.
pub const H2_THRESHOLD: f64 = 0.1;

/// Geometric sample grid on `[lo, hi]`.
pub fn geometric_samples(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Finite-sample checks of the three growth hypotheses.
///
/// * H1: `f(s)/s^{N*}` nonincreasing on a geometric grid over `[1e-3, s_max]`.
/// * H2: `f(s_max)/s_max^{N*}` below [`H2_THRESHOLD`] and still decreasing over
///   the top two decades.
/// * H3: `min f(s)/s` over the top decade exceeds `lambda1`.
pub fn check_hypotheses(f: &Nonlinearity, lambda1: f64, s_max: f64, n_samples: usize) -> Result<HypothesisReport> {
    if !(lambda1 > 0.0) {
        return Err(Error::InvalidArgument("lambda1 must be positive".into()));
    }
    if !(s_max > 1.0 && s_max.is_finite()) {
        return Err(Error::InvalidArgument("s_max must exceed 1".into()));
    }
    if n_samples < 10 {
        return Err(Error::InvalidArgument("need at least 10 samples".into()));
    }
    let crit = f
        .critical_exponent()
        .ok_or_else(|| Error::InvalidArgument("hypotheses need N >= 3".into()))?
        .value();
    let s = geometric_samples(1e-3, s_max, n_samples);
    let vals: Vec<f64> = s.iter().map(|&x| f.eval(x)).collect();
    if let Some(i) = vals.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("f({}) = {}", s[i], vals[i])));
    }
    let ratio: Vec<f64> = s.iter().zip(&vals).map(|(x, v)| v / x.powf(crit)).collect();
    if let Some(i) = ratio.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("f(s)/s^N* at s = {}", s[i])));
    }

    let rel = 1e-12;
    let h1 = match ratio
        .windows(2)
        .position(|w| w[1] > w[0] * (1.0 + rel) + f64::MIN_POSITIVE)
    {
        Some(i) => HypothesisVerdict {
            pass: false,
            surrogate: "f(s)/s^N* nonincreasing on a geometric grid over [1e-3, s_max]",
            witness: s[i + 1],
            detail: format!("ratio increases from {:e} to {:e} at s = {:e}", ratio[i], ratio[i + 1], s[i + 1]),
        },
        None => HypothesisVerdict {
            pass: true,
            surrogate: "f(s)/s^N* nonincreasing on a geometric grid over [1e-3, s_max]",
            witness: s_max,
            detail: "no increase detected".into(),
        },
    };

    let tail = *ratio.last().unwrap();
    let earlier = {
        let target = s_max / 100.0;
        let i = s.partition_point(|&x| x < target).min(s.len() - 1);
        ratio[i]
    };
    let h2_pass = tail < H2_THRESHOLD && tail < earlier;
    let h2 = HypothesisVerdict {
        pass: h2_pass,
        surrogate: "f(s_max)/s_max^N* below threshold and decreasing over the top two decades",
        witness: tail,
        detail: format!("ratio at s_max = {tail:e}, two decades earlier = {earlier:e}, threshold {H2_THRESHOLD}"),
    };

    let top: Vec<f64> = s
        .iter()
        .zip(&vals)
        .filter(|(x, _)| **x >= s_max / 10.0)
        .map(|(x, v)| v / x)
        .collect();
    let min_growth = top.iter().copied().fold(f64::INFINITY, f64::min);
    let h3 = HypothesisVerdict {
        pass: min_growth > lambda1,
        surrogate: "min f(s)/s over the top decade of samples exceeds lambda1",
        witness: min_growth,
        detail: format!("min f(s)/s on [s_max/10, s_max] = {min_growth:e}, lambda1 = {lambda1}"),
    };

    Ok(HypothesisReport {
        label: f.label.clone(),
        dim: f.dim,
        critical_exponent: crit,
        lambda1,
        s_max,
        n_samples,
        h1,
        h2,
        h3,
        note: "verdicts are finite-sample surrogates of limit statements",
    })
}
