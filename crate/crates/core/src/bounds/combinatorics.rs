//! The counting inequalities of the induction, checked in exact rational
//! arithmetic where the quantities are rational.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::MultiIndex;
use crate::special::ln_gamma;

/// Rational lower bound for `e` and upper bound for `π`.
const E_LOWER: (i64, i64) = (271_828_182_845, 100_000_000_000);
const PI_UPPER: (i64, i64) = (355, 113);

/// `𝔯` values for the steps involving `1/𝔯`.
const EXPONENTS: [f64; 4] = [1.0, 1.2, 1.5, 2.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub cases: usize,
    pub violations: usize,
    /// Largest `lhs/rhs` seen.
    pub tightest: f64,
}

impl InequalityCheck {
    fn new(name: &str) -> Self {
        Self { name: name.to_string(), cases: 0, violations: 0, tightest: 0.0 }
    }

    fn record(&mut self, lhs: &BigRational, rhs: &BigRational) {
        self.cases += 1;
        if lhs > rhs {
            self.violations += 1;
        }
        if !rhs.is_zero() {
            let ratio = (lhs / rhs).to_f64().unwrap_or(f64::INFINITY);
            self.tightest = self.tightest.max(ratio);
        }
    }

    /// Comparison of logarithms, for the steps with real exponents.
    fn record_ln(&mut self, ln_lhs: f64, ln_rhs: f64) {
        self.cases += 1;
        if ln_lhs > ln_rhs {
            self.violations += 1;
        }
        self.tightest = self.tightest.max((ln_lhs - ln_rhs).exp());
    }

    pub fn pass(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinatorialReport {
    pub j_max: usize,
    pub beta_max: usize,
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub checks: Vec<InequalityCheck>,
    pub pass: bool,
}

fn int(v: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn ratio(p: (i64, i64)) -> BigRational {
    BigRational::new(BigInt::from(p.0), BigInt::from(p.1))
}

fn fact(k: u64) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

fn pow(x: &BigRational, k: u64) -> BigRational {
    (0..k).fold(BigRational::one(), |acc, _| acc * x)
}

fn exact(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::InvalidArgument(format!("{x} is not finite")))
}

/// `β!((2n+2)/(j+1/4))^{|β|} ≤ (8n+8)^{|β|}|β|!/(j+1)^{|β|} = (8n+8)^{|β|}(j+1)!/(j+1)^{j+1} ≤ (8n+8)^{|β|}`
/// for all `|β| = j+1`.
fn beta_factorial(j_max: usize, n: usize) -> InequalityCheck {
    let mut chk = InequalityCheck::new("beta-factorial");
    let base = 8 * n as u64 + 8;
    for j in 0..=j_max as u64 {
        let order = j + 1;
        let top = pow(&int(base), order);
        let mid = top.clone() * BigRational::from_integer(fact(order)) / pow(&int(order), order);
        let scale = pow(&BigRational::new(BigInt::from(base), BigInt::from(4 * j + 1)), order);
        for beta in MultiIndex::all_of_order(n, order as usize) {
            let bf: BigInt = beta.entries().iter().fold(BigInt::one(), |acc, &b| acc * fact(b as u64));
            let lhs = BigRational::from_integer(bf) * &scale;
            chk.record(&lhs, &mid);
        }
        chk.record(&mid, &top);
    }
    chk
}

/// `Σ_m C(J,m) m!(J−m)^{J−m}/J^J (A/B)^m ≤ Σ_m (A/B)^m ≤ 2` for `J ≤ j_max`.
fn leibniz_sum(j_max: usize, a: f64, b: f64) -> Result<InequalityCheck> {
    let mut chk = InequalityCheck::new("leibniz-geometric-sum");
    let q = exact(a)? / exact(b)?;
    let two = int(2);
    for big_j in 0..=j_max as u64 {
        let denom = if big_j == 0 { BigRational::one() } else { pow(&int(big_j), big_j) };
        let mut sum = BigRational::zero();
        let mut geometric = BigRational::zero();
        for m in 0..=big_j {
            let rest = big_j - m;
            let rest_pow = if rest == 0 { BigRational::one() } else { pow(&int(rest), rest) };
            // C(J,m)·m! = J!/(J−m)!
            let falling = BigRational::from_integer(fact(big_j) / fact(rest));
            let coeff = falling * rest_pow / &denom;
            chk.record(&coeff, &BigRational::one());
            let qm = pow(&q, m);
            sum += coeff * &qm;
            geometric += qm;
        }
        chk.record(&sum, &geometric);
        chk.record(&geometric, &two);
    }
    Ok(chk)
}

/// `(β−1−1/𝔯)^{β−1−1/𝔯} ≤ (β−1)^{β−1/2} ≤ (β−1)! e^β/√(2π) ≤ β! e^β`.
fn stirling(beta_max: usize) -> (InequalityCheck, InequalityCheck) {
    let mut first = InequalityCheck::new("power-to-half-power");
    let mut second = InequalityCheck::new("half-power-to-factorial");
    let e_lo = ratio(E_LOWER);
    let pi_hi = ratio(PI_UPPER);
    let xlnx = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() };
    for beta in 2..=beta_max as u64 {
        let bf = beta as f64;
        for r in EXPONENTS {
            first.record_ln(xlnx(bf - 1.0 - 1.0 / r), (bf - 0.5) * (bf - 1.0).ln());
        }
        // squared: 2π (β−1)^{2β−1} ≤ ((β−1)!)² e^{2β}
        let lhs = pi_hi.clone() * int(2) * pow(&int(beta - 1), 2 * beta - 1);
        let fm = BigRational::from_integer(fact(beta - 1));
        let rhs = fm.clone() * fm * pow(&e_lo, 2 * beta);
        second.record(&lhs, &rhs);
        // (β−1)!/√(2π) ≤ β!, i.e. 1 ≤ 2πβ²
        second.record(&int(1), &(int(2) * int(3) * int(beta) * int(beta)));
    }
    (first, second)
}

/// `∫_0^∞ t^{β−1/𝔯} e^{-t} dt/t = Γ(β−1/𝔯) ≤ Γ(β−1)+Γ(β) ≤ 2(β−1)! ≤ β!`.
fn last_integral(beta_max: usize) -> InequalityCheck {
    let mut chk = InequalityCheck::new("gamma-split");
    for beta in 2..=beta_max as u64 {
        let bf = beta as f64;
        let ln_split = ln_gamma(bf - 1.0) + bf.ln();
        for r in EXPONENTS {
            chk.record_ln(ln_gamma(bf - 1.0 / r), ln_split);
        }
        let split = BigRational::from_integer(fact(beta - 2) + fact(beta - 1));
        let twice = BigRational::from_integer(fact(beta - 1) * 2);
        chk.record(&split, &twice);
        chk.record(&twice, &BigRational::from_integer(fact(beta)));
    }
    chk
}

/// All inequalities for `j ≤ j_max`, `|β| ≤ beta_max`; requires `B > 2A`.
pub fn combinatorial_checks(j_max: usize, beta_max: usize, n: usize, a: f64, b: f64) -> Result<CombinatorialReport> {
    if !(b > 2.0 * a && a > 0.0) {
        return Err(Error::InvalidArgument(format!("need B > 2A > 0, got A = {a}, B = {b}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let (first, second) = stirling(beta_max);
    let checks = vec![beta_factorial(j_max, n), leibniz_sum(j_max, a, b)?, first, second, last_integral(beta_max)];
    let pass = checks.iter().all(InequalityCheck::pass);
    Ok(CombinatorialReport { j_max, beta_max, n, a, b, checks, pass })
}
