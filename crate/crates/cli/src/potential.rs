//! Shorthand for potentials: terms joined by `+`, each `kind:arg:arg…`.
//!
//! | term                  | meaning                                  |
//! |-----------------------|------------------------------------------|
//! | `const:c`             | `c`                                      |
//! | `gaussian:a[:w[:c]]`  | `a·exp(−|x−c e₁|²/w²)`, `w = 1`, `c = 0` |
//! | `rational:a[:c]`      | `a/(1+|x−c e₁|²)`                        |
//! | `cos:a:k[:phase]`     | `a·cos(k x₁ + phase)`                    |
//! | `pole:a:at`           | `a/(at − x₁)`                            |
//!
//! `Ω` is the ball of radius 1 around the origin, or `B_{at/2}` when a pole
//! is present.

use fracsmooth::potential::{AnalyticTerm, PotentialSpec, Region};

fn axis_point(c: f64) -> [f64; 3] {
    [c, 0.0, 0.0]
}

fn numbers(kind: &str, args: &[&str], min: usize, max: usize) -> Result<Vec<f64>, String> {
    if args.len() < min || args.len() > max {
        return Err(format!("`{kind}` takes {min} to {max} arguments, got {}", args.len()));
    }
    args.iter().map(|a| a.trim().parse::<f64>().map_err(|_| format!("`{a}` is not a number in `{kind}`"))).collect()
}

pub fn parse(dim: usize, text: &str) -> Result<PotentialSpec, String> {
    let mut terms = Vec::new();
    let mut radius: f64 = 1.0;
    for raw in text.split('+') {
        let mut parts = raw.trim().split(':');
        let kind = parts.next().unwrap_or("").trim().to_ascii_lowercase();
        let args: Vec<&str> = parts.collect();
        let term = match kind.as_str() {
            "const" => {
                let v = numbers(&kind, &args, 1, 1)?;
                AnalyticTerm::Constant { value: v[0] }
            }
            "gaussian" => {
                let v = numbers(&kind, &args, 1, 3)?;
                let width = v.get(1).copied().unwrap_or(1.0);
                if !(width > 0.0) {
                    return Err("gaussian width must be positive".into());
                }
                AnalyticTerm::Gaussian { amp: v[0], center: axis_point(v.get(2).copied().unwrap_or(0.0)), width }
            }
            "rational" => {
                let v = numbers(&kind, &args, 1, 2)?;
                AnalyticTerm::Rational { amp: v[0], center: axis_point(v.get(1).copied().unwrap_or(0.0)) }
            }
            "cos" => {
                let v = numbers(&kind, &args, 2, 3)?;
                AnalyticTerm::Trig { amp: v[0], wave: axis_point(v[1]), phase: v.get(2).copied().unwrap_or(0.0) }
            }
            "pole" => {
                let v = numbers(&kind, &args, 2, 2)?;
                if v[1] == 0.0 {
                    return Err("pole must sit away from the origin".into());
                }
                radius = radius.min(v[1].abs() / 2.0);
                AnalyticTerm::Pole { amp: v[0], at: v[1], axis: 0 }
            }
            "" => return Err("empty potential term".into()),
            other => return Err(format!("unknown potential term `{other}`")),
        };
        terms.push(term);
    }
    Ok(PotentialSpec::analytic(dim, terms, Region::Ball { center: [0.0; 3], radius }))
}
