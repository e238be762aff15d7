//! Brute-force unit evaluator with its own symbol table.

use std::time::{Duration, Instant};

use coplan::units::{conversion, parse_unit, UnitError};
use rand::seq::IndexedRandom;
use rand::Rng;

use super::{rng, Check};

pub struct Base {
    pub symbol: &'static str,
    pub dim: [i32; 8],
    pub scale: f64,
    pub prefixable: bool,
    /// Interchangeable symbols share a group.
    pub group: &'static str,
}

const fn b(
    symbol: &'static str,
    dim: [i32; 8],
    scale: f64,
    prefixable: bool,
    group: &'static str,
) -> Base {
    Base {
        symbol,
        dim,
        scale,
        prefixable,
        group,
    }
}

const POWER: [i32; 8] = [2, 1, -3, 0, 0, 0, 0, 0];
const ENERGY: [i32; 8] = [2, 1, -2, 0, 0, 0, 0, 0];
const TIME: [i32; 8] = [0, 0, 1, 0, 0, 0, 0, 0];
const MASS: [i32; 8] = [0, 1, 0, 0, 0, 0, 0, 0];
const NONE: [i32; 8] = [0; 8];

pub const BASES: &[Base] = &[
    b("m", [1, 0, 0, 0, 0, 0, 0, 0], 1.0, true, "length"),
    b("g", MASS, 0.001, true, "mass"),
    b("t", MASS, 1000.0, true, "mass"),
    b("s", TIME, 1.0, true, "time"),
    b("min", TIME, 60.0, false, "time"),
    b("h", TIME, 3600.0, false, "time"),
    b("A", [0, 0, 0, 1, 0, 0, 0, 0], 1.0, true, "current"),
    b("K", [0, 0, 0, 0, 1, 0, 0, 0], 1.0, true, "temperature"),
    b("mol", [0, 0, 0, 0, 0, 1, 0, 0], 1.0, true, "amount"),
    b("cd", [0, 0, 0, 0, 0, 0, 1, 0], 1.0, true, "luminous"),
    b("EUR", [0, 0, 0, 0, 0, 0, 0, 1], 1.0, true, "currency"),
    b("W", POWER, 1.0, true, "power"),
    b("var", POWER, 1.0, true, "power"),
    b("VA", POWER, 1.0, true, "power"),
    b("J", ENERGY, 1.0, true, "energy"),
    b("Wh", ENERGY, 3600.0, true, "energy"),
    b("V", [2, 1, -3, -1, 0, 0, 0, 0], 1.0, true, "voltage"),
    b("Hz", [0, 0, -1, 0, 0, 0, 0, 0], 1.0, true, "frequency"),
    b("N", [1, 1, -2, 0, 0, 0, 0, 0], 1.0, true, "force"),
    b("Pa", [-1, 1, -2, 0, 0, 0, 0, 0], 1.0, true, "pressure"),
    b("percent", NONE, 0.01, false, "ratio"),
    b("one", NONE, 1.0, false, "ratio"),
];

/// Prefix symbol and its decimal exponent.
pub const PREFIXES: &[(&str, i32)] = &[
    ("Y", 24),
    ("Z", 21),
    ("E", 18),
    ("P", 15),
    ("T", 12),
    ("G", 9),
    ("M", 6),
    ("k", 3),
    ("h", 2),
    ("da", 1),
    ("d", -1),
    ("c", -2),
    ("m", -3),
    ("u", -6),
    ("n", -9),
    ("p", -12),
    ("f", -15),
    ("a", -18),
    ("z", -21),
    ("y", -24),
];

#[derive(Debug, Clone)]
pub struct Term {
    pub prefix: Option<(&'static str, i32)>,
    pub base: &'static Base,
    pub exponent: i32,
    pub divide: bool,
    pub explicit_one: bool,
}

#[derive(Debug, Clone)]
pub struct Expr(pub Vec<Term>);

impl std::fmt::Debug for Base {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.symbol)
    }
}

impl Expr {
    pub fn text(&self) -> String {
        let mut s = String::new();
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                s.push(if t.divide { '/' } else { '*' });
            }
            if let Some((p, _)) = t.prefix {
                s.push_str(p);
            }
            s.push_str(t.base.symbol);
            if t.exponent != 1 || t.explicit_one {
                s.push_str(&format!("^{}", t.exponent));
            }
        }
        s
    }

    /// Dimension exponents and SI scale, evaluated term by term.
    pub fn evaluate(&self) -> ([i32; 8], f64) {
        let mut dim = [0i32; 8];
        let mut decimal = 0i32;
        let mut scale = 1.0f64;
        for t in &self.0 {
            let e = if t.divide { -t.exponent } else { t.exponent };
            for (d, x) in dim.iter_mut().zip(t.base.dim) {
                *d += e * x;
            }
            if let Some((_, p)) = t.prefix {
                decimal += p * e;
            }
            for _ in 0..e.abs() {
                if e > 0 {
                    scale *= t.base.scale;
                } else {
                    scale /= t.base.scale;
                }
            }
        }
        let ten: f64 = format!("1e{decimal}").parse().expect("power of ten");
        (dim, scale * ten)
    }
}

pub fn random_term(
    r: &mut impl Rng,
    divide: bool,
    exponents: std::ops::RangeInclusive<i32>,
) -> Term {
    let base = BASES.choose(r).expect("non-empty");
    let prefix = if base.prefixable && r.random_bool(0.6) {
        Some(*PREFIXES.choose(r).expect("non-empty"))
    } else {
        None
    };
    Term {
        prefix,
        base,
        exponent: r.random_range(exponents),
        divide,
        explicit_one: r.random_bool(0.2),
    }
}

pub fn random_expr(r: &mut impl Rng) -> Expr {
    let n = r.random_range(1..=4);
    Expr(
        (0..n)
            .map(|i| {
                let divide = i > 0 && r.random_bool(0.4);
                random_term(r, divide, -3..=3)
            })
            .collect(),
    )
}

/// Same dimension: every term swapped for a base of its group, prefixes redrawn.
pub fn sibling(r: &mut impl Rng, expr: &Expr) -> Expr {
    Expr(
        expr.0
            .iter()
            .map(|t| {
                let options: Vec<&'static Base> =
                    BASES.iter().filter(|b| b.group == t.base.group).collect();
                let base = *options.choose(r).expect("own group");
                let prefix = if base.prefixable && r.random_bool(0.6) {
                    Some(*PREFIXES.choose(r).expect("non-empty"))
                } else {
                    None
                };
                Term {
                    prefix,
                    base,
                    ..t.clone()
                }
            })
            .collect(),
    )
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub struct OracleStats {
    pub parsed: usize,
    pub rejected: usize,
    pub worst_scale_error: f64,
    pub elapsed: Duration,
}

/// Compares the parser with [`Expr::evaluate`] on `count` random expressions.
/// Expressions whose dimension leaves the representable exponent range must be rejected.
pub fn unit_oracle(seed: u64, count: usize) -> Result<OracleStats, String> {
    let start = Instant::now();
    let mut r = rng(seed);
    let mut stats = OracleStats {
        parsed: 0,
        rejected: 0,
        worst_scale_error: 0.0,
        elapsed: Duration::ZERO,
    };
    for _ in 0..count {
        let expr = random_expr(&mut r);
        let text = expr.text();
        let (dim, scale) = expr.evaluate();
        let representable = dim.iter().all(|d| d.abs() <= coplan::units::MAX_EXPONENT);
        match parse_unit(&text) {
            Ok(spec) => {
                if !representable {
                    return Err(format!(
                        "{text}: accepted although dimension {dim:?} is out of range"
                    ));
                }
                let got: Vec<i32> = spec.dimension.0.iter().map(|&d| i32::from(d)).collect();
                if got != dim {
                    return Err(format!("{text}: dimension {got:?}, oracle {dim:?}"));
                }
                let err = relative_error(spec.scale, scale);
                if err > 1e-12 {
                    return Err(format!(
                        "{text}: scale {}, oracle {scale}, relative error {err:e}",
                        spec.scale
                    ));
                }
                stats.worst_scale_error = stats.worst_scale_error.max(err);
                stats.parsed += 1;
            }
            Err(UnitError::DimensionOutOfRange(_)) if !representable => stats.rejected += 1,
            Err(e) => return Err(format!("{text}: unexpected error {e}")),
        }
    }
    stats.elapsed = start.elapsed();
    Ok(stats)
}

pub fn criterion_1() -> Check {
    let stats = unit_oracle(1, 1000)?;
    if stats.elapsed >= Duration::from_secs(5) {
        return Err(format!("took {:?}", stats.elapsed));
    }
    Ok(format!(
        "{} parsed, {} rejected as out of range, worst scale error {:.1e}, {:?}",
        stats.parsed, stats.rejected, stats.worst_scale_error, stats.elapsed
    ))
}

/// A random pair of parseable units with equal dimension. One pair in ten is
/// a temperature pair so offsets are exercised.
pub fn random_pair(r: &mut impl Rng) -> (String, String) {
    loop {
        if r.random_bool(0.1) {
            let temps = ["K", "Cel", "mK", "kK"];
            return (
                temps.choose(r).unwrap().to_string(),
                temps.choose(r).unwrap().to_string(),
            );
        }
        let n = r.random_range(1..=3);
        let a = Expr(
            (0..n)
                .map(|i| {
                    let divide = i > 0 && r.random_bool(0.4);
                    random_term(r, divide, -2..=2)
                })
                .collect(),
        );
        let b = sibling(r, &a);
        let (ta, tb) = (a.text(), b.text());
        if parse_unit(&ta).is_ok() && parse_unit(&tb).is_ok() {
            return (ta, tb);
        }
    }
}

pub fn round_trips(seed: u64, pairs: usize, values: usize) -> Result<(f64, Duration), String> {
    let start = Instant::now();
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let (a, b) = random_pair(&mut r);
        let (ua, ub) = (parse_unit(&a).unwrap(), parse_unit(&b).unwrap());
        let c = conversion(&ua, &ub).map_err(|e| format!("{a} -> {b}: {e}"))?;
        let back = c.inverse();
        // Near an offset the intermediate value cancels digits of x, so affine
        // pairs start at magnitude 1.
        let low = if c.offset == 0.0 { -3.0 } else { 0.0 };
        for _ in 0..values {
            let magnitude = 10f64.powf(r.random_range(low..6.0));
            let x = if r.random_bool(0.5) {
                magnitude
            } else {
                -magnitude
            };
            let y = back.apply(c.apply(x));
            let err = relative_error(x, y);
            if err > 1e-9 {
                return Err(format!("{a} -> {b}: {x} came back as {y}"));
            }
            worst = worst.max(err);
        }
    }
    Ok((worst, start.elapsed()))
}

pub fn criterion_2() -> Check {
    let (worst, elapsed) = round_trips(2, 200, 1000)?;
    if elapsed >= Duration::from_secs(5) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!(
        "200 pairs x 1000 values, worst relative error {worst:.1e}, {elapsed:?}"
    ))
}
