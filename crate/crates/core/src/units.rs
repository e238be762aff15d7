//! Unit expressions, dimension vectors and affine conversions.
//!
//! Grammar: `expr := term (('*'|'/') term)*`, `term := [prefix] base ['^' int]`.
//! Evaluation is left to right and `/` applies to its immediate right term
//! only, so `a/b*c` is `(a/b)*c`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::LazyLock;

use thiserror::Error;

/// Exponents over length, mass, time, current, temperature, amount,
/// luminous intensity and currency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct DimensionVector(pub [i8; 8]);

pub const MAX_EXPONENT: i32 = 8;

impl DimensionVector {
    pub const DIMENSIONLESS: DimensionVector = DimensionVector([0; 8]);
    pub const NAMES: [&'static str; 8] = ["L", "M", "T", "I", "Θ", "N", "J", "C"];

    pub fn is_dimensionless(&self) -> bool {
        self.0 == [0; 8]
    }

    pub fn is_pure_temperature(&self) -> bool {
        self.0 == [0, 0, 0, 0, 1, 0, 0, 0]
    }

    pub fn exponents(&self) -> [i8; 8] {
        self.0
    }

    fn parse(text: &str) -> Option<Self> {
        let parts: Vec<&str> = text
            .trim_matches(|c| c == '(' || c == ')')
            .split(',')
            .collect();
        if parts.len() != 8 {
            return None;
        }
        let mut out = [0i8; 8];
        for (slot, part) in out.iter_mut().zip(parts) {
            let v: i8 = part.trim().parse().ok()?;
            if i32::from(v).abs() > MAX_EXPONENT {
                return None;
            }
            *slot = v;
        }
        Some(DimensionVector(out))
    }
}

impl fmt::Display for DimensionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnitError {
    #[error("empty unit expression")]
    Empty,
    #[error("unknown unit symbol {0:?}")]
    UnknownSymbol(String),
    #[error("malformed exponent in {0:?}")]
    MalformedExponent(String),
    #[error("malformed unit expression {0:?}")]
    Malformed(String),
    #[error(
        "offset unit {0:?} cannot be prefixed, raised to a power or combined with other terms"
    )]
    OffsetCombination(String),
    #[error("dimension exponent out of range [-8, 8] in {0:?}")]
    DimensionOutOfRange(String),
    #[error("dimension mismatch: {from} {from_dim} vs {to} {to_dim}")]
    DimensionMismatch {
        from: String,
        from_dim: DimensionVector,
        to: String,
        to_dim: DimensionVector,
    },
    #[error("unit table line {line}: {message}")]
    Table { line: usize, message: String },
}

/// A parsed unit: SI value = `scale * x + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitSpec {
    pub symbol: String,
    pub dimension: DimensionVector,
    pub scale: f64,
    pub offset: f64,
}

impl UnitSpec {
    /// Same symbol, scale and offset (scale within 1e-12 relative).
    pub fn is_identical(&self, other: &UnitSpec) -> bool {
        self.symbol == other.symbol
            && self.dimension == other.dimension
            && approx_eq(self.scale, other.scale, 1e-12)
            && approx_eq(self.offset, other.offset, 1e-12)
    }
}

impl fmt::Display for UnitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.symbol)
    }
}

pub fn same_dimension(a: &UnitSpec, b: &UnitSpec) -> bool {
    a.dimension == b.dimension
}

/// `y = factor * x + offset`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConversionFn {
    pub factor: f64,
    pub offset: f64,
}

impl ConversionFn {
    pub const IDENTITY: ConversionFn = ConversionFn {
        factor: 1.0,
        offset: 0.0,
    };

    pub fn new(factor: f64, offset: f64) -> Self {
        ConversionFn { factor, offset }
    }

    pub fn apply(&self, x: f64) -> f64 {
        self.factor * x + self.offset
    }

    pub fn inverse(&self) -> ConversionFn {
        ConversionFn {
            factor: 1.0 / self.factor,
            offset: -self.offset / self.factor,
        }
    }

    /// `next ∘ self`
    pub fn then(&self, next: &ConversionFn) -> ConversionFn {
        ConversionFn {
            factor: self.factor * next.factor,
            offset: next.factor * self.offset + next.offset,
        }
    }

    /// Factor within `rel` relative tolerance; offset within `rel` of max(1, |offset|).
    pub fn approx_eq(&self, other: &ConversionFn, rel: f64) -> bool {
        approx_eq(self.factor, other.factor, rel)
            && (self.offset - other.offset).abs()
                <= rel * self.offset.abs().max(other.offset.abs()).max(1.0)
    }
}

impl fmt::Display for ConversionFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.offset == 0.0 {
            write!(f, "{}", self.factor)
        } else {
            write!(f, "{},{}", self.factor, self.offset)
        }
    }
}

pub fn approx_eq(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs())
}

/// Conversion taking values in `from` to values in `to`.
pub fn conversion(from: &UnitSpec, to: &UnitSpec) -> Result<ConversionFn, UnitError> {
    if !same_dimension(from, to) {
        return Err(UnitError::DimensionMismatch {
            from: from.symbol.clone(),
            from_dim: from.dimension,
            to: to.symbol.clone(),
            to_dim: to.dimension,
        });
    }
    Ok(ConversionFn {
        factor: from.scale / to.scale,
        offset: (from.offset - to.offset) / to.scale,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaseUnit {
    pub dimension: DimensionVector,
    pub scale: f64,
    pub offset: f64,
    pub prefixable: bool,
}

pub const PREFIXES: [(&str, f64); 20] = [
    ("Y", 1e24),
    ("Z", 1e21),
    ("E", 1e18),
    ("P", 1e15),
    ("T", 1e12),
    ("G", 1e9),
    ("M", 1e6),
    ("k", 1e3),
    ("h", 1e2),
    ("da", 1e1),
    ("d", 1e-1),
    ("c", 1e-2),
    ("m", 1e-3),
    ("u", 1e-6),
    ("n", 1e-9),
    ("p", 1e-12),
    ("f", 1e-15),
    ("a", 1e-18),
    ("z", 1e-21),
    ("y", 1e-24),
];

const fn dim(v: [i8; 8]) -> DimensionVector {
    DimensionVector(v)
}

const POWER: DimensionVector = dim([2, 1, -3, 0, 0, 0, 0, 0]);
const ENERGY: DimensionVector = dim([2, 1, -2, 0, 0, 0, 0, 0]);

static BUILTIN: LazyLock<UnitTable> = LazyLock::new(|| {
    let mut table = UnitTable {
        units: BTreeMap::new(),
    };
    let mut add = |symbol: &str, dimension: DimensionVector, scale: f64, prefixable: bool| {
        table.units.insert(
            symbol.to_string(),
            BaseUnit {
                dimension,
                scale,
                offset: 0.0,
                prefixable,
            },
        );
    };
    add("m", dim([1, 0, 0, 0, 0, 0, 0, 0]), 1.0, true);
    add("g", dim([0, 1, 0, 0, 0, 0, 0, 0]), 1e-3, true);
    add("s", dim([0, 0, 1, 0, 0, 0, 0, 0]), 1.0, true);
    add("A", dim([0, 0, 0, 1, 0, 0, 0, 0]), 1.0, true);
    add("K", dim([0, 0, 0, 0, 1, 0, 0, 0]), 1.0, true);
    add("mol", dim([0, 0, 0, 0, 0, 1, 0, 0]), 1.0, true);
    add("cd", dim([0, 0, 0, 0, 0, 0, 1, 0]), 1.0, true);
    add("EUR", dim([0, 0, 0, 0, 0, 0, 0, 1]), 1.0, true);
    add("W", POWER, 1.0, true);
    add("var", POWER, 1.0, true);
    add("VA", POWER, 1.0, true);
    add("J", ENERGY, 1.0, true);
    add("Wh", ENERGY, 3600.0, true);
    add("V", dim([2, 1, -3, -1, 0, 0, 0, 0]), 1.0, true);
    add("Hz", dim([0, 0, -1, 0, 0, 0, 0, 0]), 1.0, true);
    add("N", dim([1, 1, -2, 0, 0, 0, 0, 0]), 1.0, true);
    add("Pa", dim([-1, 1, -2, 0, 0, 0, 0, 0]), 1.0, true);
    add("t", dim([0, 1, 0, 0, 0, 0, 0, 0]), 1000.0, true);
    add("min", dim([0, 0, 1, 0, 0, 0, 0, 0]), 60.0, false);
    add("h", dim([0, 0, 1, 0, 0, 0, 0, 0]), 3600.0, false);
    add("percent", DimensionVector::DIMENSIONLESS, 0.01, false);
    add("one", DimensionVector::DIMENSIONLESS, 1.0, false);
    table.units.insert(
        "Cel".to_string(),
        BaseUnit {
            dimension: dim([0, 0, 0, 0, 1, 0, 0, 0]),
            scale: 1.0,
            offset: 273.15,
            prefixable: false,
        },
    );
    table
});

/// Base symbols known to the parser.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitTable {
    units: BTreeMap<String, BaseUnit>,
}

impl Default for UnitTable {
    fn default() -> Self {
        BUILTIN.clone()
    }
}

impl UnitTable {
    pub fn builtin() -> &'static UnitTable {
        &BUILTIN
    }

    pub fn get(&self, symbol: &str) -> Option<&BaseUnit> {
        self.units.get(symbol)
    }

    pub fn symbols(&self) -> impl Iterator<Item = (&str, &BaseUnit)> {
        self.units.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Adds units from lines of `symbol scale dimension-vector [offset]`,
    /// e.g. `bar 100000 -1,1,-2,0,0,0,0,0`. `#` starts a comment line.
    pub fn with_supplement(&self, text: &str) -> Result<UnitTable, UnitError> {
        let mut table = self.clone();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: &str| UnitError::Table {
                line: idx + 1,
                message: message.to_string(),
            };
            let parts: Vec<&str> = line.split_whitespace().collect();
            if !(3..=4).contains(&parts.len()) {
                return Err(err("expected `symbol scale dimension-vector [offset]`"));
            }
            let symbol = parts[0];
            if !symbol
                .chars()
                .all(|c| c.is_alphabetic() || c == '_' || c == '%')
            {
                return Err(err("symbol must be alphabetic"));
            }
            if table.units.contains_key(symbol) {
                return Err(err("symbol already defined"));
            }
            let scale: f64 = parts[1].parse().map_err(|_| err("bad scale"))?;
            if !(scale.is_finite() && scale > 0.0) {
                return Err(err("scale must be positive"));
            }
            let dimension =
                DimensionVector::parse(parts[2]).ok_or_else(|| err("bad dimension vector"))?;
            let offset: f64 = match parts.get(3) {
                Some(o) => o.parse().map_err(|_| err("bad offset"))?,
                None => 0.0,
            };
            if offset != 0.0 && !dimension.is_pure_temperature() {
                return Err(err("offset only allowed for pure temperature units"));
            }
            table.units.insert(
                symbol.to_string(),
                BaseUnit {
                    dimension,
                    scale,
                    offset,
                    prefixable: offset == 0.0,
                },
            );
        }
        Ok(table)
    }

    fn resolve(&self, symbol: &str) -> Result<(f64, &BaseUnit), UnitError> {
        if let Some(base) = self.units.get(symbol) {
            return Ok((1.0, base));
        }
        // "da" is listed before "d", so two-letter prefixes win.
        for (prefix, factor) in PREFIXES
            .iter()
            .filter(|p| p.0.len() == 2)
            .chain(PREFIXES.iter().filter(|p| p.0.len() == 1))
        {
            if let Some(rest) = symbol.strip_prefix(prefix) {
                match self.units.get(rest) {
                    Some(base) if base.prefixable => return Ok((*factor, base)),
                    Some(base) if base.offset != 0.0 => {
                        return Err(UnitError::OffsetCombination(symbol.to_string()))
                    }
                    _ => {}
                }
            }
        }
        Err(UnitError::UnknownSymbol(symbol.to_string()))
    }

    pub fn parse(&self, expr: &str) -> Result<UnitSpec, UnitError> {
        let compact: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(UnitError::Empty);
        }

        let mut terms: Vec<(bool, &str)> = Vec::new();
        let mut divide = false;
        let mut start = 0;
        for (i, c) in compact.char_indices() {
            if c == '*' || c == '/' {
                terms.push((divide, &compact[start..i]));
                divide = c == '/';
                start = i + 1;
            }
        }
        terms.push((divide, &compact[start..]));

        let mut exps = [0i32; 8];
        let mut scale = 1.0f64;
        let mut offset = 0.0;
        let mut symbol = String::new();
        for (i, (div, term)) in terms.iter().enumerate() {
            if term.is_empty() {
                return Err(UnitError::Malformed(expr.to_string()));
            }
            let (sym, exponent) = match term.split_once('^') {
                Some((s, e)) => {
                    let e: i32 = e
                        .parse()
                        .ok()
                        .filter(|_| !e.is_empty() && !e.starts_with('+'))
                        .ok_or_else(|| UnitError::MalformedExponent(term.to_string()))?;
                    (s, e)
                }
                None => (*term, 1),
            };
            if sym.is_empty() {
                return Err(UnitError::Malformed(expr.to_string()));
            }
            if exponent.abs() > 64 {
                return Err(UnitError::DimensionOutOfRange(expr.to_string()));
            }
            let (prefix, base) = self.resolve(sym)?;
            if base.offset != 0.0 {
                if terms.len() > 1 || exponent != 1 {
                    return Err(UnitError::OffsetCombination(expr.to_string()));
                }
                offset = base.offset;
            }
            let signed = if *div { -exponent } else { exponent };
            for (slot, d) in exps.iter_mut().zip(base.dimension.0) {
                *slot += signed * i32::from(d);
            }
            scale *= (prefix * base.scale).powi(signed);

            if i > 0 {
                symbol.push(if *div { '/' } else { '*' });
            }
            symbol.push_str(sym);
            if exponent != 1 {
                symbol.push('^');
                symbol.push_str(&exponent.to_string());
            }
        }

        if exps.iter().any(|e| e.abs() > MAX_EXPONENT) {
            return Err(UnitError::DimensionOutOfRange(expr.to_string()));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(UnitError::Malformed(expr.to_string()));
        }
        let mut dimension = [0i8; 8];
        for (d, e) in dimension.iter_mut().zip(exps) {
            *d = e as i8;
        }
        Ok(UnitSpec {
            symbol,
            dimension: DimensionVector(dimension),
            scale,
            offset,
        })
    }
}

/// Parses against the built-in table.
pub fn parse_unit(expr: &str) -> Result<UnitSpec, UnitError> {
    UnitTable::builtin().parse(expr)
}
