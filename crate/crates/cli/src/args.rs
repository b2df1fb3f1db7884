//! Flag parsers. Each error names the accepted range; clap prefixes the flag.

use std::path::PathBuf;
use std::str::FromStr;

use onephase_core::SymmetrySplit;

pub fn dim(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(d) if (2..=64).contains(&d) => Ok(d),
        _ => Err(format!("{s:?} is not a dimension in 2..=64")),
    }
}

pub fn split(s: &str) -> Result<SymmetrySplit, String> {
    SymmetrySplit::from_str(s).map_err(|e| format!("{e}; expected M,K with M, K >= 1"))
}

pub fn intervals(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if (64..=1 << 20).contains(&n) => Ok(n),
        _ => Err(format!("{s:?} is outside 64..=1048576")),
    }
}

pub fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("{s:?} is not a positive finite number")),
    }
}

pub fn spacing(s: &str) -> Result<f64, String> {
    let x = if let Some(den) = s.strip_prefix("1/") {
        den.parse::<f64>().map(|d| 1.0 / d)
    } else {
        s.parse::<f64>()
    };
    match x {
        Ok(h) if h > 0.0 && h <= 0.25 => Ok(h),
        _ => Err(format!(
            "{s:?} is outside (0, 0.25]; fractions like 1/256 are accepted"
        )),
    }
}

/// `A..B`, inclusive, within `7..=14`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DimRange {
    pub lo: usize,
    pub hi: usize,
}

pub fn dim_range(s: &str) -> Result<DimRange, String> {
    let err = || format!("{s:?} is not a range A..B with 7 <= A <= B <= 14");
    let (a, b) = s.split_once("..").ok_or_else(err)?;
    let lo = a.trim().parse().map_err(|_| err())?;
    let hi = b
        .trim()
        .trim_start_matches('=')
        .parse()
        .map_err(|_| err())?;
    if 7 <= lo && lo <= hi && hi <= 14 {
        Ok(DimRange { lo, hi })
    } else {
        Err(err())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeometryArg {
    Planar,
    DoublePolar(SymmetrySplit),
}

pub fn geometry(s: &str) -> Result<GeometryArg, String> {
    if s == "planar" {
        return Ok(GeometryArg::Planar);
    }
    match s.strip_prefix("dp:") {
        Some(rest) => split(rest).map(GeometryArg::DoublePolar),
        None => Err(format!("{s:?} is neither planar nor dp:M,K")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataArg {
    /// Half-plane trace `x - c`.
    Flat(f64),
    Cone,
    /// Field snapshot sampled as boundary data.
    File(PathBuf),
}

pub fn data(s: &str) -> Result<DataArg, String> {
    if s == "cone" {
        return Ok(DataArg::Cone);
    }
    if let Some(c) = s.strip_prefix("flat:") {
        return match c.parse::<f64>() {
            Ok(c) if c.abs() < 1.0 => Ok(DataArg::Flat(c)),
            _ => Err(format!("{s:?}: offset must lie in (-1, 1)")),
        };
    }
    if let Some(p) = s.strip_prefix("file:") {
        return Ok(DataArg::File(PathBuf::from(p)));
    }
    Err(format!("{s:?} is not flat:C, cone or file:PATH"))
}

/// Strictly increasing list of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Values(pub Vec<f64>);

/// Positive lifts of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum TGrid {
    /// Log-spaced; values below the grid floor are raised to it.
    Log {
        lo: f64,
        hi: f64,
        n: usize,
    },
    List(Vec<f64>),
}

/// `log:LO:HI:N` or a comma-separated list; values lie in `(0, 1)`.
pub fn t_grid(s: &str) -> Result<TGrid, String> {
    let err = |why: &str| {
        format!("{s:?}: {why}; expected log:LO:HI:N with 0 < LO < HI < 1, N in 2..=64, or a list")
    };
    if let Some(rest) = s.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [lo, hi, n] = parts[..] else {
            return Err(err("wrong number of fields"));
        };
        let lo: f64 = lo.parse().map_err(|_| err("bad LO"))?;
        let hi: f64 = hi.parse().map_err(|_| err("bad HI"))?;
        let n: usize = n.parse().map_err(|_| err("bad N"))?;
        if !(lo > 0.0 && lo < hi && hi < 1.0) || !(2..=64).contains(&n) {
            return Err(err("out of range"));
        }
        return Ok(TGrid::Log { lo, hi, n });
    }
    let values: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| err("bad list entry")))
        .collect::<Result<_, _>>()?;
    if values.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
        return Err(err("values must lie in (0, 1)"));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(err("values must increase"));
    }
    Ok(TGrid::List(values))
}

pub fn window(s: &str) -> Result<[f64; 2], String> {
    let err = || format!("{s:?} is not A,B with 0 <= A < B <= 1 (fractions of the radius)");
    let (a, b) = s.split_once(',').ok_or_else(err)?;
    let a: f64 = a.trim().parse().map_err(|_| err())?;
    let b: f64 = b.trim().parse().map_err(|_| err())?;
    if 0.0 <= a && a < b && b <= 1.0 {
        Ok([a, b])
    } else {
        Err(err())
    }
}

pub fn radius_list(s: &str) -> Result<Values, String> {
    let values: Vec<f64> = s
        .split(',')
        .map(|t| positive(t.trim()))
        .collect::<Result<_, _>>()?;
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(format!("{s:?} must be strictly increasing"));
    }
    Ok(Values(values))
}
