//! Rabi-frequency sweeps of the steady state and zero-delay correlations,
//! with the CSV format used by the command-line tool.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::correlations::cauchy_schwarz;
use crate::dynamics::{build_adjoint_generator, steady_state};
use crate::model::{EffectiveModel, PhysicalParams};

pub const CSV_HEADER: &str = "omega_rabi,sz,p2,g12,g21,cs_lhs,cs_rhs,violated,pair_freq";
/// Value of the `violated` column on rows whose grid point failed.
pub const ERROR_SENTINEL: &str = "error";

pub const DEFAULT_OMEGA_MIN: f64 = 1e11;
pub const DEFAULT_OMEGA_MAX: f64 = 1e13;
pub const DEFAULT_POINTS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("sweep needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("sweep bounds must be finite with omega_min < omega_max (got {min:e}, {max:e})")]
    BadBounds { min: f64, max: f64 },
    #[error("log spacing needs omega_min > 0, got {0:e}")]
    NonPositiveLogStart(f64),
    #[error("linear spacing needs omega_min ≥ 0, got {0:e}")]
    NegativeStart(f64),
    #[error("unknown spacing `{0}` (expected `log` or `linear`)")]
    UnknownSpacing(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Log,
    Linear,
}

impl FromStr for Spacing {
    type Err = SweepError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "log" => Ok(Spacing::Log),
            "linear" => Ok(Spacing::Linear),
            other => Err(SweepError::UnknownSpacing(other.to_owned())),
        }
    }
}

impl fmt::Display for Spacing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Spacing::Log => "log",
            Spacing::Linear => "linear",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
    pub spacing: Spacing,
    /// Everything except the drive, which the grid overrides.
    pub base: PhysicalParams,
}

impl SweepSpec {
    pub fn new(base: PhysicalParams) -> Self {
        Self {
            omega_min: DEFAULT_OMEGA_MIN,
            omega_max: DEFAULT_OMEGA_MAX,
            points: DEFAULT_POINTS,
            spacing: Spacing::Log,
            base,
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.points < 2 {
            return Err(SweepError::TooFewPoints(self.points));
        }
        let (min, max) = (self.omega_min, self.omega_max);
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(SweepError::BadBounds { min, max });
        }
        match self.spacing {
            Spacing::Log if min <= 0.0 => Err(SweepError::NonPositiveLogStart(min)),
            Spacing::Linear if min < 0.0 => Err(SweepError::NegativeStart(min)),
            _ => Ok(()),
        }
    }

    /// Ascending Rabi frequencies; both bounds appear exactly.
    pub fn grid(&self) -> Result<Vec<f64>, SweepError> {
        self.validate()?;
        let n = self.points;
        let last = (n - 1) as f64;
        let mut grid: Vec<f64> = (0..n)
            .map(|k| {
                let s = k as f64 / last;
                match self.spacing {
                    Spacing::Log => {
                        let (a, b) = (self.omega_min.ln(), self.omega_max.ln());
                        (a + s * (b - a)).exp()
                    }
                    Spacing::Linear => self.omega_min + s * (self.omega_max - self.omega_min),
                }
            })
            .collect();
        grid[0] = self.omega_min;
        grid[n - 1] = self.omega_max;
        Ok(grid)
    }
}

/// One successful grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub omega_rabi: f64,
    pub sz: f64,
    pub p2: f64,
    pub g12: f64,
    pub g21: f64,
    pub cs_lhs: f64,
    pub cs_rhs: f64,
    pub violated: bool,
    pub pair_freq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepPoint {
    Ok(SweepRow),
    Failed { omega_rabi: f64, reason: String },
}

impl SweepPoint {
    pub fn omega_rabi(&self) -> f64 {
        match self {
            SweepPoint::Ok(row) => row.omega_rabi,
            SweepPoint::Failed { omega_rabi, .. } => *omega_rabi,
        }
    }

    pub fn row(&self) -> Option<&SweepRow> {
        match self {
            SweepPoint::Ok(row) => Some(row),
            SweepPoint::Failed { .. } => None,
        }
    }
}

/// Steady state and zero-delay correlations at one drive strength.
pub fn evaluate(base: &PhysicalParams, omega_rabi: f64) -> Result<SweepRow, String> {
    let model =
        EffectiveModel::from_physical(&base.with_rabi(omega_rabi)).map_err(|e| e.to_string())?;
    let g = build_adjoint_generator(&model).map_err(|e| e.to_string())?;
    let ss = steady_state(&g).map_err(|e| e.to_string())?;
    let report = cauchy_schwarz(&ss).map_err(|e| e.to_string())?;
    Ok(SweepRow {
        omega_rabi,
        sz: ss.inversion(),
        p2: ss.excited_population(),
        g12: report.g12,
        g21: report.g21,
        cs_lhs: report.cs_lhs,
        cs_rhs: report.cs_rhs,
        violated: report.violated,
        pair_freq: model.pair_freq,
    })
}

/// Evaluate every grid point on the current rayon pool. Output order is grid
/// order regardless of scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepPoint>, SweepError> {
    let grid = spec.grid()?;
    Ok(grid
        .par_iter()
        .map(|&omega| match evaluate(&spec.base, omega) {
            Ok(row) => SweepPoint::Ok(row),
            Err(reason) => SweepPoint::Failed {
                omega_rabi: omega,
                reason,
            },
        })
        .collect())
}

/// 9 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn format_row(point: &SweepPoint) -> String {
    match point {
        SweepPoint::Ok(r) => format!(
            "{},{},{},{},{},{},{},{},{}",
            fmt_num(r.omega_rabi),
            fmt_num(r.sz),
            fmt_num(r.p2),
            fmt_num(r.g12),
            fmt_num(r.g21),
            fmt_num(r.cs_lhs),
            fmt_num(r.cs_rhs),
            r.violated,
            fmt_num(r.pair_freq)
        ),
        SweepPoint::Failed { omega_rabi, .. } => {
            let nan = fmt_num(f64::NAN);
            format!(
                "{},{nan},{nan},{nan},{nan},{nan},{nan},{ERROR_SENTINEL},{nan}",
                fmt_num(*omega_rabi)
            )
        }
    }
}

pub fn write_csv<W: Write>(points: &[SweepPoint], out: &mut W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for p in points {
        writeln!(out, "{}", format_row(p))?;
    }
    Ok(())
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("malformed sweep row: {0}")]
pub struct ParseRowError(pub String);

/// Inverse of [`format_row`]. Failed rows come back with an empty reason.
pub fn parse_row(line: &str) -> Result<SweepPoint, ParseRowError> {
    let fields: Vec<&str> = line.trim_end().split(',').collect();
    if fields.len() != 9 {
        return Err(ParseRowError(format!(
            "expected 9 fields, found {}",
            fields.len()
        )));
    }
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| ParseRowError(format!("bad number `{s}`")))
    };
    let omega_rabi = num(fields[0])?;
    let violated = match fields[7] {
        "true" => true,
        "false" => false,
        ERROR_SENTINEL => {
            return Ok(SweepPoint::Failed {
                omega_rabi,
                reason: String::new(),
            });
        }
        other => return Err(ParseRowError(format!("bad flag `{other}`"))),
    };
    Ok(SweepPoint::Ok(SweepRow {
        omega_rabi,
        sz: num(fields[1])?,
        p2: num(fields[2])?,
        g12: num(fields[3])?,
        g21: num(fields[4])?,
        cs_lhs: num(fields[5])?,
        cs_rhs: num(fields[6])?,
        violated,
        pair_freq: num(fields[8])?,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::preset;

    fn spec() -> SweepSpec {
        SweepSpec::new(preset("gamma-globulin").unwrap())
    }

    #[test]
    fn default_grid_hits_bounds_exactly() {
        let g = spec().grid().unwrap();
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 1e11);
        assert_eq!(g[199], 1e13);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn two_points_are_the_bounds() {
        let s = SweepSpec {
            points: 2,
            ..spec()
        };
        assert_eq!(s.grid().unwrap(), vec![1e11, 1e13]);
        let s = SweepSpec {
            points: 2,
            spacing: Spacing::Linear,
            ..spec()
        };
        assert_eq!(s.grid().unwrap(), vec![1e11, 1e13]);
    }

    #[test]
    fn invalid_specs() {
        assert_eq!(
            SweepSpec {
                points: 1,
                ..spec()
            }
            .validate(),
            Err(SweepError::TooFewPoints(1))
        );
        assert_eq!(
            SweepSpec {
                omega_min: 0.0,
                ..spec()
            }
            .validate(),
            Err(SweepError::NonPositiveLogStart(0.0))
        );
        assert!(SweepSpec {
            omega_min: 0.0,
            spacing: Spacing::Linear,
            ..spec()
        }
        .validate()
        .is_ok());
        assert!(matches!(
            SweepSpec {
                omega_min: 2e13,
                ..spec()
            }
            .validate(),
            Err(SweepError::BadBounds { .. })
        ));
        assert!("cubic".parse::<Spacing>().is_err());
    }

    #[test]
    fn rows_are_formatted_with_nine_digits() {
        let row = evaluate(&spec().base, 1e13).unwrap();
        let line = format_row(&SweepPoint::Ok(row));
        assert!(line.starts_with("1.00000000e13,"), "{line}");
        assert!(line.contains(",true,"));
        let back = parse_row(&line).unwrap();
        assert_eq!(format_row(&back), line);
    }

    #[test]
    fn undriven_point_fails_with_sentinel_row() {
        let s = SweepSpec {
            omega_min: 0.0,
            points: 3,
            spacing: Spacing::Linear,
            ..spec()
        };
        let pts = run_sweep(&s).unwrap();
        assert!(matches!(&pts[0], SweepPoint::Failed { reason, .. } if reason.contains("dark")));
        assert!(pts[1].row().is_some());
        let line = format_row(&pts[0]);
        assert_eq!(line, "0.00000000e0,NaN,NaN,NaN,NaN,NaN,NaN,error,NaN");
        assert!(
            matches!(parse_row(&line).unwrap(), SweepPoint::Failed { omega_rabi, .. } if omega_rabi == 0.0)
        );
    }

    #[test]
    fn population_identity_holds_per_row() {
        let pts = run_sweep(&SweepSpec {
            points: 20,
            ..spec()
        })
        .unwrap();
        for p in &pts {
            let r = p.row().unwrap();
            assert!((r.p2 - (r.sz + 0.5)).abs() < 1e-12);
            assert_eq!(r.violated, r.cs_lhs < r.cs_rhs);
        }
    }
}
