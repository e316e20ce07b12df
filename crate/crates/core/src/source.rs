//! Built-in source/sink families.
//!
//! The family is closed on purpose: scenario files can only name these
//! members, which keeps experiment configurations reproducible. All sources
//! are mean-corrected at projection time, so the zero-sum compatibility of the
//! discrete right-hand sides holds to solver precision regardless of the
//! analytic mean.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Named source/sink term S from the closed built-in family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SourceSpec {
    /// S = 0.
    Zero,
    /// S(x) = sin(2 pi k x) on [0,1].
    Sine1d { k: u32 },
    /// S(x,y) = sin(2 pi kx x) sin(2 pi ky y) on [0,1]^2.
    Sine2d { kx: u32, ky: u32 },
    /// Difference of two Gaussian bumps of width sigma centered at (xp, yp)
    /// and (xm, ym), scaled by amplitude; in 1D only the x-coordinates are
    /// used. Mean-subtracted at projection time.
    Dipole {
        xp: f64,
        yp: f64,
        xm: f64,
        ym: f64,
        sigma: f64,
        amplitude: f64,
    },
}

impl SourceSpec {
    /// Parse the scenario-file form: a family name plus a flat parameter list.
    pub fn parse(family: &str, params: &[f64]) -> Result<Self> {
        let bad = |msg: String| Err(Error::BadScenario(msg));
        match family {
            "zero" => {
                if !params.is_empty() {
                    return bad(format!(
                        "source 'zero' takes no params, got {}",
                        params.len()
                    ));
                }
                Ok(SourceSpec::Zero)
            }
            "sine1d" => {
                if params.len() != 1 {
                    return bad(format!(
                        "source 'sine1d' takes 1 param (k), got {}",
                        params.len()
                    ));
                }
                Ok(SourceSpec::Sine1d {
                    k: params[0] as u32,
                })
            }
            "sine2d" => {
                if params.len() != 2 {
                    return bad(format!(
                        "source 'sine2d' takes 2 params (kx ky), got {}",
                        params.len()
                    ));
                }
                Ok(SourceSpec::Sine2d {
                    kx: params[0] as u32,
                    ky: params[1] as u32,
                })
            }
            "dipole" => {
                if params.len() != 6 {
                    return bad(format!(
                        "source 'dipole' takes 6 params (x+ y+ x- y- sigma amplitude), got {}",
                        params.len()
                    ));
                }
                if params[4] <= 0.0 {
                    return bad(format!("dipole sigma must be positive, got {}", params[4]));
                }
                Ok(SourceSpec::Dipole {
                    xp: params[0],
                    yp: params[1],
                    xm: params[2],
                    ym: params[3],
                    sigma: params[4],
                    amplitude: params[5],
                })
            }
            other => bad(format!(
                "unknown source family '{other}' (expected zero | sine1d | sine2d | dipole)"
            )),
        }
    }

    pub fn supports_1d(&self) -> bool {
        !matches!(self, SourceSpec::Sine2d { .. })
    }

    pub fn supports_2d(&self) -> bool {
        !matches!(self, SourceSpec::Sine1d { .. })
    }

    pub fn eval_1d(&self, x: f64) -> f64 {
        match self {
            SourceSpec::Zero => 0.0,
            SourceSpec::Sine1d { k } => (2.0 * PI * *k as f64 * x).sin(),
            SourceSpec::Sine2d { .. } => 0.0,
            SourceSpec::Dipole {
                xp,
                xm,
                sigma,
                amplitude,
                ..
            } => {
                let g = |c: f64| (-((x - c) * (x - c)) / (2.0 * sigma * sigma)).exp();
                amplitude * (g(*xp) - g(*xm))
            }
        }
    }

    pub fn eval_2d(&self, x: f64, y: f64) -> f64 {
        match self {
            SourceSpec::Zero => 0.0,
            SourceSpec::Sine1d { k } => (2.0 * PI * *k as f64 * x).sin(),
            SourceSpec::Sine2d { kx, ky } => {
                (2.0 * PI * *kx as f64 * x).sin() * (2.0 * PI * *ky as f64 * y).sin()
            }
            SourceSpec::Dipole {
                xp,
                yp,
                xm,
                ym,
                sigma,
                amplitude,
            } => {
                let g = |cx: f64, cy: f64| {
                    let d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                    (-d2 / (2.0 * sigma * sigma)).exp()
                };
                amplitude * (g(*xp, *yp) - g(*xm, *ym))
            }
        }
    }
}
