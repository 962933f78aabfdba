//! AASHTO 1993 structural capacity: subgrade modulus, required structural
//! number, effective structural number from the deflection basin, their
//! ratio, and the check of a D0 threshold against the fitted SNR-D0 curve.
//!
//! Units follow the AASHTO forms: the modulus is in psi, thickness in
//! inches, AUPP in mils. All logarithms in the design equation are base 10.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{DeflectionBasin, FwdTestPoint, RoadClass};

/// Radial offset of the outer geophone used for the subgrade modulus, inches.
pub const SUBGRADE_SENSOR_OFFSET_IN: f64 = 60.0;
pub const SN_BRACKET: (f64, f64) = (0.1, 20.0);
pub const SN_TOLERANCE: f64 = 1e-6;
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_VERIFICATION_TOLERANCE: f64 = 0.10;
pub const MIN_VERIFICATION_POINTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StructuralError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    UnsolvableDesign {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error("structural number undefined for AUPP {0} mils")]
    UndefinedSn(f64),
    #[error("division by zero: required structural number is {0}")]
    ZeroDivision(f64),
    #[error("incomplete point: {0}")]
    IncompletePoint(&'static str),
}

fn positive(name: &str, v: f64) -> Result<f64, StructuralError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(StructuralError::InvalidInput(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

/// M_R = 0.24 P / (d_r r), psi, with P in lbf, d_r and r in inches.
pub fn subgrade_modulus(
    load_lbf: f64,
    deflection_in: f64,
    offset_in: f64,
) -> Result<f64, StructuralError> {
    let p = positive("load", load_lbf)?;
    let d = positive("deflection", deflection_in)?;
    let r = positive("offset", offset_in)?;
    Ok(0.24 * p / (d * r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignInputs {
    pub esal: f64,
    pub z_r: f64,
    pub s_0: f64,
    pub delta_psi: f64,
    /// Subgrade resilient modulus, psi.
    pub m_r: f64,
}

impl DesignInputs {
    pub fn validate(&self) -> Result<(), StructuralError> {
        positive("esal", self.esal)?;
        positive("s_0", self.s_0)?;
        positive("delta_psi", self.delta_psi)?;
        positive("m_r", self.m_r)?;
        if !self.z_r.is_finite() {
            return Err(StructuralError::InvalidInput(format!(
                "z_r is {}",
                self.z_r
            )));
        }
        Ok(())
    }

    /// Design equation written as f(SN) = rhs(SN) - log10(ESAL); the
    /// required structural number is its root.
    pub fn residual(&self, sn: f64) -> f64 {
        let x = sn + 1.0;
        self.z_r * self.s_0 + 9.36 * x.log10() - 0.2
            + (self.delta_psi / (4.2 - 1.5)).log10() / (0.4 + 1094.0 / x.powf(5.19))
            + 2.32 * self.m_r.log10()
            - 8.07
            - self.esal.log10()
    }
}

/// Per-class design traffic and reliability used for SN_req.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassConstants {
    pub esal: f64,
    pub z_r: f64,
    pub s_0: f64,
    pub delta_psi: f64,
}

impl ClassConstants {
    /// 1/4/10 million ESALs; Z_R for 85/90/95 % reliability.
    pub fn default_for(class: RoadClass) -> Self {
        let (esal, z_r) = match class {
            RoadClass::StateRoad => (1.0e6, -1.037),
            RoadClass::UsHighway => (4.0e6, -1.282),
            RoadClass::InterstateHighway => (1.0e7, -1.645),
        };
        ClassConstants {
            esal,
            z_r,
            s_0: 0.35,
            delta_psi: 1.701,
        }
    }

    pub fn with_modulus(&self, m_r: f64) -> DesignInputs {
        DesignInputs {
            esal: self.esal,
            z_r: self.z_r,
            s_0: self.s_0,
            delta_psi: self.delta_psi,
            m_r,
        }
    }
}

/// Root of the design equation with its absolute residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnRoot {
    pub sn: f64,
    pub residual: f64,
}

/// Solves the design equation for SN by bisection on [0.1, 20].
pub fn sn_required(inputs: &DesignInputs) -> Result<SnRoot, StructuralError> {
    inputs.validate()?;
    let (mut lo, mut hi) = SN_BRACKET;
    let f_lo = inputs.residual(lo);
    let f_hi = inputs.residual(hi);
    if !(f_lo.is_finite() && f_hi.is_finite()) || f_lo.signum() == f_hi.signum() {
        return Err(StructuralError::UnsolvableDesign { lo, hi, f_lo, f_hi });
    }
    let rising = f_lo < 0.0;
    let mut mid = 0.5 * (lo + hi);
    let mut f_mid = inputs.residual(mid);
    // Both the bracket width and the residual must meet tolerance; 200
    // halvings exhaust f64 resolution long before the cap is reached.
    for _ in 0..200 {
        if hi - lo <= SN_TOLERANCE && f_mid.abs() < RESIDUAL_TOLERANCE {
            break;
        }
        if f_mid == 0.0 {
            break;
        }
        if (f_mid < 0.0) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
        let next = 0.5 * (lo + hi);
        if next == mid {
            break;
        }
        mid = next;
        f_mid = inputs.residual(mid);
    }
    Ok(SnRoot {
        sn: mid,
        residual: f_mid.abs(),
    })
}

/// Area under pavement profile, mils: (5 D0 - 2 D12 - 2 D24 - D36) / 2.
pub fn aupp(basin: &DeflectionBasin) -> f64 {
    (5.0 * basin.d0.mils() - 2.0 * basin.d12.mils() - 2.0 * basin.d24.mils() - basin.d36.mils())
        / 2.0
}

/// SN_eff = 2.272 H_p^0.4217 AUPP^-0.4678, H_p in inches, AUPP in mils.
pub fn sn_effective(hp_in: f64, aupp_mils: f64) -> Result<f64, StructuralError> {
    positive("pavement thickness", hp_in)?;
    if !(aupp_mils.is_finite() && aupp_mils > 0.0) {
        return Err(StructuralError::UndefinedSn(aupp_mils));
    }
    Ok(2.272 * hp_in.powf(0.4217) * aupp_mils.powf(-0.4678))
}

pub fn snr(sn_eff: f64, sn_req: f64) -> Result<f64, StructuralError> {
    if sn_req == 0.0 || !sn_req.is_finite() {
        return Err(StructuralError::ZeroDivision(sn_req));
    }
    Ok(sn_eff / sn_req)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnResult {
    pub m_r_psi: f64,
    pub aupp_mils: f64,
    pub sn_req: f64,
    pub sn_eff: f64,
    pub snr: f64,
    pub residual: f64,
}

pub fn snr_for_point(
    point: &FwdTestPoint,
    constants: &ClassConstants,
) -> Result<SnResult, StructuralError> {
    let hp = point.hp_in.ok_or(StructuralError::IncompletePoint(
        "missing pavement thickness",
    ))?;
    let basin = &point.basin;
    let m_r = subgrade_modulus(
        basin.load_lbf,
        basin.d60.inches(),
        SUBGRADE_SENSOR_OFFSET_IN,
    )?;
    let root = sn_required(&constants.with_modulus(m_r))?;
    let area = aupp(basin);
    let sn_eff = sn_effective(hp, area)?;
    Ok(SnResult {
        m_r_psi: m_r,
        aupp_mils: area,
        sn_req: root.sn,
        sn_eff,
        snr: snr(sn_eff, root.sn)?,
        residual: root.residual,
    })
}

/// A (D0, SNR) observation used by the threshold check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrSample {
    pub d0_um: f64,
    pub snr: f64,
}

impl SnrSample {
    pub fn from_point(point: &FwdTestPoint, result: &SnResult) -> Self {
        SnrSample {
            d0_um: point.basin.d0.microns(),
            snr: result.snr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Inconsistent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// SNR = a exp(b D0); absent when fewer than two usable points.
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub d0_at_snr1: Option<f64>,
    pub threshold_um: f64,
    pub relative_gap: Option<f64>,
    pub verdict: Verdict,
    pub used: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct VerificationConfig {
    pub tolerance: f64,
    pub min_points: usize,
}

impl Default for VerificationConfig {
    fn default() -> Self {
        VerificationConfig {
            tolerance: DEFAULT_VERIFICATION_TOLERANCE,
            min_points: MIN_VERIFICATION_POINTS,
        }
    }
}

// Ordinary least squares y = intercept + slope x.
fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mean_x) * (y - mean_y);
        sxx += (x - mean_x) * (x - mean_x);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((mean_y - slope * mean_x, slope))
}

/// Fits ln(SNR) = ln(a) + b D0 and compares where the curve crosses SNR = 1
/// with the reliability-based upper D0 threshold.
pub fn verify_threshold(
    samples: &[SnrSample],
    d0_upper_threshold_um: f64,
    config: VerificationConfig,
) -> VerificationReport {
    let usable: Vec<&SnrSample> = samples
        .iter()
        .filter(|s| s.snr > 0.0 && s.snr.is_finite() && s.d0_um.is_finite())
        .collect();
    let excluded = samples.len() - usable.len();
    let xs: Vec<f64> = usable.iter().map(|s| s.d0_um).collect();
    let ys: Vec<f64> = usable.iter().map(|s| s.snr.ln()).collect();
    let fit = linear_fit(&xs, &ys);

    let mut report = VerificationReport {
        a: fit.map(|(ln_a, _)| ln_a.exp()),
        b: fit.map(|(_, b)| b),
        d0_at_snr1: None,
        threshold_um: d0_upper_threshold_um,
        relative_gap: None,
        verdict: Verdict::Inconclusive,
        used: usable.len(),
        excluded,
    };
    let Some((ln_a, b)) = fit else {
        return report;
    };
    if usable.len() < config.min_points || b >= 0.0 {
        return report;
    }
    let crossing = -ln_a / b;
    let gap = (crossing - d0_upper_threshold_um).abs() / d0_upper_threshold_um;
    report.d0_at_snr1 = Some(crossing);
    report.relative_gap = Some(gap);
    report.verdict = if gap <= config.tolerance {
        Verdict::Consistent
    } else {
        Verdict::Inconsistent
    };
    report
}
