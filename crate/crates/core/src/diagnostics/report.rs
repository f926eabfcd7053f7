use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::energy::{check_e_monotone, classify_point, energy_e, Classification, EnergyRecord, C_MONO};
use super::frequency::{check_a8, check_n_monotone, frequency, FrequencyRecord, FREQUENCY_GATE_TOL};
use super::growth::{
    energy_bound_m, gradient_bound_ratio, growth_ratio_energy, growth_ratio_up, holder_seminorm, lipschitz_companion,
    nondegeneracy_ratio, HolderEstimate,
};
use super::Verdict;
use crate::error::{Error, Result};
use crate::field::io::fmt_f64;
use crate::field::{Point, ScalarField};

pub const REPORT_HEADER: &str = "center_x,center_y,r,E,dE_integrand,D,H,N,ratio_up,ratio_energy,ratio_nondeg,flags";

/// Parameters of a diagnostics sweep over centers and radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseSweep {
    pub centers: Vec<Point>,
    /// Strictly increasing; shared by every center.
    pub radii: Vec<f64>,
    pub c_mono: f64,
    /// Hölder exponent; `None` selects `2/(p+1)`.
    pub holder_exponent: Option<f64>,
    pub holder_budget: usize,
    pub seed: u64,
    pub classify: bool,
}

impl Default for DiagnoseSweep {
    fn default() -> Self {
        DiagnoseSweep {
            centers: vec![[0.0, 0.0]],
            radii: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            c_mono: C_MONO,
            holder_exponent: None,
            holder_budget: 2_000_000,
            seed: 0,
            classify: true,
        }
    }
}

impl DiagnoseSweep {
    pub fn validate(&self) -> Result<()> {
        if self.centers.is_empty() {
            return Err(Error::InvalidInput("centers must not be empty".into()));
        }
        if self.centers.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("centers must be finite".into()));
        }
        if self.radii.is_empty() || self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidInput("radii must be positive and finite".into()));
        }
        if self.radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("radii must be strictly increasing".into()));
        }
        if !(self.c_mono.is_finite() && self.c_mono >= 0.0) {
            return Err(Error::InvalidInput(format!("c_mono must be >= 0, got {}", self.c_mono)));
        }
        if self.holder_budget == 0 {
            return Err(Error::InvalidInput("holder_budget must be positive".into()));
        }
        Ok(())
    }
}

/// One `(center, radius)` line of the report.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub energy: EnergyRecord,
    pub frequency: FrequencyRecord,
    pub ratio_up: f64,
    pub ratio_energy: f64,
    pub ratio_nondeg: f64,
}

impl ReportRow {
    fn flags(&self) -> String {
        let mut f = Vec::new();
        if self.energy.floored {
            f.push("floored");
        }
        if self.frequency.n.is_none() {
            f.push("N_undefined");
        }
        if !self.frequency.interpretable {
            f.push("N_not_interpretable");
        }
        f.join("|")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticReport {
    pub p: f64,
    pub h: f64,
    pub rows: Vec<ReportRow>,
    pub verdicts: Vec<Verdict>,
    pub classifications: Vec<Option<Classification>>,
    pub holder: HolderEstimate,
    pub gradient_bound: f64,
    pub lipschitz_companion: f64,
    /// `∫(|∇u|² + u^{1-p} + u²)` over the domain.
    pub energy_bound_m: f64,
}

fn row(u: &ScalarField, x: Point, r: f64) -> Result<ReportRow> {
    Ok(ReportRow {
        energy: energy_e(u, x, r)?,
        frequency: frequency(u, x, r, FREQUENCY_GATE_TOL)?,
        ratio_up: growth_ratio_up(u, x, r)?,
        ratio_energy: growth_ratio_energy(u, x, r)?,
        ratio_nondeg: nondegeneracy_ratio(u, x, r)?,
    })
}

/// Runs every functional over the sweep. Rows come out ordered by center
/// (as listed) and then by radius, independent of scheduling.
pub fn run_sweep(u: &ScalarField, sweep: &DiagnoseSweep) -> Result<DiagnosticReport> {
    sweep.validate()?;
    let r_max = *sweep.radii.last().unwrap();
    for c in &sweep.centers {
        u.grid().require_ball(*c, r_max, u.grid().h())?;
    }
    let jobs: Vec<(Point, f64)> =
        sweep.centers.iter().flat_map(|&c| sweep.radii.iter().map(move |&r| (c, r))).collect();
    let rows = jobs.par_iter().map(|&(c, r)| row(u, c, r)).collect::<Result<Vec<_>>>()?;

    let per_center = sweep
        .centers
        .par_iter()
        .map(|&c| -> Result<(Vec<Verdict>, Option<Classification>)> {
            let mut v = Vec::new();
            let tag = |mut verdict: Verdict| {
                verdict.check = format!("{}@({},{})", verdict.check, fmt_f64(c[0]), fmt_f64(c[1]));
                verdict
            };
            if sweep.radii.len() >= 3 {
                v.push(tag(check_e_monotone(u, c, &sweep.radii, sweep.c_mono)?.verdict));
            }
            if sweep.radii.len() >= 2 {
                v.push(tag(check_n_monotone(u, c, &sweep.radii)?.0));
            }
            let a8_radii: Vec<f64> = sweep
                .radii
                .iter()
                .copied()
                .filter(|&r| r > 4.0 * u.grid().h() && u.grid().require_ball(c, r + 2.0 * u.grid().h(), 0.5 * u.grid().h()).is_ok())
                .collect();
            if !a8_radii.is_empty() {
                v.push(tag(check_a8(u, c, &a8_radii)?));
            }
            let class = if sweep.classify { classify_point(u, c).ok() } else { None };
            Ok((v, class))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut verdicts = Vec::new();
    let mut classifications = Vec::new();
    for (v, c) in per_center {
        verdicts.extend(v);
        classifications.push(c);
    }

    let exponent = sweep.holder_exponent.unwrap_or(2.0 / (u.p() + 1.0));
    let holder = holder_seminorm(u, exponent, sweep.holder_budget, sweep.seed)?;
    Ok(DiagnosticReport {
        p: u.p(),
        h: u.grid().h(),
        rows,
        verdicts,
        classifications,
        holder,
        gradient_bound: gradient_bound_ratio(u),
        lipschitz_companion: lipschitz_companion(u),
        energy_bound_m: energy_bound_m(u),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

impl DiagnosticReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(REPORT_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                fmt_f64(r.energy.center[0]),
                fmt_f64(r.energy.center[1]),
                fmt_f64(r.energy.r),
                fmt_f64(r.energy.e),
                fmt_f64(r.energy.de_integrand),
                fmt_f64(r.frequency.d),
                fmt_f64(r.frequency.h),
                opt(r.frequency.n),
                fmt_f64(r.ratio_up),
                fmt_f64(r.ratio_energy),
                fmt_f64(r.ratio_nondeg),
                r.flags()
            );
        }
        s
    }

    /// Verdicts plus summary statistics as pretty JSON.
    pub fn verdicts_json(&self) -> String {
        let summary = serde_json::json!({
            "verdicts": self.verdicts,
            "classifications": self.classifications,
            "holder": self.holder,
            "gradient_bound": self.gradient_bound,
            "lipschitz_companion": self.lipschitz_companion,
            "energy_bound_M": self.energy_bound_m,
        });
        serde_json::to_string_pretty(&summary).expect("report serializes")
    }

    /// All checks that issued a verdict passed.
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass != Some(false))
    }
}
