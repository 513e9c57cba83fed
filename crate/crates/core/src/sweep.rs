//! Parameter-plane sweeps: one exact solve, balance report and variational
//! minimization per grid point, gathered into fixed-schema rows.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::balance::{balance_report, wigner_origin, BalanceReport, RESIDUAL_TOL};
use crate::error::{Error, Result};
use crate::fock::{FockRep, PhaseSpaceOps};
use crate::model::{ModelParams, RabiOperators};
use crate::solver::{solve_rabi_ground, GroundSolution, SolveOptions};
use crate::variational::{minimize_energy_against, trial_dim, trial_state, OptimizerOptions, VariationalResult};

/// Inclusive linear range; a scalar is a range with `count == 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn scalar(v: f64) -> Self {
        Self {
            min: v,
            max: v,
            count: 1,
        }
    }

    pub fn range(min: f64, max: f64, count: usize) -> Result<Self> {
        let axis = Self { min, max, count };
        axis.validate("axis")?;
        Ok(axis)
    }

    pub fn validate(&self, field: &'static str) -> Result<()> {
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::invalid(field, "range ends must be finite"));
        }
        if self.count == 0 {
            return Err(Error::invalid(field, "range count must be at least 1"));
        }
        if self.min > self.max {
            return Err(Error::invalid(
                field,
                format!("range min {} exceeds max {}", self.min, self.max),
            ));
        }
        if self.count == 1 && self.min != self.max {
            return Err(Error::invalid(field, "a single-point range needs min == max"));
        }
        Ok(())
    }

    pub fn is_swept(&self) -> bool {
        self.count > 1
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let span = self.max - self.min;
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.max
                } else {
                    self.min + span * i as f64 / last
                }
            })
            .collect()
    }
}

impl FromStr for Axis {
    type Err = Error;

    /// `"0.5"` or `"min:max:count"`.
    fn from_str(s: &str) -> Result<Self> {
        let parse = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid("axis", format!("cannot parse `{t}` as a number")))
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [v] => Ok(Self::scalar(parse(v)?)),
            [lo, hi, n] => {
                let count = n
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::invalid("axis", format!("cannot parse `{n}` as a count")))?;
                Self::range(parse(lo)?, parse(hi)?, count)
            }
            _ => Err(Error::invalid(
                "axis",
                format!("expected `value` or `min:max:count`, got `{s}`"),
            )),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.count == 1 {
            write!(f, "{}", self.min)
        } else {
            write!(f, "{}:{}:{}", self.min, self.max, self.count)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub omega: Axis,
    pub lambda: Axis,
    pub omega0: Axis,
    pub mass: f64,
}

impl Grid {
    pub fn validate(&self) -> Result<()> {
        self.omega.validate("omega")?;
        self.lambda.validate("lambda")?;
        self.omega0.validate("omega0")?;
        let swept = [self.omega, self.lambda, self.omega0]
            .iter()
            .filter(|a| a.is_swept())
            .count();
        if swept > 2 {
            return Err(Error::invalid("omega", "at most two axes may be swept"));
        }
        Ok(())
    }

    /// Points in row order: `omega` slowest, then `lambda`, then `omega0`.
    pub fn points(&self) -> Result<Vec<ModelParams>> {
        self.validate()?;
        let mut out = Vec::new();
        for w in self.omega.values() {
            for l in self.lambda.values() {
                for w0 in self.omega0.values() {
                    out.push(ModelParams::with_mass(w, l, w0, self.mass)?);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointSettings {
    pub solve: SolveOptions,
    pub optimizer: OptimizerOptions,
    /// Residual tolerance before scaling by `max(1, |E|)`.
    pub residual_tol: f64,
}

impl Default for PointSettings {
    fn default() -> Self {
        Self {
            solve: SolveOptions::default(),
            optimizer: OptimizerOptions::default(),
            residual_tol: RESIDUAL_TOL,
        }
    }
}

/// One output row. Field order is the CSV column order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub omega: f64,
    pub lambda: f64,
    pub omega0: f64,
    pub dim_used: usize,
    pub e_exact: f64,
    pub parity_label: String,
    pub sector_gap: f64,
    pub e_var: f64,
    pub beta_star: f64,
    pub gamma_star: f64,
    pub gap: f64,
    pub res_b1: f64,
    pub res_b7: f64,
    pub res_force: f64,
    pub w00_exact: f64,
    pub w00_trial: f64,
    pub var_qsx: f64,
    pub b2_lo: f64,
    pub b2_hi: f64,
    #[serde(serialize_with = "as_bit")]
    pub p1_ok: bool,
    #[serde(serialize_with = "as_bit")]
    pub p2_ok: bool,
    #[serde(serialize_with = "as_bit")]
    pub p3_ok: bool,
    #[serde(serialize_with = "as_bit")]
    pub p4_ok: bool,
    #[serde(serialize_with = "as_bit")]
    pub b2_ok: bool,
    #[serde(serialize_with = "as_bit")]
    pub w_bound_ok: bool,
}

fn as_bit<S: serde::Serializer>(v: &bool, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u8(u8::from(*v))
}

pub const SWEEP_COLUMNS: [&str; 25] = [
    "omega",
    "lambda",
    "omega0",
    "dim_used",
    "e_exact",
    "parity_label",
    "sector_gap",
    "e_var",
    "beta_star",
    "gamma_star",
    "gap",
    "res_b1",
    "res_b7",
    "res_force",
    "w00_exact",
    "w00_trial",
    "var_qsx",
    "b2_lo",
    "b2_hi",
    "p1_ok",
    "p2_ok",
    "p3_ok",
    "p4_ok",
    "b2_ok",
    "w_bound_ok",
];

/// Scientific notation with 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl SweepRow {
    pub fn csv_record(&self) -> Vec<String> {
        let f = format_float;
        let b = |v: bool| if v { "1".to_string() } else { "0".to_string() };
        vec![
            f(self.omega),
            f(self.lambda),
            f(self.omega0),
            self.dim_used.to_string(),
            f(self.e_exact),
            self.parity_label.clone(),
            f(self.sector_gap),
            f(self.e_var),
            f(self.beta_star),
            f(self.gamma_star),
            f(self.gap),
            f(self.res_b1),
            f(self.res_b7),
            f(self.res_force),
            f(self.w00_exact),
            f(self.w00_trial),
            f(self.var_qsx),
            f(self.b2_lo),
            f(self.b2_hi),
            b(self.p1_ok),
            b(self.p2_ok),
            b(self.p3_ok),
            b(self.p4_ok),
            b(self.b2_ok),
            b(self.w_bound_ok),
        ]
    }
}

/// Everything computed at one grid point.
#[derive(Clone, Debug)]
pub struct PointOutcome {
    pub row: SweepRow,
    pub ground: GroundSolution,
    pub report: BalanceReport,
    pub variational: VariationalResult,
    /// Exact solve converged and the optimizer reached a stationary point.
    pub numerically_ok: bool,
}

/// Solve, report and minimize at `params`. Non-convergence of the solver or the
/// optimizer is recorded in `numerically_ok` rather than returned as an error.
pub fn evaluate_point(params: &ModelParams, settings: &PointSettings) -> Result<PointOutcome> {
    let (ground, solved) = match solve_rabi_ground(params, &settings.solve) {
        Ok(g) => (g, true),
        Err(Error::NotConverged(g)) => (*g, false),
        Err(e) => return Err(e),
    };
    let rep = ground.rep()?;
    let ops = RabiOperators::new(&rep, params)?;
    let phase = PhaseSpaceOps::new(&rep);
    let sector = ground.state_sector();
    let report = balance_report(&ground.state, &ops, &phase, sector, settings.residual_tol)?;
    let (variational, stationary) = match minimize_energy_against(params, &settings.optimizer, ground.energy) {
        Ok(v) => (v, true),
        Err(Error::OptimizerStalled(v)) => (*v, false),
        Err(e) => return Err(e),
    };
    let trial_rep = FockRep::new(trial_dim(variational.trial)?)?;
    let trial = trial_state(&PhaseSpaceOps::new(&trial_rep), variational.trial)?;

    let props = &report.properties;
    let row = SweepRow {
        omega: params.omega(),
        lambda: params.lambda(),
        omega0: params.omega0(),
        dim_used: ground.dim_used,
        e_exact: ground.energy,
        parity_label: ground.parity.to_string(),
        sector_gap: ground.sector_gap,
        e_var: variational.energy,
        beta_star: variational.trial.beta,
        gamma_star: variational.trial.gamma,
        gap: variational.gap,
        res_b1: report.second_order["b1"],
        res_b7: report.second_order["b7"],
        res_force: report.force.residual,
        w00_exact: wigner_origin(&ground.reduced)?,
        w00_trial: wigner_origin(&trial)?,
        var_qsx: report.variance.variance_q_sigma_x,
        b2_lo: report.variance.lower,
        b2_hi: report.variance.upper,
        p1_ok: props["p1"].satisfied,
        p2_ok: props["p2_sign"].satisfied && props["p2_identity"].satisfied,
        p3_ok: props["p3"].satisfied,
        p4_ok: props["p4_bound"].satisfied && props["p4_identity"].satisfied,
        b2_ok: props["b2"].satisfied && props["b6"].satisfied,
        w_bound_ok: props["w_bound"].satisfied,
    };
    Ok(PointOutcome {
        row,
        ground,
        report,
        variational,
        numerically_ok: solved && stationary,
    })
}

/// Evaluates every point on the calling thread, in order.
pub fn run_sequential(points: &[ModelParams], settings: &PointSettings) -> Result<Vec<PointOutcome>> {
    points.iter().map(|p| evaluate_point(p, settings)).collect()
}

/// Evaluates points on a rayon pool of `jobs` threads (default: available parallelism).
/// Results come back in input order.
#[cfg(feature = "parallel")]
pub fn run_parallel(
    points: &[ModelParams],
    settings: &PointSettings,
    jobs: Option<usize>,
) -> Result<Vec<PointOutcome>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::invalid("jobs", e.to_string()))?;
    pool.install(|| points.par_iter().map(|p| evaluate_point(p, settings)).collect())
}

/// Parallel when built with the `parallel` feature and `jobs != Some(1)`.
pub fn run_points(points: &[ModelParams], settings: &PointSettings, jobs: Option<usize>) -> Result<Vec<PointOutcome>> {
    if jobs == Some(0) {
        return Err(Error::invalid("jobs", "must be at least 1"));
    }
    #[cfg(feature = "parallel")]
    {
        if jobs != Some(1) {
            return run_parallel(points, settings, jobs);
        }
    }
    run_sequential(points, settings)
}

pub fn rows_to_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| Error::invalid("out", e.to_string());
    w.write_record(SWEEP_COLUMNS).map_err(io)?;
    for r in rows {
        w.write_record(r.csv_record()).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid("out", e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn axis_parsing() {
        assert_eq!("0.5".parse::<Axis>().unwrap(), Axis::scalar(0.5));
        let a: Axis = "0:1:3".parse().unwrap();
        assert_eq!(a.values(), vec![0.0, 0.5, 1.0]);
        assert!("1:0:3".parse::<Axis>().is_err());
        assert!("0:1:0".parse::<Axis>().is_err());
        assert!("0:1".parse::<Axis>().is_err());
        assert!("x".parse::<Axis>().is_err());
        assert_eq!("0:1:3".parse::<Axis>().unwrap().to_string(), "0:1:3");
    }

    #[test]
    fn axis_hits_endpoints_exactly() {
        let a = Axis::range(0.1, 0.7, 7).unwrap();
        let v = a.values();
        assert_eq!(v[0], 0.1);
        assert_eq!(v[6], 0.7);
        assert!(v.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn grid_order_and_limits() {
        let g = Grid {
            omega: Axis::scalar(1.0),
            lambda: Axis::range(0.0, 1.0, 3).unwrap(),
            omega0: Axis::range(0.0, 2.0, 3).unwrap(),
            mass: 1.0,
        };
        let pts = g.points().unwrap();
        assert_eq!(pts.len(), 9);
        assert_eq!((pts[1].lambda(), pts[1].omega0()), (0.0, 1.0));
        assert_eq!((pts[3].lambda(), pts[3].omega0()), (0.5, 0.0));
        let bad = Grid {
            omega: Axis::range(1.0, 2.0, 2).unwrap(),
            ..g
        };
        assert!(bad.points().is_err());
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 12345.678901234567] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn point_row_examples() {
        let p = ModelParams::new(1.0, 0.5, 1.0).unwrap();
        let o = evaluate_point(&p, &PointSettings::default()).unwrap();
        assert!(o.numerically_ok);
        let r = &o.row;
        assert_eq!(r.parity_label, "+1");
        assert!(r.gap >= -1e-9);
        assert!(r.p1_ok && r.p2_ok && r.p3_ok && r.p4_ok && r.b2_ok && r.w_bound_ok);
        assert!(r.res_b1 < 1e-7 && r.res_b7 < 1e-7 && r.res_force < 1e-7);
        assert_abs_diff_eq!(
            r.w00_trial,
            2.0 * (-2.0 * r.beta_star * r.beta_star).exp(),
            epsilon = 1e-9
        );
        assert!(r.b2_lo <= r.var_qsx && r.var_qsx <= r.b2_hi);
    }

    #[test]
    fn csv_header_matches_row_fields() {
        let p = ModelParams::new(1.0, 0.0, 1.0).unwrap();
        let o = evaluate_point(&p, &PointSettings::default()).unwrap();
        let text = rows_to_csv(&[o.row.clone()]).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), SWEEP_COLUMNS.join(","));
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), SWEEP_COLUMNS.len());
        assert_eq!(fields[5], "+1");
        assert!(fields[19..].iter().all(|f| *f == "1" || *f == "0"));
        let json = serde_json::to_value(&o.row).unwrap();
        let keys: Vec<&String> = json.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), SWEEP_COLUMNS.len());
        assert_eq!(json["p1_ok"], 1);
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let g = Grid {
            omega: Axis::scalar(1.0),
            lambda: Axis::range(0.0, 1.0, 2).unwrap(),
            omega0: Axis::range(0.5, 1.0, 2).unwrap(),
            mass: 1.0,
        };
        let pts = g.points().unwrap();
        let s = PointSettings::default();
        let a: Vec<SweepRow> = run_points(&pts, &s, Some(1))
            .unwrap()
            .into_iter()
            .map(|o| o.row)
            .collect();
        let b: Vec<SweepRow> = run_points(&pts, &s, Some(3))
            .unwrap()
            .into_iter()
            .map(|o| o.row)
            .collect();
        assert_eq!(rows_to_csv(&a).unwrap(), rows_to_csv(&b).unwrap());
        assert!(run_points(&pts, &s, Some(0)).is_err());
    }
}
