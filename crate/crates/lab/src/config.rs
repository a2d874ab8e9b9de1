//! Run configuration: one JSON document, every block optional.

use clap::ValueEnum;
use frac_helmholtz::dual::WeightKind;
use frac_helmholtz::estimates::{FamilyKind, LocalQuantity, TestFamily};
use frac_helmholtz::exponents::TauVariant;
use frac_helmholtz::{Grid64, Params64};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    ResolventApply,
    KernelTable,
    SplitKernel,
    Admissible,
    QWindow,
    Tau,
    OpnormSweep,
    LocalL2,
    WeightedCheck,
    Radiation,
    Herglotz,
    SolveComplex,
    SolveLipschitz,
    Branch,
    MountainPass,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::ResolventApply => "resolvent-apply",
            Experiment::KernelTable => "kernel-table",
            Experiment::SplitKernel => "split-kernel",
            Experiment::Admissible => "admissible",
            Experiment::QWindow => "q-window",
            Experiment::Tau => "tau",
            Experiment::OpnormSweep => "opnorm-sweep",
            Experiment::LocalL2 => "local-l2",
            Experiment::WeightedCheck => "weighted-check",
            Experiment::Radiation => "radiation",
            Experiment::Herglotz => "herglotz",
            Experiment::SolveComplex => "solve-complex",
            Experiment::SolveLipschitz => "solve-lipschitz",
            Experiment::Branch => "branch",
            Experiment::MountainPass => "mountain-pass",
        }
    }

    /// Experiments that build a resolvent and so need `s >= n/(n+1)`.
    fn needs_uniform_regime(self) -> bool {
        !matches!(self, Experiment::Admissible | Experiment::QWindow | Experiment::Tau)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Invalid configuration; exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridBlock {
    pub n: usize,
    pub points_per_axis: usize,
    pub box_length: f64,
}

impl Default for GridBlock {
    fn default() -> Self {
        GridBlock {
            n: 3,
            points_per_axis: 32,
            box_length: 16.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsBlock {
    pub s: f64,
    pub lambda: f64,
    /// Absorption; the grid floor when absent.
    pub epsilon: Option<f64>,
    /// Decreasing absorptions for an extrapolated limit.
    pub eps_sequence: Option<Vec<f64>>,
    /// Allows `s < n/(n+1)` for the negative-regime demonstration.
    pub negative_regime: bool,
    pub tau_variant: TauVariant,
}

impl Default for PhysicsBlock {
    fn default() -> Self {
        PhysicsBlock {
            s: 1.0,
            lambda: 1.0,
            epsilon: None,
            eps_sequence: None,
            negative_regime: false,
            tau_variant: TauVariant::Printed,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExponentBlock {
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub t: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverBlock {
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub damping: Option<f64>,
    pub seed: u64,
    /// Sup norm of the incident Herglotz data.
    pub amplitude: f64,
    /// Critical pairs requested from the dual solver.
    pub pairs: usize,
    pub richardson: bool,
    /// Weighted resolvent constant for the Lipschitz solver.
    pub kappa: Option<f64>,
    pub mu_max: f64,
    pub mu_steps: usize,
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock {
            max_iter: None,
            tol: None,
            damping: None,
            seed: 0,
            amplitude: 0.1,
            pairs: 1,
            richardson: true,
            kappa: None,
            mu_max: 1.0,
            mu_steps: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBlock {
    pub lambdas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub eps_relative: bool,
    pub families: Option<Vec<TestFamily<f64>>>,
    pub radii: Option<Vec<f64>>,
    pub quantity: LocalQuantity,
    pub slope_tol: f64,
    /// Largest denominator in exhaustive rational scans.
    pub max_den: i64,
    /// Upper end of the `t` scan.
    pub t_max: f64,
}

impl Default for SweepBlock {
    fn default() -> Self {
        SweepBlock {
            lambdas: vec![1.0, 2.0, 4.0, 8.0],
            epsilons: vec![0.2, 0.1, 0.05],
            eps_relative: false,
            families: None,
            radii: None,
            quantity: LocalQuantity::Field,
            slope_tol: 0.1,
            max_den: 12,
            t_max: 8.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    /// File names inside the output directory.
    pub csv: Option<String>,
    pub json: Option<String>,
    pub snapshots: bool,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            csv: None,
            json: None,
            snapshots: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Must agree with the subcommand when present.
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default)]
    pub physics: PhysicsBlock,
    #[serde(default)]
    pub exponents: ExponentBlock,
    #[serde(default)]
    pub weight: Option<WeightKind<f64>>,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub sweep: SweepBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn csv_name(&self, exp: Experiment) -> String {
        self.output.csv.clone().unwrap_or_else(|| format!("{exp}.csv"))
    }

    pub fn json_name(&self, exp: Experiment) -> String {
        self.output.json.clone().unwrap_or_else(|| format!("{exp}.json"))
    }

    /// Checks every precondition that can be decided before computing.
    pub fn validate(&self, exp: Experiment) -> Result<(), ConfigError> {
        if let Some(e) = self.experiment {
            if e != exp {
                return bad(format!("experiment: config names {e} but the command is {exp}"));
            }
        }
        for name in [&self.output.csv, &self.output.json].into_iter().flatten() {
            if name.is_empty() || Path::new(name).components().count() != 1 {
                return bad(format!("output: {name:?} must be a plain file name"));
            }
        }
        let g = &self.grid;
        let n = g.n as f64;
        if g.n < 3 {
            return bad(format!("grid.n: n = {} violates n ≥ 3", g.n));
        }
        let ph = &self.physics;
        if !(ph.s > 0.0 && ph.s < n / 2.0) {
            return bad(format!("physics.s: s = {} violates 0 < s < n/2 = {}", ph.s, n / 2.0));
        }
        if exp.needs_uniform_regime() {
            let lo = n / (n + 1.0);
            if ph.s < lo && !(ph.negative_regime && exp == Experiment::OpnormSweep) {
                let hint = if exp == Experiment::OpnormSweep {
                    "; set physics.negative_regime to run the negative-regime demonstration"
                } else {
                    ""
                };
                return bad(format!("physics.s: s = {} violates s ≥ n/(n+1) = {lo}{hint}", ph.s));
            }
            if !(ph.lambda > 0.0 && ph.lambda.is_finite()) {
                return bad(format!("physics.lambda: λ = {} violates λ > 0", ph.lambda));
            }
            if !(g.box_length > 0.0 && g.box_length.is_finite()) {
                return bad(format!("grid.box_length: L = {} violates L > 0", g.box_length));
            }
            if !(g.points_per_axis >= 4 && g.points_per_axis.is_power_of_two()) {
                return bad(format!(
                    "grid.points_per_axis: N = {} must be a power of two with N ≥ 4",
                    g.points_per_axis
                ));
            }
            if needs_three_d(exp) && g.n != 3 {
                return bad(format!("grid.n: {exp} is implemented for n = 3 only"));
            }
            let grid = self.grid()?;
            let k = ph.lambda.powf(1.0 / (2.0 * ph.s));
            if !(grid.nyquist() > k) {
                return bad(format!(
                    "grid: wavenumber k = {k} violates k < π N/L = {}",
                    grid.nyquist()
                ));
            }
            let floor = Params64::relaxed(g.n, ph.s, ph.lambda, 1.0).map_err(|e| ConfigError(e.to_string()))?.eps_floor(&grid);
            if let Some(e) = ph.epsilon {
                if !(e >= floor) {
                    return bad(format!("physics.epsilon: ε = {e} violates ε ≥ grid floor {floor}"));
                }
            }
            if let Some(seq) = &ph.eps_sequence {
                if seq.is_empty() || seq.windows(2).any(|w| !(w[1] < w[0])) {
                    return bad("physics.eps_sequence: values must be nonempty and strictly decreasing");
                }
                if let Some(&last) = seq.last() {
                    if !(last >= floor * (1.0 - 1e-12)) {
                        return bad(format!("physics.eps_sequence: ε = {last} violates ε ≥ grid floor {floor}"));
                    }
                }
            }
        }
        self.validate_exponents(exp)?;
        let sw = &self.sweep;
        if matches!(exp, Experiment::OpnormSweep | Experiment::LocalL2) {
            if sw.lambdas.is_empty() || sw.lambdas.iter().any(|&l| !(l > 0.0)) {
                return bad("sweep.lambdas: need at least one value, all with λ > 0");
            }
            if sw.epsilons.is_empty() || sw.epsilons.iter().any(|&e| !(e > 0.0)) {
                return bad("sweep.epsilons: need at least one value, all with ε > 0");
            }
            let nyq = self.grid()?.nyquist();
            if let Some(&l) = sw.lambdas.iter().find(|&&l| !(l.powf(1.0 / (2.0 * self.physics.s)) < nyq)) {
                return bad(format!(
                    "sweep.lambdas: λ = {l} puts k = λ^(1/2s) = {} outside k < π N/L = {nyq}",
                    l.powf(1.0 / (2.0 * self.physics.s))
                ));
            }
        }
        if matches!(exp, Experiment::Admissible | Experiment::QWindow | Experiment::Tau) && !(1..=64).contains(&sw.max_den) {
            return bad(format!("sweep.max_den: {} violates 1 ≤ max_den ≤ 64", sw.max_den));
        }
        if exp == Experiment::MountainPass && self.solver.pairs == 0 {
            return bad("solver.pairs: need at least one pair");
        }
        if exp == Experiment::Branch && !(self.solver.mu_max > 0.0 && self.solver.mu_steps > 0) {
            return bad("solver: branch needs mu_max > 0 and mu_steps ≥ 1");
        }
        if let Some(d) = self.solver.damping {
            if !(d > 0.0 && d <= 1.0) {
                return bad(format!("solver.damping: θ = {d} violates 0 < θ ≤ 1"));
            }
        }
        if let Some(t) = self.solver.tol {
            if !(t > 0.0) {
                return bad(format!("solver.tol: {t} violates tol > 0"));
            }
        }
        Ok(())
    }

    fn validate_exponents(&self, exp: Experiment) -> Result<(), ConfigError> {
        let x = &self.exponents;
        let n = self.grid.n as f64;
        let require = |v: Option<f64>, key: &str| v.ok_or_else(|| ConfigError(format!("exponents.{key}: required by {exp}")));
        match exp {
            Experiment::OpnormSweep | Experiment::LocalL2 => {
                let p = require(x.p, "p")?;
                if !(p > 1.0) {
                    return bad(format!("exponents.p: p = {p} violates p > 1"));
                }
                if exp == Experiment::OpnormSweep {
                    let q = require(x.q, "q")?;
                    if !(q > p) {
                        return bad(format!("exponents.q: q = {q} violates q > p = {p}"));
                    }
                }
            }
            Experiment::WeightedCheck => {
                let a = require(x.alpha, "alpha")?;
                if !(a > (n + 1.0) / 2.0) {
                    return bad(format!("exponents.alpha: α = {a} violates α > (n+1)/2 = {}", (n + 1.0) / 2.0));
                }
            }
            Experiment::Tau => {
                if let Some(a) = x.alpha {
                    if !(a > (n + 1.0) / 2.0) {
                        return bad(format!("exponents.alpha: α = {a} violates α > (n+1)/2 = {}", (n + 1.0) / 2.0));
                    }
                }
            }
            Experiment::SolveComplex => {
                let t = x.t.unwrap_or(3.0);
                let q = x.q.unwrap_or(4.0);
                if !(t > 1.0 && q > t) {
                    return bad(format!("exponents: t = {t}, q = {q} violate 1 < t < q"));
                }
            }
            Experiment::SolveLipschitz => {
                let a = x.alpha.unwrap_or(3.0);
                if !(a > (n + 1.0) / 2.0) {
                    return bad(format!("exponents.alpha: α = {a} violates α > (n+1)/2 = {}", (n + 1.0) / 2.0));
                }
            }
            Experiment::Branch => {
                let p = x.p.unwrap_or(3.0);
                if !(p > 2.0) {
                    return bad(format!("exponents.p: p = {p} violates p > 2"));
                }
            }
            Experiment::MountainPass => {
                let p = x.p.unwrap_or(4.2);
                let two_s = 2.0 * self.physics.s;
                let lo = 2.0 * (n + 1.0) / (n - 1.0);
                let hi = if n > two_s { 2.0 * n / (n - two_s) } else { f64::INFINITY };
                if !(p > lo && p < hi) {
                    return bad(format!(
                        "exponents.p: p = {p} violates 2(n+1)/(n-1) = {lo} < p < 2n/(n-2s) = {hi}"
                    ));
                }
            }
            Experiment::Admissible => {
                if x.p.is_some() != x.q.is_some() {
                    return bad("exponents: give both p and q, or neither for a scan");
                }
                if let (Some(p), Some(q)) = (x.p, x.q) {
                    if !(p > 1.0 && q > 1.0) {
                        return bad(format!("exponents: p = {p}, q = {q} violate p, q > 1"));
                    }
                }
            }
            Experiment::QWindow => {
                if let Some(t) = x.t {
                    if !(t > 1.0) {
                        return bad(format!("exponents.t: t = {t} violates t > 1"));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid64, ConfigError> {
        let g = &self.grid;
        Grid64::new(g.n, g.points_per_axis, g.box_length).map_err(|e| ConfigError(format!("grid: {e}")))
    }

    /// Parameters at the configured absorption (the grid floor by default).
    pub fn params(&self, grid: &Grid64) -> frac_helmholtz::Result<Params64> {
        let ph = &self.physics;
        let base = if ph.negative_regime {
            Params64::relaxed(self.grid.n, ph.s, ph.lambda, 1.0)?
        } else {
            Params64::new(self.grid.n, ph.s, ph.lambda, 1.0)?
        };
        let eps = ph.epsilon.unwrap_or_else(|| base.eps_floor(grid));
        base.with_epsilon(eps)
    }

    pub fn families(&self) -> Vec<TestFamily<f64>> {
        self.sweep.families.clone().unwrap_or_else(|| {
            vec![
                TestFamily::new(FamilyKind::Gaussian, 2, self.solver.seed, 1.0),
                TestFamily::new(FamilyKind::ModulatedGaussian, 3, self.solver.seed, 2.0),
            ]
        })
    }
}

fn needs_three_d(exp: Experiment) -> bool {
    matches!(
        exp,
        Experiment::Herglotz
            | Experiment::SolveComplex
            | Experiment::SolveLipschitz
            | Experiment::Branch
            | Experiment::MountainPass
            | Experiment::WeightedCheck
    )
}
