//! Norm-ratio sweeps, local `L²` averages, weighted bounds and the
//! radiation residual.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{scaling_exponent_formula, tau_alpha, thm1_admissible, ExponentTriple, TauVariant};
use crate::fit::{fit_loglog, LineFit};
use crate::grid::{ComplexField, Grid, Space};
use crate::resolvent::{build_multiplier, smoothstep, ResolventParams};
use crate::scalar::{lit, to_f64, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FamilyKind<T> {
    Gaussian,
    /// Gaussian envelope times a plane wave on the characteristic sphere.
    ModulatedGaussian,
    /// Random phases on a smooth spectral shell around the sphere.
    AnnulusBandlimited,
    BumpCompact,
    /// `(1 + |x|²/σ²)^{-decay/2}`.
    PowerLaw { decay: T },
    Zero,
}

/// `count` members of one kind with widths `scale 2^j / k`, `j < count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFamily<T> {
    #[serde(flatten)]
    pub kind: FamilyKind<T>,
    pub count: usize,
    pub seed: u64,
    pub scale: T,
}

impl<T: Real> TestFamily<T> {
    pub fn new(kind: FamilyKind<T>, count: usize, seed: u64, scale: T) -> Self {
        TestFamily {
            kind,
            count,
            seed,
            scale,
        }
    }

    /// Decay rate at infinity, `None` for rapidly decaying members.
    pub fn algebraic_decay(&self) -> Option<T> {
        match self.kind {
            FamilyKind::PowerLaw { decay } => Some(decay),
            _ => None,
        }
    }

    /// Members for a problem with wavenumber `k`.
    pub fn generate(&self, grid: &Grid<T>, k: T) -> Result<Vec<ComplexField<T>>> {
        if !(self.scale > T::zero()) || !(k > T::zero()) {
            return Err(Error::Usage("family scale and wavenumber must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = grid.dim();
        let mut out = Vec::with_capacity(self.count);
        for j in 0..self.count {
            let width = self.scale * lit::<T>(2f64.powi(j as i32)) / k;
            let f = match self.kind {
                FamilyKind::Gaussian => ComplexField::from_fn(grid, |x| {
                    let r2: T = x.iter().map(|&a| a * a).sum();
                    Complex::new((-r2 / (lit::<T>(2.0) * width * width)).exp(), T::zero())
                }),
                FamilyKind::ModulatedGaussian => {
                    let w = unit_vector::<T>(&mut rng, n);
                    ComplexField::from_fn(grid, |x| {
                        let r2: T = x.iter().map(|&a| a * a).sum();
                        let phase: T = x.iter().zip(&w).map(|(&a, &b)| a * b).sum::<T>() * k;
                        Complex::from_polar((-r2 / (lit::<T>(2.0) * width * width)).exp(), phase)
                    })
                }
                FamilyKind::AnnulusBandlimited => {
                    // shell half-width in units of k shrinks with j
                    let half = lit::<T>(0.25) / lit::<T>(2f64.powi(j as i32)) / self.scale.max(T::one());
                    let mut values = Vec::with_capacity(grid.size());
                    for &r in grid.xi_norms() {
                        let d = ((r / k) - T::one()).abs() / half;
                        let amp = T::one() - smoothstep(d);
                        let theta: T = lit(rng.gen::<f64>() * std::f64::consts::TAU);
                        values.push(Complex::from_polar(amp, theta));
                    }
                    ComplexField::from_values(grid, values, Space::Spectral)?.from_spectrum()?
                }
                FamilyKind::BumpCompact => ComplexField::from_fn(grid, |x| {
                    let r2: T = x.iter().map(|&a| a * a).sum::<T>() / (width * width);
                    let v = if r2 < T::one() {
                        (T::one() - (T::one() - r2).recip()).exp()
                    } else {
                        T::zero()
                    };
                    Complex::new(v, T::zero())
                }),
                FamilyKind::PowerLaw { decay } => ComplexField::from_fn(grid, |x| {
                    let r2: T = x.iter().map(|&a| a * a).sum::<T>() / (width * width);
                    Complex::new((T::one() + r2).powf(-decay / lit(2.0)), T::zero())
                }),
                FamilyKind::Zero => ComplexField::zeros(grid, Space::Physical),
            };
            out.push(f);
        }
        Ok(out)
    }
}

fn unit_vector<T: Real>(rng: &mut ChaCha8Rng, n: usize) -> Vec<T> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let r = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if r > 1e-3 && r <= 1.0 {
            return v.iter().map(|a| lit(a / r)).collect();
        }
    }
}

fn generate_all<T: Real>(families: &[TestFamily<T>], grid: &Grid<T>, k: T) -> Result<Vec<ComplexField<T>>> {
    let mut out = Vec::new();
    for f in families {
        out.extend(f.generate(grid, k)?);
    }
    if out.is_empty() {
        return Err(Error::Usage("test family is empty".into()));
    }
    Ok(out)
}

/// `a/b`, with `0/0 = 0`.
fn safe_ratio<T: Real>(a: T, b: T) -> T {
    if b > T::zero() {
        a / b
    } else {
        T::zero()
    }
}

/// `||R f||_q / ||f||_p` for one field.
pub fn norm_ratio<T: Real>(f: &ComplexField<T>, params: &ResolventParams<T>, p: T, q: T) -> Result<T> {
    let u = crate::resolvent::apply_resolvent(f, params)?;
    Ok(safe_ratio(u.lp_norm(q)?, f.lp_norm(p)?))
}

/// λ and ε values of an operator-norm sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig<T> {
    pub lambdas: Vec<T>,
    pub epsilons: Vec<T>,
    /// Use `ε λ` instead of `ε` at each λ, which keeps the dilation exact.
    pub eps_relative: bool,
    /// Allowed `max/min - 1` of the max ratio across the ε values.
    pub variation_tol: T,
    pub slope_tol: T,
    /// Run even if the exponents are inadmissible (negative-regime demos).
    pub allow_inadmissible: bool,
}

impl<T: Real> SweepConfig<T> {
    pub fn new(lambdas: Vec<T>, epsilons: Vec<T>) -> Self {
        SweepConfig {
            lambdas,
            epsilons,
            eps_relative: false,
            variation_tol: lit(0.2),
            slope_tol: lit(0.1),
            allow_inadmissible: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow<T> {
    pub lambda: T,
    pub epsilon: T,
    pub max_ratio: T,
    pub ratios: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport<T> {
    pub p: T,
    pub q: T,
    pub admissible: bool,
    pub rows: Vec<RatioRow<T>>,
    /// `(λ, max/min - 1)` across ε at fixed λ.
    pub eps_variation: Vec<(T, T)>,
    /// `(ε, fit of log max ratio against log λ)`, one per ε column.
    pub lambda_fits: Vec<(T, LineFit<T>)>,
    pub predicted_slope: Option<T>,
    /// Largest ratio seen, the empirical `C_{p,q}`.
    pub constant: T,
    pub eps_stable: bool,
    pub slope_ok: Option<bool>,
    pub pass: bool,
}

/// Maximum of `||R f||_q / ||f||_p` over the family on a `(λ, ε)` grid.
pub fn opnorm_sweep<T: Real>(
    grid: &Grid<T>,
    s: T,
    families: &[TestFamily<T>],
    p: T,
    q: T,
    config: &SweepConfig<T>,
) -> Result<EstimateReport<T>> {
    if config.lambdas.is_empty() || config.epsilons.is_empty() {
        return Err(Error::Usage("sweep needs at least one lambda and one epsilon".into()));
    }
    let n = grid.dim();
    let (sf, pf, qf) = (to_f64(s), to_f64(p), to_f64(q));
    let triple = ExponentTriple::pair(pf, qf)?;
    let verdict = thm1_admissible(n, &sf, &triple)?;
    if !verdict.admissible && !config.allow_inadmissible {
        let names: Vec<&str> = verdict.failed_conditions.iter().map(|c| c.label()).collect();
        return Err(Error::Domain(format!("inadmissible exponents: {}", names.join(", "))));
    }
    let predicted = verdict
        .admissible
        .then(|| lit::<T>(scaling_exponent_formula(n, &sf, &triple)));

    let mut rows = Vec::new();
    for &lambda in &config.lambdas {
        let base = ResolventParams::relaxed(n, s, lambda, T::one())?;
        base.check_grid(grid)?;
        let fields = generate_all(families, grid, base.wavenumber())?;
        let spectra: Vec<ComplexField<T>> = fields.iter().map(|f| f.to_spectrum()).collect::<Result<_>>()?;
        let norms_p: Vec<T> = fields.iter().map(|f| f.lp_norm(p)).collect::<Result<_>>()?;
        for &e in &config.epsilons {
            let eps = if config.eps_relative { e * lambda } else { e };
            let params = base.with_epsilon(eps)?;
            let m = build_multiplier(&params, grid)?;
            let ratios: Vec<T> = spectra
                .par_iter()
                .zip(norms_p.par_iter())
                .map(|(fh, &np)| -> Result<T> {
                    let u = fh.multiply(&m)?.from_spectrum()?;
                    Ok(safe_ratio(u.lp_norm(q)?, np))
                })
                .collect::<Result<_>>()?;
            let max_ratio = ratios.iter().copied().fold(T::zero(), T::max);
            rows.push(RatioRow {
                lambda,
                epsilon: eps,
                max_ratio,
                ratios,
            });
        }
    }

    let ne = config.epsilons.len();
    let eps_variation: Vec<(T, T)> = rows
        .chunks(ne)
        .map(|c| {
            let hi = c.iter().map(|r| r.max_ratio).fold(T::zero(), T::max);
            let lo = c.iter().map(|r| r.max_ratio).fold(T::infinity(), T::min);
            (c[0].lambda, if lo > T::zero() { hi / lo - T::one() } else { T::zero() })
        })
        .collect();
    let eps_stable = eps_variation.iter().all(|&(_, v)| v <= config.variation_tol);

    let mut lambda_fits = Vec::new();
    if config.lambdas.len() >= 2 {
        for (j, &e) in config.epsilons.iter().enumerate() {
            let xs: Vec<T> = config.lambdas.clone();
            let ys: Vec<T> = rows.iter().skip(j).step_by(ne).map(|r| r.max_ratio).collect();
            if let Some(fit) = fit_loglog(&xs, &ys) {
                lambda_fits.push((e, fit));
            }
        }
    }
    let slope_ok = match (predicted, lambda_fits.is_empty()) {
        (Some(pr), false) => Some(
            lambda_fits
                .iter()
                .all(|(_, f)| (f.slope - pr).abs() <= config.slope_tol),
        ),
        _ => None,
    };
    let constant = rows.iter().map(|r| r.max_ratio).fold(T::zero(), T::max);
    let pass = verdict.admissible && eps_stable && slope_ok.unwrap_or(true) && constant.is_finite();
    Ok(EstimateReport {
        p,
        q,
        admissible: verdict.admissible,
        rows,
        eps_variation,
        lambda_fits,
        predicted_slope: predicted,
        constant,
        eps_stable,
        slope_ok,
        pass,
    })
}

/// Offsets of the lattice points within distance `radius` of the origin.
fn ball_offsets<T: Real>(grid: &Grid<T>, radius: T) -> Vec<Vec<i64>> {
    let n = grid.dim();
    let h = grid.spacing();
    let m = (radius / h).floor().to_i64().unwrap_or(0);
    let mut out = Vec::new();
    let mut idx = vec![-m; n];
    loop {
        let r2: T = idx.iter().map(|&a| lit::<T>((a * a) as f64)).sum::<T>() * h * h;
        if r2 <= radius * radius {
            out.push(idx.clone());
        }
        let mut a = 0;
        loop {
            if a == n {
                return out;
            }
            idx[a] += 1;
            if idx[a] <= m {
                break;
            }
            idx[a] = -m;
            a += 1;
        }
    }
}

/// `max_c ((1/R) Σ_{|x - c| <= R} |u|² h^n)^{1/2}` over lattice centers,
/// with periodic wrap-around.
pub fn local_l2<T: Real>(u: &ComplexField<T>, radius: T, centers: &[Vec<i64>]) -> Result<T> {
    u.expect_space(Space::Physical)?;
    let grid = u.grid();
    if !(radius >= grid.spacing()) {
        return Err(Error::Domain(format!(
            "radius {radius} is smaller than one grid cell {}",
            grid.spacing()
        )));
    }
    let offsets = ball_offsets(grid, radius);
    let vol = grid.cell_volume();
    let vals = u.values();
    let best = centers
        .par_iter()
        .map(|c| {
            if c.len() != grid.dim() {
                return Err(Error::Usage("center has the wrong dimension".into()));
            }
            let mut idx = vec![0i64; c.len()];
            let mut sum = T::zero();
            for o in &offsets {
                for a in 0..c.len() {
                    idx[a] = c[a] + o[a];
                }
                sum = sum + vals[grid.ravel(&idx)].norm_sqr();
            }
            Ok((sum * vol / radius).sqrt())
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(best.into_iter().fold(T::zero(), T::max))
}

/// Lattice centers on a cubic sublattice of stride `N/per_axis`.
pub fn lattice_centers<T: Real>(grid: &Grid<T>, per_axis: usize) -> Vec<Vec<i64>> {
    let n = grid.dim();
    let nn = grid.points_per_axis();
    let per = per_axis.clamp(1, nn);
    let stride = (nn / per) as i64;
    let total = per.pow(n as u32);
    (0..total)
        .map(|mut i| {
            (0..n)
                .map(|_| {
                    let j = (i % per) as i64;
                    i /= per;
                    j * stride
                })
                .collect()
        })
        .collect()
}

/// Which local quantity a sweep measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalQuantity {
    Field,
    /// `D^s u`, multiplier `|ξ|^s`.
    FractionalDerivative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalReport<T> {
    pub quantity: LocalQuantity,
    /// `(λ, max over family of local average / ||f||_p)`.
    pub rows: Vec<(T, T)>,
    pub fit: Option<LineFit<T>>,
    /// Exponent predicted by dilation.
    pub predicted_slope: T,
    /// Exponent as printed for the local estimate.
    pub stated_slope: T,
    pub pass: bool,
}

/// λ-sweep of the local `L²` average of `R f` (or `D^s R f`) over radii
/// `R = 2^j/√λ <= L/4` and a sublattice of centers.
pub fn local_estimate_sweep<T: Real>(
    grid: &Grid<T>,
    s: T,
    families: &[TestFamily<T>],
    p: T,
    lambdas: &[T],
    eps_rel: T,
    quantity: LocalQuantity,
    slope_tol: T,
) -> Result<LocalReport<T>> {
    let n = grid.dim();
    let nf: T = lit(n as f64);
    let two: T = lit(2.0);
    let centers = lattice_centers(grid, 4);
    let mut rows = Vec::new();
    for &lambda in lambdas {
        let params = ResolventParams::relaxed(n, s, lambda, eps_rel * lambda)?;
        params.check_grid(grid)?;
        let fields = generate_all(families, grid, params.wavenumber())?;
        let r0 = lambda.sqrt().recip();
        let mut best = T::zero();
        for f in &fields {
            let mut u = crate::resolvent::apply_resolvent(f, &params)?;
            if quantity == LocalQuantity::FractionalDerivative {
                u = crate::resolvent::apply_ds(&u, s)?;
            }
            let np = f.lp_norm(p)?;
            let mut radius = r0.max(grid.spacing());
            while radius <= grid.box_length() / lit(4.0) {
                best = best.max(safe_ratio(local_l2(&u, radius, &centers)?, np));
                radius = radius * two;
            }
        }
        rows.push((lambda, best));
    }
    let (xs, ys): (Vec<T>, Vec<T>) = rows.iter().copied().unzip();
    let fit = fit_loglog(&xs, &ys);
    let shift = match quantity {
        LocalQuantity::Field => T::zero(),
        LocalQuantity::FractionalDerivative => lit(0.5),
    };
    let predicted = (nf / p - (nf - T::one()) / two) / (two * s) - T::one() + shift;
    let stated = nf / two * (p.recip() - lit(0.5)) - lit(0.75) + shift;
    let pass = fit.map(|f| (f.slope - predicted).abs() <= slope_tol).unwrap_or(false);
    Ok(LocalReport {
        quantity,
        rows,
        fit,
        predicted_slope: predicted,
        stated_slope: stated,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedReport<T> {
    pub alpha: T,
    pub tau: T,
    /// Per member `||R f||_{∞,τ} / ||f||_{∞,α}`.
    pub ratios: Vec<T>,
    /// Empirical `κ_α`, the largest ratio.
    pub kappa: T,
    pub pass: bool,
}

impl<T: Real> WeightedReport<T> {
    /// `κ` agrees with a refined run within relative `tol`.
    pub fn stable_against(&self, finer: &Self, tol: T) -> bool {
        let hi = self.kappa.max(finer.kappa);
        (self.kappa - finer.kappa).abs() <= tol * hi
    }
}

/// Empirical weighted bound `L^∞_α → L^∞_{τ(α)}`.
pub fn weighted_estimate_check<T: Real>(
    grid: &Grid<T>,
    families: &[TestFamily<T>],
    alpha: T,
    params: &ResolventParams<T>,
    variant: TauVariant,
) -> Result<WeightedReport<T>> {
    let tau: T = lit(tau_alpha(grid.dim(), &to_f64(alpha), variant)?);
    for f in families {
        if let Some(d) = f.algebraic_decay() {
            if d < alpha {
                return Err(Error::Usage(format!(
                    "family decays like |x|^-{d}, slower than the weight exponent {alpha}"
                )));
            }
        }
    }
    params.check_grid(grid)?;
    let fields = generate_all(families, grid, params.wavenumber())?;
    let ratios: Vec<T> = fields
        .iter()
        .map(|f| -> Result<T> {
            let u = crate::resolvent::apply_resolvent(f, params)?;
            Ok(safe_ratio(u.weighted_sup_norm(tau)?, f.weighted_sup_norm(alpha)?))
        })
        .collect::<Result<_>>()?;
    let kappa = ratios.iter().copied().fold(T::zero(), T::max);
    Ok(WeightedReport {
        alpha,
        tau,
        ratios,
        kappa,
        pass: kappa.is_finite(),
    })
}

/// `D^s` as a vector: component `a` has multiplier `i ξ_a |ξ|^{s-1}`.
pub fn apply_vector_ds<T: Real>(u: &ComplexField<T>, s: T) -> Result<Vec<ComplexField<T>>> {
    u.expect_space(Space::Physical)?;
    let grid = u.grid();
    let uh = u.to_spectrum()?;
    let nyq = grid.nyquist();
    (0..grid.dim())
        .map(|a| {
            let m = ComplexField::from_spectral_fn(grid, |xi| {
                let r: T = xi.iter().map(|&v| v * v).sum::<T>().sqrt();
                if r == T::zero() || xi[a].abs() >= nyq {
                    Complex::new(T::zero(), T::zero())
                } else {
                    Complex::new(T::zero(), xi[a] * r.powf(s - T::one()))
                }
            });
            uh.multiply(&m)?.from_spectrum()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiationRow<T> {
    pub radius: T,
    /// `Σ_{|x| <= R} |D^s u - i k^s u x̂|² h^n`.
    pub residual: T,
    /// `residual / R`.
    pub density: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiationReport<T> {
    pub k: T,
    pub rows: Vec<RadiationRow<T>>,
    /// Every consecutive density ratio is at most `0.9`.
    pub density_decreasing: bool,
}

/// Radiation residual on balls about `center` (the box center by default).
pub fn radiation_residual<T: Real>(
    u: &ComplexField<T>,
    params: &ResolventParams<T>,
    radii: &[T],
    k_override: Option<T>,
    center: Option<&[T]>,
) -> Result<RadiationReport<T>> {
    u.expect_space(Space::Physical)?;
    let grid = u.grid();
    let half = grid.box_length() / lit(2.0);
    if let Some(&r) = radii.iter().find(|&&r| !(r > T::zero()) || r >= half) {
        return Err(Error::Domain(format!("radius {r} must lie in (0, L/2 = {half})")));
    }
    let k = k_override.unwrap_or_else(|| params.wavenumber());
    let ks = k.powf(params.s);
    let d = apply_vector_ds(u, params.s)?;
    let n = grid.dim();
    let c: Vec<T> = center.map(|c| c.to_vec()).unwrap_or_else(|| vec![T::zero(); n]);
    // pointwise residual density and distance
    let pts: Vec<(T, T)> = (0..grid.size())
        .into_par_iter()
        .map_init(
            || vec![T::zero(); n],
            |x, i| {
                grid.position(i, x);
                let r: T = x.iter().zip(&c).map(|(a, b)| (*a - *b) * (*a - *b)).sum::<T>().sqrt();
                let mut acc = T::zero();
                for a in 0..n {
                    let xhat = if r > T::zero() { (x[a] - c[a]) / r } else { T::zero() };
                    let z = d[a].values()[i] - Complex::new(T::zero(), ks * xhat) * u.values()[i];
                    acc = acc + z.norm_sqr();
                }
                (r, acc)
            },
        )
        .collect();
    let vol = grid.cell_volume();
    let rows: Vec<RadiationRow<T>> = radii
        .iter()
        .map(|&radius| {
            let residual = pts
                .iter()
                .filter(|(r, _)| *r <= radius)
                .map(|(_, v)| *v)
                .sum::<T>()
                * vol;
            RadiationRow {
                radius,
                residual,
                density: residual / radius,
            }
        })
        .collect();
    let limit: T = lit(0.9);
    let density_decreasing = rows.windows(2).all(|w| w[1].density <= limit * w[0].density);
    Ok(RadiationReport {
        k,
        rows,
        density_decreasing,
    })
}

/// `e^{± i k r}/r` mollified by `1 - e^{-r²}` at the origin and tapered
/// smoothly to zero over `[taper_start, taper_end]`.
pub fn spherical_wave<T: Real>(grid: &Grid<T>, k: T, outgoing: bool, taper_start: T, taper_end: T) -> ComplexField<T> {
    let sign = if outgoing { T::one() } else { -T::one() };
    ComplexField::from_fn(grid, |x| {
        let r: T = x.iter().map(|&a| a * a).sum::<T>().sqrt();
        let window = T::one() - smoothstep((r - taper_start) / (taper_end - taper_start));
        let radial = if r > T::zero() {
            (T::one() - (-r * r).exp()) / r
        } else {
            T::zero()
        };
        Complex::from_polar(radial * window, sign * k * r)
    })
}
