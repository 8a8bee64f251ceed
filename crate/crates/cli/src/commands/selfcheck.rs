use nmfa::analysis::network_profiles;
use nmfa::generators::{analytic_tau, binomial_measure, cantor_set_profile, toy_layered, ToyMode};
use nmfa::mfa::{
    mass_exponents, node_fractal_dimension, spectrum_from_profiles, FitWindow, MassFloor, QGrid,
    Spectrum, DEFAULT_R_MAX,
};
use nmfa::net_model::{build_nin, EdgeTransformParams, LayeredNetwork};
use nmfa::paths::{estimated_distances, exact_bounded_distances, DistanceParams, EstimatorParams};
use nmfa::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Check {
    name: &'static str,
    value: String,
    threshold: &'static str,
    pass: bool,
}

fn binomial_tau(grid: &QGrid) -> Result<Check> {
    let mut worst = 0.0f64;
    for p in [0.5, 0.3, 0.25, 0.1] {
        let table = binomial_measure(p, 12)?.partition_table(grid)?;
        let ex = mass_exponents(&table, FitWindow::default())?;
        for (&q, &t) in grid.values().iter().zip(&ex.tau) {
            let a = analytic_tau(p, q);
            let err = if a.abs() > 0.05 { ((t - a) / a).abs() / 0.02 } else { (t - a).abs() / 0.02 };
            worst = worst.max(err);
        }
    }
    Ok(Check {
        name: "binomial tau vs analytic",
        value: format!("{:.3e} of tolerance", worst),
        threshold: "< 1 (2% rel, 0.02 abs near 0)",
        pass: worst < 1.0,
    })
}

fn monofractal(grid: &QGrid) -> Result<Check> {
    let table = binomial_measure(0.5, 12)?.partition_table(grid)?;
    let s = Spectrum::from_exponents(&mass_exponents(&table, FitWindow::default())?, grid)?;
    let m = s.metrics();
    Ok(Check {
        name: "p = 0.5 collapses to a point",
        value: format!("width {:.2e}, alpha0 {:.4}", m.width, m.alpha0),
        threshold: "width < 0.05, |alpha0 - 1| <= 0.02",
        pass: m.width < 0.05 && (m.alpha0 - 1.0).abs() <= 0.02,
    })
}

fn cantor() -> Result<Check> {
    let profiles = cantor_set_profile(10)?;
    let d = node_fractal_dimension(&profiles[0])?;
    let target = 2f64.ln() / 3f64.ln();
    let rel = (d - target).abs() / target;
    Ok(Check {
        name: "Cantor dimension",
        value: format!("{d:.6} (rel err {rel:.2e})"),
        threshold: "ln2/ln3 within 5%",
        pass: rel <= 0.05,
    })
}

fn tau_zero(grid: &QGrid, floor: MassFloor) -> Result<Check> {
    let mut worst = 0.0f64;
    let i0 = grid.values().iter().position(|&q| q == 0.0).expect("grid holds 0");
    let dyadic = binomial_measure(0.25, 10)?.dyadic_profiles()?;
    let s = spectrum_from_profiles(&dyadic, grid, floor, FitWindow::default())?;
    worst = worst.max(s.tau[i0].abs());
    for seed in 0..3 {
        let net = toy_layered(3, 32, ToyMode::Random, seed)?;
        let nin = build_nin(&net, &EdgeTransformParams::default())?;
        let (set, _) = network_profiles(&nin, &DistanceParams::default(), None, DEFAULT_R_MAX)?;
        let s = spectrum_from_profiles(&set.profiles, grid, floor, FitWindow::default())?;
        worst = worst.max(s.tau[i0].abs());
    }
    Ok(Check {
        name: "tau(0) = 0 under the mass floor",
        value: format!("max |tau(0)| {worst:.2e}"),
        threshold: "<= 1e-10",
        pass: worst <= 1e-10,
    })
}

fn legendre(grid: &QGrid) -> Result<Check> {
    let table = binomial_measure(0.25, 12)?.partition_table(grid)?;
    let s = Spectrum::from_exponents(&mass_exponents(&table, FitWindow::default())?, grid)?;
    let identity = (0..s.q.len())
        .map(|k| (s.f_alpha[k] - (s.q[k] * s.alpha[k] - s.tau[k])).abs())
        .fold(0.0f64, f64::max);
    Ok(Check {
        name: "Legendre identity f = q alpha - tau",
        value: format!("max residual {identity:.1e}"),
        threshold: "<= 1e-12",
        pass: identity <= 1e-12,
    })
}

fn estimator() -> Result<Check> {
    let distance = DistanceParams {
        horizon: 3,
        ..DistanceParams::default()
    };
    let (mut close, mut total, mut bitwise) = (0usize, 0usize, true);
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = LayeredNetwork::new(
            (0..3)
                .map(|_| random_matrix(&mut rng))
                .collect(),
        )?;
        let nin = build_nin(&net, &EdgeTransformParams::default())?;
        let sources: Vec<_> = nin.nodes().collect();
        let exact = exact_bounded_distances(&nin, &sources, &distance)?;
        let full = estimated_distances(&nin, &sources, &distance, &EstimatorParams::new(32, seed))?;
        bitwise &= exact.pair_count() == full.pair_count()
            && exact
                .pairs()
                .zip(full.pairs())
                .all(|(a, b)| a.0 == b.0 && a.1 == b.1 && a.2.to_bits() == b.2.to_bits());
        let est = estimated_distances(&nin, &sources, &distance, &EstimatorParams::new(16, seed))?;
        for (s, t, d) in exact.pairs() {
            total += 1;
            if est.get(s, t).is_some_and(|e| (e - d).abs() <= 0.05 * d) {
                close += 1;
            }
        }
    }
    let frac = close as f64 / total as f64;
    Ok(Check {
        name: "path estimator vs exact",
        value: format!("full budget bitwise {bitwise}, {:.2}% within 5%", 100.0 * frac),
        threshold: "bitwise at full budget, >= 95% at budget 16",
        pass: bitwise && frac >= 0.95,
    })
}

fn random_matrix(rng: &mut ChaCha8Rng) -> ndarray::Array2<f64> {
    ndarray::Array2::from_shape_fn((32, 32), |_| rng.gen_range(-1.0..1.0))
}

/// Runs every check and prints the table; returns whether all passed.
pub fn run(floor: MassFloor) -> Result<bool> {
    let grid = QGrid::default();
    let checks = vec![
        binomial_tau(&grid)?,
        monofractal(&grid)?,
        cantor()?,
        tau_zero(&grid, floor)?,
        legendre(&grid)?,
        estimator()?,
    ];
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    println!("{:<width$}  {:<6}  {:<48}  threshold", "check", "result", "value");
    for c in &checks {
        println!(
            "{:<width$}  {:<6}  {:<48}  {}",
            c.name,
            if c.pass { "PASS" } else { "FAIL" },
            c.value,
            c.threshold
        );
    }
    let all = checks.iter().all(|c| c.pass);
    println!("{}", if all { "all checks passed" } else { "some checks FAILED" });
    Ok(all)
}
