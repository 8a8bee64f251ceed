//! Box-growing mass profiles, the partition function, mass exponents and the
//! Legendre spectrum.
//!
//! Each observer node is treated as a box whose radius grows over the rounded
//! distances to its neighbours. The cumulative neighbour count `N_i(r)` over
//! the total `T_i` gives a mass `p_i(r)`, and `Z_q(r) = sum_i p_i(r)^q`. The
//! mass exponent `tau(q)` is the log-log slope of `Z_q(r)` against `r / d`,
//! where `d` is the largest radius of the whole observer set; `alpha = dtau/dq`
//! and `f = q * alpha - tau` complete the spectrum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net_model::NodeId;
use crate::stats::{linfit, FitResult};

pub const DEFAULT_R_MAX: u32 = 256;

/// Cumulative neighbour counts of one observer over its rounded radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassProfile {
    observer: NodeId,
    radii: Vec<u32>,
    counts: Vec<u64>,
}

impl MassProfile {
    pub fn new(observer: NodeId, radii: Vec<u32>, counts: Vec<u64>) -> Result<Self> {
        if radii.is_empty() || radii.len() != counts.len() {
            return Err(Error::Structural(format!(
                "profile of {observer}: {} radii and {} counts",
                radii.len(),
                counts.len()
            )));
        }
        if radii[0] == 0 || radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Data(format!(
                "profile of {observer}: radii must be positive and strictly ascending"
            )));
        }
        if counts[0] == 0 || counts.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Data(format!(
                "profile of {observer}: counts must be positive and non-decreasing"
            )));
        }
        Ok(MassProfile {
            observer,
            radii,
            counts,
        })
    }

    pub fn observer(&self) -> NodeId {
        self.observer
    }

    pub fn radii(&self) -> &[u32] {
        &self.radii
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        *self.counts.last().expect("profiles are never empty")
    }

    pub fn max_radius(&self) -> u32 {
        *self.radii.last().expect("profiles are never empty")
    }

    /// Count at the largest stored radius not above `r`, or 0 below the first radius.
    pub fn count_at(&self, r: u32) -> u64 {
        match self.radii.partition_point(|&x| x <= r) {
            0 => 0,
            k => self.counts[k - 1],
        }
    }
}

/// Rounds a distance to a box radius: nearest integer (halves up), at least 1, at most `r_max`.
pub fn round_radius(d: f64, r_max: u32) -> u32 {
    let r = (d + 0.5).floor();
    if r >= f64::from(r_max) {
        r_max
    } else if r < 1.0 {
        1
    } else {
        r as u32
    }
}

/// Profiles built from neighbour-distance lists, plus the observers that had no neighbours.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProfileSet {
    pub profiles: Vec<MassProfile>,
    pub dropped: Vec<NodeId>,
}

pub fn mass_profiles(lists: &[(NodeId, Vec<f64>)], r_max: u32) -> Result<ProfileSet> {
    if r_max < 1 {
        return Err(Error::InvalidParameter("r_max must be at least 1".into()));
    }
    let mut set = ProfileSet::default();
    for (observer, distances) in lists {
        if distances.is_empty() {
            log::debug!("observer {observer} has no neighbours and is dropped");
            set.dropped.push(*observer);
            continue;
        }
        if let Some(bad) = distances.iter().find(|d| !(**d > 0.0) || !d.is_finite()) {
            return Err(Error::Data(format!(
                "observer {observer}: distance {bad} is not a positive finite number"
            )));
        }
        if distances.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Data(format!(
                "observer {observer}: distances are not sorted"
            )));
        }
        let mut radii: Vec<u32> = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        for (k, &d) in distances.iter().enumerate() {
            let r = round_radius(d, r_max);
            match radii.last() {
                Some(&last) if last == r => *counts.last_mut().expect("paired") = k as u64 + 1,
                _ => {
                    radii.push(r);
                    counts.push(k as u64 + 1);
                }
            }
        }
        set.profiles.push(MassProfile::new(*observer, radii, counts)?);
    }
    Ok(set)
}

/// Least-squares slope of `ln N(r)` against `ln r` over the profile's radii.
pub fn node_fractal_dimension(profile: &MassProfile) -> Result<f64> {
    if profile.radii.len() < 2 {
        return Err(Error::Degenerate(format!(
            "profile of {} has a single radius; its dimension is undefined",
            profile.observer
        )));
    }
    let xs: Vec<f64> = profile.radii.iter().map(|&r| f64::from(r).ln()).collect();
    let ys: Vec<f64> = profile.counts.iter().map(|&c| (c as f64).ln()).collect();
    Ok(linfit(&xs, &ys)?.slope)
}

/// Ascending grid of moment orders `q`; always contains 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QGrid {
    values: Vec<f64>,
}

impl QGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter(
                "q-grid must be strictly ascending".into(),
            ));
        }
        if !values.contains(&0.0) {
            return Err(Error::InvalidParameter("q-grid must contain 0".into()));
        }
        Ok(QGrid { values })
    }

    /// `min, min + step, ..., max`, generated as integer multiples of `step` so that 0 is hit exactly.
    pub fn uniform(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() || !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "q-grid needs finite bounds and a positive step (min {min}, max {max}, step {step})"
            )));
        }
        if !(min <= 0.0 && max >= 0.0 && min < max) {
            return Err(Error::InvalidParameter(format!(
                "q-grid [{min}, {max}] must straddle 0"
            )));
        }
        let lo = min / step;
        let hi = max / step;
        if (lo - lo.round()).abs() > 1e-9 || (hi - hi.round()).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "q-grid bounds {min} and {max} are not multiples of step {step}"
            )));
        }
        let values = (lo.round() as i64..=hi.round() as i64)
            .map(|i| i as f64 * step)
            .collect();
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl Default for QGrid {
    fn default() -> Self {
        QGrid::uniform(-5.0, 5.0, 0.25).expect("default grid is valid")
    }
}

/// How observers with no neighbour inside a radius contribute to `Z_q(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MassFloor {
    /// Counts are floored at 1, so every observer contributes at every radius.
    #[default]
    On,
    /// Observers with zero count at a radius are left out of that radius' sum.
    Off,
}

/// `Z_q(r)` for every `q` of a grid over a shared ascending radius list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionTable {
    radii: Vec<u32>,
    max_radius: u32,
    q: Vec<f64>,
    // z[k][j] = Z_{q[k]}(radii[j])
    z: Vec<Vec<f64>>,
}

impl PartitionTable {
    pub fn new(radii: Vec<u32>, max_radius: u32, q: Vec<f64>, z: Vec<Vec<f64>>) -> Result<Self> {
        if radii.is_empty() || radii.windows(2).any(|w| w[0] >= w[1]) || radii[0] == 0 {
            return Err(Error::Structural(
                "partition radii must be positive and strictly ascending".into(),
            ));
        }
        if max_radius < *radii.last().expect("non-empty") {
            return Err(Error::Structural(format!(
                "maximum radius {max_radius} is below the largest stored radius"
            )));
        }
        if z.len() != q.len() || z.iter().any(|row| row.len() != radii.len()) {
            return Err(Error::Structural("partition values misaligned with grid".into()));
        }
        if z.iter().flatten().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Data("partition values must be finite and non-negative".into()));
        }
        Ok(PartitionTable {
            radii,
            max_radius,
            q,
            z,
        })
    }

    pub fn radii(&self) -> &[u32] {
        &self.radii
    }

    pub fn max_radius(&self) -> u32 {
        self.max_radius
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// `Z_q(r)` over the radii for the `k`-th grid point.
    pub fn values(&self, k: usize) -> &[f64] {
        &self.z[k]
    }
}

pub fn partition_function(
    profiles: &[MassProfile],
    grid: &QGrid,
    floor: MassFloor,
) -> Result<PartitionTable> {
    if profiles.is_empty() {
        return Err(Error::Degenerate("partition function of an empty observer set".into()));
    }
    let mut radii: Vec<u32> = profiles.iter().flat_map(|p| p.radii.iter().copied()).collect();
    radii.sort_unstable();
    radii.dedup();
    let max_radius = *radii.last().expect("profiles are never empty");

    // masses[i][j] = p_i(radii[j]); None marks a zero count when the floor is off
    let masses: Vec<Vec<Option<f64>>> = profiles
        .iter()
        .map(|p| {
            let total = p.total() as f64;
            radii
                .iter()
                .map(|&r| match (p.count_at(r), floor) {
                    (0, MassFloor::Off) => None,
                    (c, _) => Some(c.max(1) as f64 / total),
                })
                .collect()
        })
        .collect();

    let z = grid
        .values()
        .iter()
        .map(|&q| {
            (0..radii.len())
                .map(|j| {
                    masses
                        .iter()
                        .filter_map(|m| m[j])
                        .map(|p| p.powf(q))
                        .sum::<f64>()
                })
                .collect()
        })
        .collect();
    PartitionTable::new(radii, max_radius, grid.values().to_vec(), z)
}

/// Mass exponents with the regression behind each one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassExponents {
    pub q: Vec<f64>,
    pub tau: Vec<f64>,
    pub fits: Vec<FitResult>,
}

/// Inclusive radius range used by the `tau` regressions; `None` uses every radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FitWindow {
    pub r_min: Option<u32>,
    pub r_max: Option<u32>,
}

impl FitWindow {
    fn contains(&self, r: u32) -> bool {
        self.r_min.map_or(true, |lo| r >= lo) && self.r_max.map_or(true, |hi| r <= hi)
    }
}

/// `tau(q)` as the least-squares slope of `ln Z_q(r)` on `ln(r / d)`.
pub fn mass_exponents(table: &PartitionTable, window: FitWindow) -> Result<MassExponents> {
    let d = f64::from(table.max_radius);
    let mut tau = Vec::with_capacity(table.q.len());
    let mut fits = Vec::with_capacity(table.q.len());
    for (k, &q) in table.q.iter().enumerate() {
        let (xs, ys): (Vec<f64>, Vec<f64>) = table
            .radii
            .iter()
            .zip(&table.z[k])
            .filter(|&(&r, &z)| window.contains(r) && z > 0.0)
            .map(|(&r, &z)| ((f64::from(r) / d).ln(), z.ln()))
            .unzip();
        let fit = linfit(&xs, &ys).map_err(|e| match e {
            Error::Degenerate(m) => Error::Degenerate(format!("tau({q}): {m}")),
            other => other,
        })?;
        tau.push(fit.slope);
        fits.push(fit);
    }
    Ok(MassExponents {
        q: table.q.clone(),
        tau,
        fits,
    })
}

/// Singularity spectrum on a q-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub q: Vec<f64>,
    pub tau: Vec<f64>,
    pub alpha: Vec<f64>,
    pub f_alpha: Vec<f64>,
    /// R^2 of each `tau` regression; `None` for flat ordinates or when `tau` was supplied directly.
    pub r2: Vec<Option<f64>>,
}

/// First derivative on a possibly non-uniform grid: central inside, one-sided at the ends.
pub fn derivative(xs: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
    let n = xs.len();
    if n != ys.len() {
        return Err(Error::Structural("derivative: misaligned arrays".into()));
    }
    if n < 3 {
        return Err(Error::Degenerate(format!(
            "derivative needs at least 3 grid points, got {n}"
        )));
    }
    Ok((0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                i if i == n - 1 => (n - 2, n - 1),
                i => (i - 1, i + 1),
            };
            (ys[b] - ys[a]) / (xs[b] - xs[a])
        })
        .collect())
}

pub fn legendre_spectrum(tau: &[f64], grid: &QGrid) -> Result<Spectrum> {
    let q = grid.values();
    if tau.len() != q.len() {
        return Err(Error::Structural(format!(
            "{} tau values for a grid of {}",
            tau.len(),
            q.len()
        )));
    }
    let alpha = derivative(q, tau)?;
    let f_alpha = q
        .iter()
        .zip(&alpha)
        .zip(tau)
        .map(|((q, a), t)| q * a - t)
        .collect();
    Ok(Spectrum {
        q: q.to_vec(),
        tau: tau.to_vec(),
        alpha,
        f_alpha,
        r2: vec![None; q.len()],
    })
}

impl Spectrum {
    pub fn from_exponents(exponents: &MassExponents, grid: &QGrid) -> Result<Self> {
        let mut s = legendre_spectrum(&exponents.tau, grid)?;
        s.r2 = exponents.fits.iter().map(|f| f.r2).collect();
        Ok(s)
    }

    pub fn metrics(&self) -> SpectrumMetrics {
        spectrum_metrics(&self.q, &self.alpha, &self.f_alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMetrics {
    pub alpha0: f64,
    pub width: f64,
    /// Grid point at which `f` peaks.
    pub q_at_alpha0: f64,
}

/// `alpha0` is `alpha` where `f` is largest (first on ties); width is `max alpha - min alpha`.
pub fn spectrum_metrics(q: &[f64], alpha: &[f64], f_alpha: &[f64]) -> SpectrumMetrics {
    let mut peak = 0;
    for (k, &f) in f_alpha.iter().enumerate() {
        if f > f_alpha[peak] {
            peak = k;
        }
    }
    let lo = alpha.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = alpha.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    SpectrumMetrics {
        alpha0: alpha.get(peak).copied().unwrap_or(f64::NAN),
        width: if alpha.is_empty() { 0.0 } else { (hi - lo).max(0.0) },
        q_at_alpha0: q.get(peak).copied().unwrap_or(f64::NAN),
    }
}

/// `D_q = tau(q) / (q - 1)`, with the limit `dtau/dq` at `q = 1`.
pub fn generalized_dimensions(tau: &[f64], grid: &QGrid) -> Result<Vec<f64>> {
    let q = grid.values();
    if tau.len() != q.len() {
        return Err(Error::Structural("tau misaligned with grid".into()));
    }
    let slope = derivative(q, tau)?;
    Ok(q.iter()
        .enumerate()
        .map(|(k, &qk)| {
            if qk == 1.0 {
                slope[k]
            } else {
                tau[k] / (qk - 1.0)
            }
        })
        .collect())
}

/// Full chain from profiles to a spectrum.
pub fn spectrum_from_profiles(
    profiles: &[MassProfile],
    grid: &QGrid,
    floor: MassFloor,
    window: FitWindow,
) -> Result<Spectrum> {
    let table = partition_function(profiles, grid, floor)?;
    let exponents = mass_exponents(&table, window)?;
    Spectrum::from_exponents(&exponents, grid)
}
