//! Extraction by a moving focused beam.
//!
//! Along the extraction axis the target atom sees the confining beam and a
//! focused beam displaced by `a`:
//!
//! ```text
//! V(y) = −V_c exp(−2y²/σ_c²) − V_f exp(−2(y − a)²/σ_f²)
//! ```
//!
//! Lengths are in units of `σ_c` and energies in `ħ²/(2mσ_c²)`, so the
//! Hamiltonian is `−d²/dy² + V(y)` (ħ = 1, m = 1/2) and the time unit is
//! `2mσ_c²/ħ`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{eigh_small, linspace, solve_scalar, SymmetricMatrix};
use crate::units::{UnitSystem, HBAR};

const MASS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleGaussianPotential {
    pub confine_depth: f64,
    pub focus_depth: f64,
    pub confine_waist: f64,
    pub focus_waist: f64,
    pub displacement: f64,
}

impl DoubleGaussianPotential {
    pub fn validate(&self) -> Result<()> {
        if !(self.confine_depth >= 0.0) || !(self.focus_depth >= 0.0) {
            return Err(Error::Domain("beam depths must be non-negative".into()));
        }
        if !(self.confine_waist > 0.0) || !(self.focus_waist > 0.0) {
            return Err(Error::Domain("beam waists must be positive".into()));
        }
        Ok(())
    }

    pub fn at(self, displacement: f64) -> Self {
        Self { displacement, ..self }
    }

    fn confine(&self, y: f64) -> f64 {
        -self.confine_depth * (-2.0 * (y / self.confine_waist).powi(2)).exp()
    }

    fn focus(&self, y: f64) -> f64 {
        let d = y - self.displacement;
        -self.focus_depth * (-2.0 * (d / self.focus_waist).powi(2)).exp()
    }

    /// `∂V/∂y`
    pub fn slope(&self, y: f64) -> f64 {
        let sc2 = self.confine_waist.powi(2);
        let sf2 = self.focus_waist.powi(2);
        -4.0 * y / sc2 * self.confine(y) - 4.0 * (y - self.displacement) / sf2 * self.focus(y)
    }

    /// `∂²V/∂y²`
    pub fn curvature(&self, y: f64) -> f64 {
        let term = |g: f64, d: f64, s2: f64| g * (16.0 * d * d / (s2 * s2) - 4.0 / s2);
        term(self.confine(y), y, self.confine_waist.powi(2))
            + term(self.focus(y), y - self.displacement, self.focus_waist.powi(2))
    }

    /// `∂V/∂a`
    pub fn displacement_derivative(&self, y: f64) -> f64 {
        4.0 * (y - self.displacement) / self.focus_waist.powi(2) * self.focus(y)
    }
}

pub fn potential(p: &DoubleGaussianPotential, y: f64) -> f64 {
    p.confine(y) + p.focus(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrackedMinimum {
    pub displacement: f64,
    pub position: f64,
    pub curvature: f64,
}

/// Follows the local minimum of `V` that starts at `y = 0` for the first
/// displacement in `path` and stays attached to the focus well as `a` grows.
///
/// At each step the minimum is the root of `∂V/∂y` with positive curvature
/// closest to the previous position, searched within `±search_radius`.
pub fn track_minimum(p: &DoubleGaussianPotential, path: &[f64]) -> Result<Vec<TrackedMinimum>> {
    p.validate()?;
    if path.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("displacement path must be non-decreasing".into()));
    }
    let search_radius: f64 = 0.3;
    let scan_step: f64 = 2e-3;
    let mut previous = 0.0;
    let mut last_a = path.first().copied().unwrap_or(0.0);
    let mut out = Vec::with_capacity(path.len());
    for &a in path {
        let q = p.at(a);
        let count = (2.0 * search_radius / scan_step).round() as usize;
        let mut best: Option<f64> = None;
        let mut lo = previous - search_radius;
        let mut f_lo = q.slope(lo);
        for k in 1..=count {
            let hi = previous - search_radius + k as f64 * scan_step;
            let f_hi = q.slope(hi);
            if f_lo <= 0.0 && f_hi > 0.0 {
                let root = if f_lo == 0.0 {
                    lo
                } else {
                    solve_scalar(|y| q.slope(y), (lo, hi), 1e-13)?
                };
                if q.curvature(root) > 0.0 && best.is_none_or(|b| (root - previous).abs() < (b - previous).abs()) {
                    best = Some(root);
                }
            }
            lo = hi;
            f_lo = f_hi;
        }
        let Some(y) = best else {
            return Err(Error::Tracking { last_a });
        };
        out.push(TrackedMinimum {
            displacement: a,
            position: y,
            curvature: q.curvature(y),
        });
        previous = y;
        last_a = a;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasisExpansion {
    pub center: f64,
    /// `m ω / ħ`
    pub width_parameter: f64,
    pub size: usize,
    pub hamiltonian: SymmetricMatrix,
    /// Quadrature nodes and the basis functions evaluated on them.
    #[serde(skip)]
    grid: QuadratureGrid,
}

#[derive(Debug, Clone, PartialEq, Default)]
struct QuadratureGrid {
    nodes: Vec<f64>,
    weight: f64,
    /// `functions[n][k] = Ψ_n(nodes[k])`
    functions: Vec<Vec<f64>>,
}

impl QuadratureGrid {
    fn matrix_element(&self, n: usize, m: usize, f: &[f64]) -> f64 {
        let (a, b) = (&self.functions[n], &self.functions[m]);
        self.weight * a.iter().zip(b).zip(f).map(|((x, y), z)| x * y * z).sum::<f64>()
    }
}

const GRID_POINTS: usize = 2001;

/// Harmonic-oscillator functions `Ψ_n` with width parameter `κ` centered at
/// `center`, by the stable three-term recurrence.
fn oscillator_functions(center: f64, kappa: f64, size: usize, nodes: &[f64]) -> Vec<Vec<f64>> {
    let norm = (kappa / PI).powf(0.25);
    let mut out = vec![vec![0.0; nodes.len()]; size];
    for (k, &y) in nodes.iter().enumerate() {
        let x = kappa.sqrt() * (y - center);
        let mut prev = 0.0;
        let mut cur = norm * (-0.5 * x * x).exp();
        for (n, row) in out.iter_mut().enumerate() {
            row[k] = cur;
            let next = (2.0 / (n as f64 + 1.0)).sqrt() * x * cur - (n as f64 / (n as f64 + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
        }
    }
    out
}

/// Hamiltonian matrix in the oscillator basis fitted to the local curvature
/// at `center`: the oscillator part is diagonal, `(n + ½)ω`, and the
/// remainder `V − ½mω²(y − y₀)²` is integrated on a uniform grid.
pub fn local_basis(p: &DoubleGaussianPotential, center: f64, size: usize) -> Result<BasisExpansion> {
    p.validate()?;
    if size == 0 {
        return Err(Error::Domain("basis size must be positive".into()));
    }
    let curvature = p.curvature(center);
    if !(curvature > 0.0) {
        return Err(Error::Domain(format!(
            "potential is not convex at y = {center} (V'' = {curvature})"
        )));
    }
    let omega = (curvature / MASS).sqrt();
    let kappa = MASS * omega;
    let half_width = (((2 * size + 1) as f64).sqrt() + 10.0) / kappa.sqrt();
    let nodes = linspace(center - half_width, center + half_width, GRID_POINTS);
    let weight = nodes[1] - nodes[0];
    let functions = oscillator_functions(center, kappa, size, &nodes);
    let grid = QuadratureGrid {
        nodes,
        weight,
        functions,
    };
    let remainder: Vec<f64> = grid
        .nodes
        .iter()
        .map(|&y| potential(p, y) - 0.5 * MASS * omega * omega * (y - center).powi(2))
        .collect();
    let hamiltonian = SymmetricMatrix::from_fn(size, |n, m| {
        let diag = if n == m { (n as f64 + 0.5) * omega } else { 0.0 };
        diag + grid.matrix_element(n, m, &remainder)
    });
    Ok(BasisExpansion {
        center,
        width_parameter: kappa,
        size,
        hamiltonian,
        grid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapElement {
    pub displacement: f64,
    pub position: f64,
    /// `E_j − E_0` for the lowest state `j` coupled to the ground state.
    pub gap: f64,
    /// `|⟨φ_j|∂H/∂a|φ_0⟩|`
    pub element: f64,
    pub coupled_state: usize,
    pub ground_energy: f64,
}

/// Gap to the lowest state coupled to the ground state by `∂V/∂a`, and the
/// coupling itself, in the basis centered on the tracked minimum.
pub fn gap_and_element(p: &DoubleGaussianPotential, minimum: f64, size: usize) -> Result<GapElement> {
    let basis = local_basis(p, minimum, size)?;
    let eig = eigh_small(&basis.hamiltonian);
    let grid = &basis.grid;
    let coupling: Vec<f64> = grid.nodes.iter().map(|&y| p.displacement_derivative(y)).collect();
    let dv = SymmetricMatrix::from_fn(size, |n, m| grid.matrix_element(n, m, &coupling));
    let elements: Vec<f64> = eig
        .vectors
        .iter()
        .map(|v| dv.bilinear(v, &eig.vectors[0]).abs())
        .collect();
    let largest = elements[1..].iter().copied().fold(0.0, f64::max);
    let j = (1..size).find(|&j| elements[j] > 1e-6 * largest).ok_or_else(|| {
        Error::Divergence(format!(
            "no state couples to the ground state at a = {}",
            p.displacement
        ))
    })?;
    Ok(GapElement {
        displacement: p.displacement,
        position: minimum,
        gap: eig.values[j] - eig.values[0],
        element: elements[j],
        coupled_state: j,
        ground_energy: eig.values[0],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MovingSchedule {
    pub final_displacement: f64,
    pub adiabaticity: f64,
    /// Ordered by displacement.
    pub profile: Vec<GapElement>,
}

/// Gap and coupling on `points` uniform displacements in `[0, a_f]`.
/// Minimum tracking runs sequentially; the diagonalizations run in parallel.
pub fn build_profile(
    p: &DoubleGaussianPotential,
    final_displacement: f64,
    points: usize,
    basis_size: usize,
) -> Result<Vec<GapElement>> {
    if !(final_displacement >= 0.0) {
        return Err(Error::Domain(format!(
            "final displacement must be non-negative, got {final_displacement}"
        )));
    }
    let path = linspace(0.0, final_displacement, points.max(2));
    let minima = track_minimum(p, &path)?;
    minima
        .par_iter()
        .map(|m| gap_and_element(&p.at(m.displacement), m.position, basis_size))
        .collect()
}

fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MovingTime {
    /// `2mσ_c²/ħ`
    pub duration: f64,
    /// Relative change from halving the sampling.
    pub refinement_change: f64,
}

/// `T = ∫ |⟨φ_e|∂H/∂a|φ_g⟩| / (ξ̄ ΔE_g²) da` by the trapezoid rule, checked
/// against the same rule on every other sample.
pub fn moving_time(schedule: &MovingSchedule) -> Result<MovingTime> {
    if !(schedule.adiabaticity > 0.0) {
        return Err(Error::Domain(format!(
            "adiabaticity must be positive, got {}",
            schedule.adiabaticity
        )));
    }
    if schedule.final_displacement == 0.0 {
        return Ok(MovingTime {
            duration: 0.0,
            refinement_change: 0.0,
        });
    }
    let prof = &schedule.profile;
    if prof.len() < 3 {
        return Err(Error::Unresolved(
            "moving-time profile needs at least three samples".into(),
        ));
    }
    if let Some(bad) = prof.iter().find(|g| !(g.gap > 0.0) || !g.gap.is_finite()) {
        return Err(Error::Divergence(format!(
            "gap {} at a = {}",
            bad.gap, bad.displacement
        )));
    }
    let xs: Vec<f64> = prof.iter().map(|g| g.displacement).collect();
    let ys: Vec<f64> = prof
        .iter()
        .map(|g| g.element / (schedule.adiabaticity * g.gap * g.gap))
        .collect();
    let fine = trapezoid(&xs, &ys);
    let coarse_x: Vec<f64> = xs.iter().step_by(2).copied().collect();
    let coarse_y: Vec<f64> = ys.iter().step_by(2).copied().collect();
    let mut coarse = trapezoid(&coarse_x, &coarse_y);
    if (xs.len() - 1) % 2 == 1 {
        let n = xs.len();
        coarse += 0.5 * (xs[n - 1] - xs[n - 2]) * (ys[n - 1] + ys[n - 2]);
    }
    let change = ((fine - coarse) / fine).abs();
    if change > 0.01 {
        return Err(Error::Unresolved(format!(
            "halving the displacement grid changes T by {:.2}%",
            100.0 * change
        )));
    }
    Ok(MovingTime {
        duration: fine,
        refinement_change: change,
    })
}

/// Scattering model for the focused beam far detuned from the excited state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatteringModel {
    /// Effective linewidth, 1/s.
    pub effective_linewidth: f64,
    /// Detuning of the focused beam, rad/s.
    pub detuning: f64,
}

/// Effective linewidth for which a trap of depth `depth` (J) held for
/// `duration` (s) at `detuning` (rad/s) scatters with `probability`:
/// `Γ_eff = P ħ|Δ₀| / (V T)`.
pub fn calibrate_effective_linewidth(probability: f64, duration: f64, depth: f64, detuning: f64) -> Result<f64> {
    if !(probability >= 0.0) || !(duration > 0.0) || !(depth > 0.0) || detuning == 0.0 {
        return Err(Error::Domain(
            "calibration needs positive duration and depth and a nonzero detuning".into(),
        ));
    }
    Ok(probability * HBAR * detuning.abs() / (depth * duration))
}

/// `ξ̄` whose excitation ceiling `4ξ̄²` equals `probability`.
pub fn calibrate_adiabaticity(probability: f64) -> Result<f64> {
    if !(probability > 0.0 && probability < 0.04) {
        return Err(Error::Domain(format!(
            "excitation target must lie in (0, 0.04), got {probability}"
        )));
    }
    Ok((probability / 4.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MoveErrors {
    pub excitation: f64,
    pub scattering: f64,
}

/// Excitation ceiling `4ξ̄²` and scattering `Γ_eff V T / (ħ|Δ₀|)` for a
/// move of `duration` (s) in a trap of depth `depth` (J).
pub fn excitation_and_scattering(
    adiabaticity: f64,
    duration: f64,
    depth: f64,
    model: Option<&ScatteringModel>,
) -> Result<MoveErrors> {
    let model = model.ok_or_else(|| Error::config("speedup.scattering", "no scattering model configured"))?;
    if model.detuning == 0.0 || !(model.effective_linewidth >= 0.0) {
        return Err(Error::config(
            "speedup.scattering",
            "needs a nonzero detuning and a non-negative linewidth",
        ));
    }
    if !(adiabaticity >= 0.0) || !(duration >= 0.0) || !(depth >= 0.0) {
        return Err(Error::Domain(
            "adiabaticity, duration and depth must be non-negative".into(),
        ));
    }
    Ok(MoveErrors {
        excitation: (4.0 * adiabaticity * adiabaticity).min(1.0),
        scattering: (model.effective_linewidth * depth * duration / (HBAR * model.detuning.abs())).min(1.0),
    })
}

/// `1 − (1 − f)^cycles`
pub fn cycle_yield(cycles: u32, per_cycle_fraction: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&per_cycle_fraction) {
        return Err(Error::Domain(format!(
            "per-cycle fraction must lie in [0, 1], got {per_cycle_fraction}"
        )));
    }
    Ok(1.0 - (1.0 - per_cycle_fraction).powi(cycles as i32))
}

/// Units of the move: length `σ_c`, energy `ħ²/(2mσ_c²)`.
pub fn move_units(mass: f64, confine_waist: f64) -> Result<UnitSystem> {
    UnitSystem::kinetic(mass, confine_waist)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_potential() -> DoubleGaussianPotential {
        DoubleGaussianPotential {
            confine_depth: 400.0,
            focus_depth: 560.0,
            confine_waist: 1.0,
            focus_waist: 0.5,
            displacement: 0.0,
        }
    }

    /// Eigenvalues of `−d²/dy² + V` on a uniform grid with Dirichlet ends,
    /// counted by Sturm sequences of the tridiagonal matrix.
    fn finite_difference_levels(v: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize, levels: usize) -> Vec<f64> {
        let h = (hi - lo) / (n + 1) as f64;
        let diag: Vec<f64> = (1..=n).map(|i| 2.0 / (h * h) + v(lo + i as f64 * h)).collect();
        let off = -1.0 / (h * h);
        let below = |sigma: f64| {
            let mut count = 0;
            let mut d = 1.0;
            for (i, &a) in diag.iter().enumerate() {
                d = a - sigma - if i == 0 { 0.0 } else { off * off / d };
                if d == 0.0 {
                    d = 1e-300;
                }
                if d < 0.0 {
                    count += 1;
                }
            }
            count
        };
        (0..levels)
            .map(|k| {
                let (mut a, mut b) = (-2000.0, 2000.0);
                for _ in 0..100 {
                    let m = 0.5 * (a + b);
                    if below(m) > k {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                0.5 * (a + b)
            })
            .collect()
    }

    #[test]
    fn potential_limits() {
        let p = reference_potential();
        assert_eq!(potential(&p, 0.0), -960.0);
        let single = DoubleGaussianPotential { focus_depth: 0.0, ..p };
        let m = track_minimum(&single, &[0.0]).unwrap();
        assert_eq!(m[0].position, 0.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = reference_potential().at(0.7);
        let h = 1e-5;
        for y in [-0.4, 0.1, 0.5, 0.9] {
            let fd = (potential(&p, y + h) - potential(&p, y - h)) / (2.0 * h);
            assert!((p.slope(y) - fd).abs() < 1e-5 * fd.abs().max(1.0));
            let fd2 = (p.slope(y + h) - p.slope(y - h)) / (2.0 * h);
            assert!((p.curvature(y) - fd2).abs() < 1e-5 * fd2.abs().max(1.0));
            let fda = (potential(&p.at(0.7 + h), y) - potential(&p.at(0.7 - h), y)) / (2.0 * h);
            assert!((p.displacement_derivative(y) - fda).abs() < 1e-5 * fda.abs().max(1.0));
        }
    }

    #[test]
    fn tracking_follows_focus_well() {
        let p = reference_potential();
        let path = linspace(0.0, 3.0, 601);
        let minima = track_minimum(&p, &path).unwrap();
        assert_eq!(minima[0].position, 0.0);
        assert!((minima.last().unwrap().position - 3.0).abs() < 1e-3);
        for w in minima.windows(2) {
            assert!((w[1].position - w[0].position).abs() < 0.05);
        }

        let q = p.at(0.8);
        let tracked = minima.iter().find(|m| (m.displacement - 0.8).abs() < 1e-12).unwrap();
        // dense scan of the focus-well branch: the well closest to a
        let (mut best, mut best_v) = (0.0, f64::INFINITY);
        for i in 0..=400_000 {
            let y = 0.4 + 0.8 * i as f64 / 400_000.0;
            if potential(&q, y) < best_v {
                best_v = potential(&q, y);
                best = y;
            }
        }
        assert!((tracked.position - best).abs() < 1e-5, "{} vs {best}", tracked.position);
    }

    #[test]
    fn harmonic_potential_is_diagonal() {
        let omega: f64 = 20.0;
        let size = 8;
        let kappa = MASS * omega;
        let half_width = (((2 * size + 1) as f64).sqrt() + 10.0) / kappa.sqrt();
        let nodes = linspace(-half_width, half_width, GRID_POINTS);
        let w = nodes[1] - nodes[0];
        let f = oscillator_functions(0.0, kappa, size, &nodes);
        for n in 0..size {
            for m in 0..size {
                let overlap: f64 = w * f[n].iter().zip(&f[m]).map(|(a, b)| a * b).sum::<f64>();
                let expect = if n == m { 1.0 } else { 0.0 };
                assert!((overlap - expect).abs() < 1e-10);
            }
        }
        let zero = DoubleGaussianPotential {
            confine_depth: 1.0,
            focus_depth: 0.0,
            confine_waist: 1e6,
            focus_waist: 1.0,
            displacement: 0.0,
        };
        let b = local_basis(&zero, 0.0, size).unwrap();
        // a very wide Gaussian is harmonic up to the constant −1 over the basis extent
        let om = b.width_parameter / MASS;
        for n in 0..size {
            assert!((b.hamiltonian.get(n, n) - ((n as f64 + 0.5) * om - 1.0)).abs() < 1e-10);
            for m in 0..size {
                assert_eq!(b.hamiltonian.get(n, m), b.hamiltonian.get(m, n));
                if n != m {
                    assert!(b.hamiltonian.get(n, m).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn bound_state_matches_finite_differences() {
        let p = reference_potential().at(0.2);
        let m = track_minimum(&p, &[0.0, 0.1, 0.2]).unwrap()[2];
        let g = gap_and_element(&p, m.position, 11).unwrap();
        assert!(g.ground_energy < -400.0);
        assert!(g.gap > 0.0);
        let fd = finite_difference_levels(|y| potential(&p, y), -3.0, 3.5, 6000, 2);
        assert!(
            (g.ground_energy - fd[0]).abs() < 0.5,
            "{} vs {}",
            g.ground_energy,
            fd[0]
        );
    }

    #[test]
    fn symmetric_case_couples_first_excited_state() {
        let g = gap_and_element(&reference_potential(), 0.0, 11).unwrap();
        assert_eq!(g.coupled_state, 1);
        assert!(g.element > 0.0);
    }

    #[test]
    fn isolated_focus_well_gap() {
        let p = reference_potential().at(4.0);
        let m = track_minimum(&p, &linspace(0.0, 4.0, 801)).unwrap();
        let g = gap_and_element(&p, m.last().unwrap().position, 11).unwrap();
        let fd = finite_difference_levels(|y| -560.0 * (-8.0 * (y - 4.0).powi(2)).exp(), 2.5, 5.5, 6000, 2);
        assert!((g.gap - (fd[1] - fd[0])).abs() < 0.01 * g.gap);
        let harmonic = (4.0 * 560.0 / (MASS * 0.25)).sqrt();
        assert!((g.gap - harmonic).abs() < 0.15 * harmonic);
    }

    #[test]
    fn basis_convergence_and_variational_order() {
        let p = reference_potential();
        let path = linspace(0.0, 2.0, 201);
        let minima = track_minimum(&p, &path).unwrap();
        for m in minima.iter().step_by(20) {
            let q = p.at(m.displacement);
            let levels = |size| eigh_small(&local_basis(&q, m.position, size).unwrap().hamiltonian).values;
            let (e6, e11, e16) = (levels(6), levels(11), levels(16));
            for k in 0..3 {
                assert!(e11[k] <= e6[k] + 1e-9 && e16[k] <= e11[k] + 1e-9);
            }
            let g11 = gap_and_element(&q, m.position, 11).unwrap().gap;
            let g16 = gap_and_element(&q, m.position, 16).unwrap().gap;
            assert!((g11 - g16).abs() < 0.01 * g16);
        }
    }

    #[test]
    fn moving_time_scalings() {
        let p = reference_potential();
        let profile = build_profile(&p, 2.0, 401, 11).unwrap();
        let s = MovingSchedule {
            final_displacement: 2.0,
            adiabaticity: 0.04,
            profile: profile.clone(),
        };
        let t1 = moving_time(&s).unwrap();
        let t2 = moving_time(&MovingSchedule {
            adiabaticity: 0.08,
            ..s.clone()
        })
        .unwrap();
        assert!((t1.duration / t2.duration - 2.0).abs() < 1e-12);
        assert!(t1.refinement_change < 0.01);
        let zero = MovingSchedule {
            final_displacement: 0.0,
            adiabaticity: 0.04,
            profile: vec![],
        };
        assert_eq!(moving_time(&zero).unwrap().duration, 0.0);

        let mut broken = s;
        broken.profile[10].gap = 0.0;
        assert!(matches!(moving_time(&broken), Err(Error::Divergence(_))));
    }

    #[test]
    fn calibrations_and_yield() {
        let xi = calibrate_adiabaticity(7e-3).unwrap();
        assert!((4.0 * xi * xi - 7e-3).abs() < 1e-15);
        let g = calibrate_effective_linewidth(1e-2, 5e-3, 2.5e-29, -2.0 * PI * 780e9).unwrap();
        let model = ScatteringModel {
            effective_linewidth: g,
            detuning: -2.0 * PI * 780e9,
        };
        let e = excitation_and_scattering(xi, 5e-3, 2.5e-29, Some(&model)).unwrap();
        assert!((e.scattering - 1e-2).abs() < 1e-14);
        let e2 = excitation_and_scattering(xi, 10e-3, 2.5e-29, Some(&model)).unwrap();
        assert!((e2.scattering / e.scattering - 2.0).abs() < 1e-12);
        assert_eq!(
            excitation_and_scattering(0.0, 1.0, 1.0, Some(&model))
                .unwrap()
                .excitation,
            0.0
        );
        assert!(matches!(
            excitation_and_scattering(xi, 5e-3, 2.5e-29, None),
            Err(Error::Config { .. })
        ));
        assert!((cycle_yield(5, 1.0 / 3.0).unwrap() - 0.868_312_757_201_646).abs() < 1e-12);
        assert_eq!(cycle_yield(0, 1.0 / 3.0).unwrap(), 0.0);
        assert!((cycle_yield(1, 1.0 / 9.0).unwrap() - 1.0 / 9.0).abs() < 1e-15);
    }
}
