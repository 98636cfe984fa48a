//! Dormand–Prince 5(4) integrator with continuous (dense) output.
//!
//! States are flat real vectors; complex amplitudes are stored as interleaved
//! `(re, im)` pairs by the callers.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

// 5th-order minus embedded 4th-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Initial value problem `y' = rhs(t, y)` on `[t0, t1]`.
pub struct OdeProblem<F> {
    pub rhs: F,
    pub initial_state: Vec<f64>,
    pub t0: f64,
    pub t1: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on the step; needed when the right-hand side has features
    /// narrower than the natural step (e.g. a pulse switched on mid-interval).
    pub max_step: Option<f64>,
    pub max_steps: usize,
}

impl<F> OdeProblem<F>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    pub fn new(rhs: F, initial_state: Vec<f64>, t0: f64, t1: f64) -> Self {
        Self {
            rhs,
            initial_state,
            t0,
            t1,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: None,
            max_steps: 5_000_000,
        }
    }

    pub fn tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn max_step(mut self, h: f64) -> Self {
        self.max_step = Some(h);
        self
    }

    pub fn dimension(&self) -> usize {
        self.initial_state.len()
    }

    fn validate(&self) -> Result<()> {
        if self.initial_state.is_empty() {
            return Err(Error::Domain("ODE dimension must be at least 1".into()));
        }
        if !(self.t1 > self.t0) {
            return Err(Error::Domain(format!(
                "ODE span must satisfy t1 > t0 (got [{}, {}])",
                self.t0, self.t1
            )));
        }
        for (name, tol) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(Error::Domain(format!("{name} must lie in (0, 1), got {tol}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Requested sample times, in order.
    pub times: Vec<f64>,
    /// State at each sample time (dense output).
    pub states: Vec<Vec<f64>>,
    pub final_state: Vec<f64>,
    pub steps: usize,
    pub rejected: usize,
}

/// Integrates `problem` and evaluates the dense output at `sample_times`
/// (sorted, inside `[t0, t1]`).
pub fn integrate_ode<F>(problem: &OdeProblem<F>, sample_times: &[f64]) -> Result<Trajectory>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    problem.validate()?;
    if sample_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("sample times must be sorted".into()));
    }
    if let (Some(&first), Some(&last)) = (sample_times.first(), sample_times.last()) {
        let slack = 1e-12 * (problem.t1 - problem.t0);
        if first < problem.t0 - slack || last > problem.t1 + slack {
            return Err(Error::Domain("sample times outside the integration span".into()));
        }
    }

    let n = problem.dimension();
    let f = &problem.rhs;
    let span = problem.t1 - problem.t0;
    let h_max = problem.max_step.unwrap_or(span).min(span);

    let mut t = problem.t0;
    let mut y = problem.initial_state.clone();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut y_stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut cont = vec![vec![0.0; n]; 5];

    f(t, &y, &mut k[0]);
    let mut h = initial_step(problem, &y, &k[0]).min(h_max);

    let mut times = Vec::with_capacity(sample_times.len());
    let mut states = Vec::with_capacity(sample_times.len());
    let mut next_sample = 0;
    while next_sample < sample_times.len() && sample_times[next_sample] <= t {
        times.push(sample_times[next_sample]);
        states.push(y.clone());
        next_sample += 1;
    }

    let mut steps = 0usize;
    let mut rejected = 0usize;
    let mut last_step = false;

    loop {
        if steps + rejected >= problem.max_steps {
            return Err(Error::Stiffness { t, h, steps });
        }
        if h.abs() < 1e-14 * t.abs().max(span) {
            return Err(Error::Stiffness { t, h, steps });
        }
        if t + 1.01 * h >= problem.t1 {
            h = problem.t1 - t;
            last_step = true;
        }

        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += h * A[s][j] * kj[i];
                }
                y_stage[i] = acc;
            }
            f(t + C[s] * h, &y_stage, &mut k[s]);
            if s == 6 {
                y_new.copy_from_slice(&y_stage);
            }
        }

        let mut err = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (s, ks) in k.iter().enumerate() {
                e += E[s] * ks[i];
            }
            e *= h;
            let scale = problem.abs_tol + problem.rel_tol * y[i].abs().max(y_new[i].abs());
            err += (e / scale).powi(2);
        }
        let err = (err / n as f64).sqrt();

        if !err.is_finite() {
            rejected += 1;
            h *= 0.2;
            last_step = false;
            continue;
        }

        if err <= 1.0 {
            for i in 0..n {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k[0][i] - ydiff;
                cont[0][i] = y[i];
                cont[1][i] = ydiff;
                cont[2][i] = bspl;
                cont[3][i] = ydiff - h * k[6][i] - bspl;
                let mut d = 0.0;
                for (s, ks) in k.iter().enumerate() {
                    d += D[s] * ks[i];
                }
                cont[4][i] = h * d;
            }
            let t_new = if last_step { problem.t1 } else { t + h };
            while next_sample < sample_times.len() && sample_times[next_sample] <= t_new {
                let ts = sample_times[next_sample];
                let theta = ((ts - t) / h).clamp(0.0, 1.0);
                let theta1 = 1.0 - theta;
                let state = (0..n)
                    .map(|i| {
                        cont[0][i]
                            + theta * (cont[1][i] + theta1 * (cont[2][i] + theta * (cont[3][i] + theta1 * cont[4][i])))
                    })
                    .collect();
                times.push(ts);
                states.push(state);
                next_sample += 1;
            }

            t = t_new;
            y.copy_from_slice(&y_new);
            // FSAL
            let (first, rest) = k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
            steps += 1;

            if last_step {
                break;
            }
            let fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
            h = (h * fac).min(h_max);
        } else {
            rejected += 1;
            last_step = false;
            let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            h *= fac;
        }
    }

    // Samples lying a rounding error past t1
    while next_sample < sample_times.len() {
        times.push(sample_times[next_sample]);
        states.push(y.clone());
        next_sample += 1;
    }

    Ok(Trajectory {
        times,
        states,
        final_state: y,
        steps,
        rejected,
    })
}

fn initial_step<F>(problem: &OdeProblem<F>, y0: &[f64], f0: &[f64]) -> f64
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = y0.len() as f64;
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (y, f) in y0.iter().zip(f0) {
        let sk = problem.abs_tol + problem.rel_tol * y.abs();
        d0 += (y / sk).powi(2);
        d1 += (f / sk).powi(2);
    }
    let d0 = (d0 / n).sqrt();
    let d1 = (d1 / n).sqrt();
    let span = problem.t1 - problem.t0;
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6 * span
    } else {
        0.01 * d0 / d1
    };
    h.min(span).max(1e-12 * span)
}

/// Uniform grid of `count` points on `[t0, t1]` (both ends included).
pub fn linspace(t0: f64, t1: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![t0],
        _ => (0..count)
            .map(|i| {
                if i + 1 == count {
                    t1
                } else {
                    t0 + (t1 - t0) * i as f64 / (count - 1) as f64
                }
            })
            .collect(),
    }
}
