//! Exact time stepping of the first-order realization by matrix exponentials.

use nalgebra::{DMatrix, DVector, DVectorView};

use super::{first_order, FirstOrderRealization, SecondOrderNetwork};
use crate::error::{Error, Result};

/// Input applied during a simulation.
#[derive(Debug, Clone, PartialEq)]
pub enum Excitation {
    /// `u = 0`.
    Free,
    /// `u = w delta(t - t_0)`: the state jumps by `b w` at the first grid point.
    Impulse(DVector<f64>),
    /// `u(t) = u_k` on `[t_k, t_{k+1})`; one sample per grid interval (a trailing sample
    /// for the last grid point is accepted and ignored).
    Held(Vec<DVector<f64>>),
}

/// States `[x; x']` sampled on a time grid, one column per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: DMatrix<f64>,
}

impl Trajectory {
    fn half(&self) -> usize {
        self.states.nrows() / 2
    }

    pub fn positions(&self, k: usize) -> DVectorView<'_, f64> {
        let n = self.half();
        self.states
            .generic_view((0, k), (nalgebra::Dyn(n), nalgebra::Const::<1>))
    }

    pub fn velocities(&self, k: usize) -> DVectorView<'_, f64> {
        let n = self.half();
        self.states
            .generic_view((n, k), (nalgebra::Dyn(n), nalgebra::Const::<1>))
    }

    pub fn last_positions(&self) -> DVectorView<'_, f64> {
        self.positions(self.times.len() - 1)
    }

    pub fn last_velocities(&self) -> DVectorView<'_, f64> {
        self.velocities(self.times.len() - 1)
    }
}

/// Simulates from `x(t_0) = x0`, `x'(t_0) = v0` over `t_grid`.
pub fn simulate(
    sys: &SecondOrderNetwork,
    x0: &DVector<f64>,
    v0: &DVector<f64>,
    input: &Excitation,
    t_grid: &[f64],
) -> Result<Trajectory> {
    let n = sys.n();
    if x0.len() != n || v0.len() != n {
        return Err(Error::Dimension(format!(
            "initial conditions have lengths {} and {}, expected {n}",
            x0.len(),
            v0.len()
        )));
    }
    let mut state = DVector::zeros(2 * n);
    state.rows_mut(0, n).copy_from(x0);
    state.rows_mut(n, n).copy_from(v0);
    simulate_first_order(&first_order(sys), &state, input, t_grid)
}

/// Simulates `z' = a z + b u` from `z(t_0) = state0`.
pub fn simulate_first_order(
    fo: &FirstOrderRealization,
    state0: &DVector<f64>,
    input: &Excitation,
    t_grid: &[f64],
) -> Result<Trajectory> {
    let dim = fo.state_dim();
    let m = fo.b.ncols();
    if state0.len() != dim {
        return Err(Error::Dimension(format!(
            "initial state has length {}, expected {dim}",
            state0.len()
        )));
    }
    if t_grid.is_empty() {
        return Err(Error::Grid { index: 0 });
    }
    if let Some(k) = t_grid.iter().position(|t| !t.is_finite()) {
        return Err(Error::Grid { index: k });
    }
    if let Some(k) = (1..t_grid.len()).find(|&k| !(t_grid[k] > t_grid[k - 1])) {
        return Err(Error::Grid { index: k });
    }
    let intervals = t_grid.len() - 1;

    let mut z = state0.clone();
    match input {
        Excitation::Free => {}
        Excitation::Impulse(w) => {
            check_input_len(w, m)?;
            z += &fo.b * w;
        }
        Excitation::Held(samples) => {
            if samples.len() < intervals {
                return Err(Error::Dimension(format!(
                    "{} input samples for {intervals} grid intervals",
                    samples.len()
                )));
            }
            for u in samples {
                check_input_len(u, m)?;
            }
        }
    }

    let mut states = DMatrix::zeros(dim, t_grid.len());
    states.set_column(0, &z);
    let mut cache: Option<(f64, DMatrix<f64>, DMatrix<f64>)> = None;
    for k in 0..intervals {
        let h = t_grid[k + 1] - t_grid[k];
        if cache.as_ref().is_none_or(|c| c.0 != h) {
            let (phi, gamma) = discretize(fo, h);
            cache = Some((h, phi, gamma));
        }
        let (_, phi, gamma) = cache.as_ref().expect("cache filled above");
        z = phi * &z;
        if let Excitation::Held(samples) = input {
            z += gamma * &samples[k];
        }
        states.set_column(k + 1, &z);
    }
    Ok(Trajectory {
        times: t_grid.to_vec(),
        states,
    })
}

/// `exp(a t) b`, the impulse response of the full state at time `t`.
pub fn impulse_response_at(fo: &FirstOrderRealization, t: f64) -> DMatrix<f64> {
    (&fo.a * t).exp() * &fo.b
}

fn check_input_len(u: &DVector<f64>, m: usize) -> Result<()> {
    if u.len() != m {
        return Err(Error::Dimension(format!(
            "input sample has length {}, expected {m}",
            u.len()
        )));
    }
    Ok(())
}

/// Zero-order-hold discretization: `exp([[a, b], [0, 0]] h) = [[phi, gamma], [0, I]]`.
fn discretize(fo: &FirstOrderRealization, h: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let dim = fo.state_dim();
    let m = fo.b.ncols();
    let mut aug = DMatrix::zeros(dim + m, dim + m);
    aug.view_mut((0, 0), (dim, dim)).copy_from(&(&fo.a * h));
    aug.view_mut((0, dim), (dim, m)).copy_from(&(&fo.b * h));
    let e = aug.exp();
    (
        e.view((0, 0), (dim, dim)).into_owned(),
        e.view((0, dim), (dim, m)).into_owned(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sys2::{convergence_matrix, validate};

    fn two_mass() -> SecondOrderNetwork {
        validate(
            DVector::from_vec(vec![1.0, 2.0]),
            DMatrix::from_row_slice(2, 2, &[1.5, -0.5, -0.5, 1.0]),
            DMatrix::from_row_slice(2, 2, &[2.0, -2.0, -2.0, 2.0]),
            DMatrix::from_row_slice(2, 1, &[1.0, 0.5]),
        )
        .unwrap()
    }

    #[test]
    fn zero_state_stays_zero() {
        let sys = two_mass();
        let z = DVector::zeros(2);
        let grid: Vec<f64> = (0..20).map(|k| k as f64 * 0.5).collect();
        let tr = simulate(&sys, &z, &z, &Excitation::Free, &grid).unwrap();
        assert!(tr.states.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn grid_must_increase() {
        let sys = two_mass();
        let z = DVector::zeros(2);
        let err = simulate(&sys, &z, &z, &Excitation::Free, &[0.0, 1.0, 1.0]).unwrap_err();
        assert_eq!(err, Error::Grid { index: 2 });
    }

    #[test]
    fn held_input_matches_closed_form_for_single_vertex() {
        // m x'' + d x' = u with u = 1 from rest: x' = (1 - exp(-d t / m)) / d
        let sys = validate(
            DVector::from_element(1, 2.0),
            DMatrix::from_element(1, 1, 4.0),
            DMatrix::zeros(1, 1),
            DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 * 0.3).collect();
        let u = vec![DVector::from_element(1, 1.0); 10];
        let z = DVector::zeros(1);
        let tr = simulate(&sys, &z, &z, &Excitation::Held(u), &grid).unwrap();
        for (k, &t) in grid.iter().enumerate() {
            let v = (1.0 - (-2.0 * t).exp()) / 4.0;
            let x = t / 4.0 - (1.0 - (-2.0 * t).exp()) / 8.0;
            assert!((tr.velocities(k)[0] - v).abs() < 1e-13);
            assert!((tr.positions(k)[0] - x).abs() < 1e-13);
        }
    }

    #[test]
    fn impulse_settles_to_consensus() {
        let sys = two_mass();
        let z = DVector::zeros(2);
        let grid: Vec<f64> = (0..=400).map(|k| k as f64 * 0.25).collect();
        let tr = simulate(
            &sys,
            &z,
            &z,
            &Excitation::Impulse(DVector::from_element(1, 1.0)),
            &grid,
        )
        .unwrap();
        let cd = convergence_matrix(&sys);
        let want = sys.f().sum() / cd.sigma_d;
        for x in tr.last_positions().iter() {
            assert!((x - want).abs() < 1e-9);
        }
        assert!(tr.last_velocities().amax() < 1e-9);

        let at = impulse_response_at(&first_order(&sys), 100.0);
        assert!((at[(0, 0)] - want).abs() < 1e-9);
    }
}
