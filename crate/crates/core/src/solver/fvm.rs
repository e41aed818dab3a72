use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{
    diffusivity, driving_force, validate_tree, InterconnectTree, PhysicalParams, StressField, StressSnapshot,
};

use super::mesh::{build_mesh, End, Mesh};
use super::thomas::Tridiagonal;
use super::{Integrator, SolverConfig, SECONDS_PER_YEAR};

#[derive(Debug, Clone, Copy)]
struct BranchCoeffs {
    /// um^2/s
    kappa: f64,
    /// Pa/um
    g: f64,
    /// um
    width: f64,
}

/// Finite-volume discretisation of one tree, ready to time-step.
#[derive(Debug, Clone)]
pub struct KorhonenSolver {
    design_id: u64,
    mesh: Mesh,
    coeffs: Vec<BranchCoeffs>,
    sigma_t: f64,
    t_metal: f64,
    cfg: SolverConfig,
}

impl KorhonenSolver {
    pub fn new(tree: &InterconnectTree, params: &PhysicalParams, cfg: &SolverConfig) -> Result<Self> {
        let bad = params.invalid_fields();
        if !bad.is_empty() {
            return Err(Error::Config(format!("physical parameters out of range: {}", bad.join(", "))));
        }
        // Canvas placement, overlap, KCL and current limits do not affect the
        // PDE; only the graph structure does.
        let structural: Vec<_> = validate_tree(tree, params).into_iter().filter(|v| v.kind.is_structural()).collect();
        if !structural.is_empty() {
            return Err(Error::InvalidTree(structural));
        }
        let mesh = build_mesh(tree, cfg)?;
        let kappa = diffusivity(params) * 1e12;
        let coeffs = tree
            .branches
            .iter()
            .map(|b| BranchCoeffs { kappa, g: driving_force(b, params) * 1e-6, width: b.width })
            .collect();
        Ok(KorhonenSolver {
            design_id: tree.design_id,
            mesh,
            coeffs,
            sigma_t: params.sigma_t,
            t_metal: params.t_metal,
            cfg: cfg.clone(),
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    /// Uniform initial stress sigma_T on every cell and junction.
    pub fn initial_state(&self) -> Vec<f64> {
        vec![self.sigma_t; self.mesh.n_unknowns()]
    }

    /// Total stress content sum(w t_metal dx sigma), Pa um^3.
    pub fn content(&self, state: &[f64]) -> f64 {
        self.mesh
            .branches
            .iter()
            .zip(&self.coeffs)
            .map(|(b, c)| {
                let cells: f64 = state[b.offset..b.offset + b.n_cells].iter().sum();
                c.width * self.t_metal * b.dx * cells
            })
            .sum()
    }

    /// Total metal volume, um^3.
    fn volume(&self) -> f64 {
        self.mesh.branches.iter().zip(&self.coeffs).map(|(b, c)| c.width * self.t_metal * b.dx * b.n_cells as f64).sum()
    }

    /// Face fluxes kappa (d sigma/dx + G) of one branch, `n_cells + 1`
    /// values from the low end to the high end. Blocked faces carry zero.
    fn face_fluxes(&self, bi: usize, state: &[f64]) -> Vec<f64> {
        let b = &self.mesh.branches[bi];
        let co = self.coeffs[bi];
        let cells = &state[b.offset..b.offset + b.n_cells];
        let n = b.n_cells;
        let half = b.dx / 2.0;
        let mut q = Vec::with_capacity(n + 1);
        q.push(match b.low {
            End::Blocked => 0.0,
            End::Junction(j) => co.kappa * ((cells[0] - state[self.mesh.junction_index(j)]) / half + co.g),
        });
        for k in 1..n {
            q.push(co.kappa * ((cells[k] - cells[k - 1]) / b.dx + co.g));
        }
        q.push(match b.high {
            End::Blocked => 0.0,
            End::Junction(j) => co.kappa * ((state[self.mesh.junction_index(j)] - cells[n - 1]) / half + co.g),
        });
        q
    }

    /// Net face flux into every cell, in global cell order.
    fn divergence(&self, state: &[f64]) -> Vec<f64> {
        let mut d = vec![0.0; self.mesh.n_cells];
        for (bi, b) in self.mesh.branches.iter().enumerate() {
            let q = self.face_fluxes(bi, state);
            for k in 0..b.n_cells {
                d[b.offset + k] = q[k + 1] - q[k];
            }
        }
        d
    }

    /// Width-weighted flux imbalance at each junction; zero for a state that
    /// satisfies the junction boundary condition.
    fn junction_balance(&self, state: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.mesh.junction_nodes.len()];
        for (bi, b) in self.mesh.branches.iter().enumerate() {
            if b.low == End::Blocked && b.high == End::Blocked {
                continue;
            }
            let q = self.face_fluxes(bi, state);
            let w = self.coeffs[bi].width;
            if let End::Junction(j) = b.low {
                r[j] -= w * q[0];
            }
            if let End::Junction(j) = b.high {
                r[j] += w * q[b.n_cells];
            }
        }
        r
    }

    pub fn step(&self, state: &[f64], dt: f64) -> Result<Vec<f64>> {
        self.step_with(state, dt, self.cfg.integrator)
    }

    /// Advances `state` by one implicit step of length `dt` seconds.
    ///
    /// Branch rows are tridiagonal and are eliminated onto the junction
    /// unknowns; the small dense junction system is solved by LU and the
    /// branch cells are recovered by back-substitution.
    pub fn step_with(&self, state: &[f64], dt: f64, integrator: Integrator) -> Result<Vec<f64>> {
        let mesh = &self.mesh;
        if state.len() != mesh.n_unknowns() {
            return Err(Error::Solver(format!("state has {} values, mesh has {}", state.len(), mesh.n_unknowns())));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Solver(format!("invalid time step {dt}")));
        }
        let theta = integrator.theta();
        // Solve for the increment: m d - theta Lin(d) = D(old) on cells and
        // Lin_J(d) = -balance(old) on junctions.
        let divergence = self.divergence(state);
        let balance = self.junction_balance(state);

        let nj = mesh.junction_nodes.len();
        let mut particular = divergence.clone();
        let mut from_low: Vec<Option<Vec<f64>>> = Vec::with_capacity(mesh.branches.len());
        let mut from_high: Vec<Option<Vec<f64>>> = Vec::with_capacity(mesh.branches.len());

        for (b, co) in mesh.branches.iter().zip(&self.coeffs) {
            let n = b.n_cells;
            let c = co.kappa / b.dx;
            let cj = 2.0 * co.kappa / b.dx;
            let m = b.dx / dt;
            let left = if b.low == End::Blocked { 0.0 } else { cj };
            let right = if b.high == End::Blocked { 0.0 } else { cj };

            let mut diag = vec![0.0; n];
            let mut lower = vec![0.0; n];
            let mut upper = vec![0.0; n];
            for k in 0..n {
                let fl = if k == 0 { left } else { c };
                let fr = if k + 1 == n { right } else { c };
                diag[k] = m + theta * (fl + fr);
                if k > 0 {
                    lower[k] = -theta * c;
                }
                if k + 1 < n {
                    upper[k] = -theta * c;
                }
            }
            let tri = Tridiagonal::factor(lower, &diag, &upper)
                .ok_or_else(|| Error::Solver(format!("singular branch system (branch {})", b.branch)))?;
            tri.solve_in_place(&mut particular[b.offset..b.offset + n]);
            let unit_response = |row: usize| {
                let mut e = vec![0.0; n];
                e[row] = theta * cj;
                tri.solve_in_place(&mut e);
                e
            };
            from_low.push(matches!(b.low, End::Junction(_)).then(|| unit_response(0)));
            from_high.push(matches!(b.high, End::Junction(_)).then(|| unit_response(n - 1)));
        }

        let mut delta = particular;
        delta.resize(mesh.n_unknowns(), 0.0);
        if nj > 0 {
            let mut a = DMatrix::<f64>::zeros(nj, nj);
            let mut r = DVector::<f64>::from_iterator(nj, balance.iter().map(|v| -v));
            for (bi, (b, co)) in mesh.branches.iter().zip(&self.coeffs).enumerate() {
                let wcj = co.width * 2.0 * co.kappa / b.dx;
                for (end, cell) in [(b.low, 0), (b.high, b.n_cells - 1)] {
                    let End::Junction(jr) = end else { continue };
                    a[(jr, jr)] += wcj;
                    r[jr] += wcj * delta[b.offset + cell];
                    if let (End::Junction(jl), Some(v)) = (b.low, &from_low[bi]) {
                        a[(jr, jl)] -= wcj * v[cell];
                    }
                    if let (End::Junction(jh), Some(v)) = (b.high, &from_high[bi]) {
                        a[(jr, jh)] -= wcj * v[cell];
                    }
                }
            }
            let x = a.lu().solve(&r).ok_or_else(|| Error::Solver("singular junction system".into()))?;
            for (j, v) in x.iter().enumerate() {
                delta[mesh.junction_index(j)] = *v;
            }
            for (bi, b) in mesh.branches.iter().enumerate() {
                let end_value = |e: End| match e {
                    End::Junction(j) => delta[mesh.junction_index(j)],
                    End::Blocked => 0.0,
                };
                let (jl, jh) = (end_value(b.low), end_value(b.high));
                for k in 0..b.n_cells {
                    let mut v = delta[b.offset + k];
                    if let Some(u) = &from_low[bi] {
                        v += u[k] * jl;
                    }
                    if let Some(u) = &from_high[bi] {
                        v += u[k] * jh;
                    }
                    delta[b.offset + k] = v;
                }
            }
        }

        let mut next: Vec<f64> = state.iter().zip(&delta).map(|(s, d)| s + d).collect();
        // Rounding in the junction solve drifts the state along the constant
        // mode, which the flux operator cannot see. Undo that drift.
        let shift = (self.content(state) - self.content(&next)) / self.volume();
        if shift.is_finite() {
            next.iter_mut().for_each(|v| *v += shift);
        }
        if let Some(bad) = next.iter().position(|v| !v.is_finite()) {
            return Err(Error::Solver(format!("non-finite stress at unknown {bad}")));
        }
        let backward_error = self.backward_error(state, &next, dt, theta, &divergence, &balance);
        if !(backward_error <= self.cfg.linear_solver_tol) {
            return Err(Error::Solver(format!(
                "linear solve residual {backward_error:e} exceeds tolerance {:e}",
                self.cfg.linear_solver_tol
            )));
        }
        Ok(next)
    }

    /// Normwise backward error ||r|| / || |A||x| + |b| || of a step. The
    /// residual is evaluated from the flux formulas rather than the matrix.
    fn backward_error(
        &self,
        old: &[f64],
        new: &[f64],
        dt: f64,
        theta: f64,
        old_divergence: &[f64],
        old_balance: &[f64],
    ) -> f64 {
        let mesh = &self.mesh;
        let d_new = self.divergence(new);
        let mut res2 = 0.0;
        let mut scale2 = 0.0;
        let junction = |e: End| match e {
            End::Junction(j) => new[mesh.junction_index(j)].abs(),
            End::Blocked => 0.0,
        };
        for (b, co) in mesh.branches.iter().zip(&self.coeffs) {
            let m = b.dx / dt;
            let c = co.kappa / b.dx;
            let cj = 2.0 * c;
            let last = b.n_cells - 1;
            for k in 0..b.n_cells {
                let i = b.offset + k;
                let r = m * (new[i] - old[i]) - theta * d_new[i] - (1.0 - theta) * old_divergence[i];
                let here = new[i].abs();
                let left = match (k, b.low) {
                    (0, End::Blocked) => 0.0,
                    (0, e) => cj * (here + junction(e)),
                    _ => c * (here + new[i - 1].abs()),
                };
                let right = match (k == last, b.high) {
                    (true, End::Blocked) => 0.0,
                    (true, e) => cj * (here + junction(e)),
                    _ => c * (here + new[i + 1].abs()),
                };
                let s = m * (here + old[i].abs()) + theta * (left + right) + old_divergence[i].abs();
                res2 += r * r;
                scale2 += s * s;
            }
        }
        let balance = self.junction_balance(new);
        let mut jscale: Vec<f64> = old_balance.iter().map(|v| v.abs()).collect();
        for (b, co) in mesh.branches.iter().zip(&self.coeffs) {
            let wcj = co.width * 2.0 * co.kappa / b.dx;
            if let End::Junction(j) = b.low {
                jscale[j] += wcj * (new[mesh.junction_index(j)].abs() + new[b.offset].abs());
            }
            if let End::Junction(j) = b.high {
                jscale[j] += wcj * (new[mesh.junction_index(j)].abs() + new[b.offset + b.n_cells - 1].abs());
            }
        }
        for (r, s) in balance.iter().zip(&jscale) {
            res2 += r * r;
            scale2 += s * s;
        }
        if scale2 == 0.0 {
            return res2.sqrt();
        }
        (res2 / scale2).sqrt()
    }

    pub fn snapshot(&self, state: &[f64]) -> StressSnapshot {
        StressSnapshot {
            branches: self.mesh.branches.iter().map(|b| state[b.offset..b.offset + b.n_cells].to_vec()).collect(),
            junctions: state[self.mesh.n_cells..].to_vec(),
        }
    }

    /// Integrates from the uniform initial state and records the stress at
    /// each of `times` (seconds, strictly increasing, >= 0). The step
    /// schedule ramps geometrically from `dt_initial` to `dt_max`; a step
    /// that would pass a report time is shortened to land on it.
    pub fn run(&self, times: &[f64]) -> Result<StressField> {
        check_report_times(times)?;
        let mut state = self.initial_state();
        let mut t = 0.0;
        let mut dt_next = self.cfg.dt_initial;
        let mut snapshots = Vec::with_capacity(times.len());
        for &target in times {
            while t < target {
                let remaining = target - t;
                if remaining <= dt_next {
                    state = self.step(&state, remaining)?;
                    t = target;
                    if remaining == dt_next {
                        dt_next = (dt_next * self.cfg.dt_growth).min(self.cfg.dt_max);
                    }
                } else {
                    state = self.step(&state, dt_next)?;
                    t += dt_next;
                    dt_next = (dt_next * self.cfg.dt_growth).min(self.cfg.dt_max);
                }
            }
            snapshots.push(self.snapshot(&state));
        }
        Ok(StressField {
            design_id: self.design_id,
            times: times.to_vec(),
            branch_ids: self.mesh.branches.iter().map(|b| b.branch).collect(),
            junction_ids: self.mesh.junction_nodes.clone(),
            snapshots,
        })
    }
}

fn check_report_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Config("report times must be finite and >= 0".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("report times must be strictly increasing".into()));
    }
    Ok(())
}

/// Transient stress at each report time given in years.
pub fn solve_transient(
    tree: &InterconnectTree,
    params: &PhysicalParams,
    cfg: &SolverConfig,
    report_years: &[f64],
) -> Result<StressField> {
    let times: Vec<f64> = report_years.iter().map(|y| y * SECONDS_PER_YEAR).collect();
    KorhonenSolver::new(tree, params, cfg)?.run(&times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BranchSpec, Node, NodeKind};

    fn segment(length: f64, j: f64) -> InterconnectTree {
        InterconnectTree::from_specs(
            1,
            vec![
                Node { id: 0, x: 10.0, y: 20.0, kind: NodeKind::Terminal },
                Node { id: 1, x: 10.0 + length, y: 20.0, kind: NodeKind::Terminal },
            ],
            vec![BranchSpec { id: 0, from: 0, to: 1, width: 1.0, current_density: j }],
        )
    }

    fn t_tree(j: [f64; 3], w: [f64; 3]) -> InterconnectTree {
        InterconnectTree::from_specs(
            3,
            vec![
                Node { id: 0, x: 40.0, y: 100.0, kind: NodeKind::Terminal },
                Node { id: 1, x: 100.0, y: 100.0, kind: NodeKind::Junction },
                Node { id: 2, x: 140.0, y: 100.0, kind: NodeKind::Terminal },
                Node { id: 3, x: 100.0, y: 150.0, kind: NodeKind::Terminal },
            ],
            vec![
                BranchSpec { id: 0, from: 0, to: 1, width: w[0], current_density: j[0] },
                BranchSpec { id: 1, from: 1, to: 2, width: w[1], current_density: j[1] },
                BranchSpec { id: 2, from: 1, to: 3, width: w[2], current_density: j[2] },
            ],
        )
    }

    #[test]
    fn zero_current_uniform_state_is_stationary() {
        let params = PhysicalParams { sigma_t: -3.5e7, ..Default::default() };
        let s = KorhonenSolver::new(&t_tree([0.0; 3], [1.0, 2.0, 3.0]), &params, &SolverConfig::default()).unwrap();
        for integrator in [Integrator::BackwardEuler, Integrator::CrankNicolson] {
            let next = s.step_with(&s.initial_state(), 1e6, integrator).unwrap();
            assert!(next.iter().all(|&v| v == -3.5e7), "{integrator:?}");
        }
    }

    #[test]
    fn single_step_conserves_content() {
        let params = PhysicalParams { sigma_t: 1e7, ..Default::default() };
        let s = KorhonenSolver::new(&segment(50.0, 7e8), &params, &SolverConfig::default()).unwrap();
        let s0 = s.initial_state();
        let c0 = s.content(&s0);
        for dt in [1.0, 1e4, 1e8] {
            let s1 = s.step(&s0, dt).unwrap();
            assert!(((s.content(&s1) - c0) / c0).abs() < 1e-10, "dt={dt}");
        }
    }

    #[test]
    fn huge_step_reaches_linear_profile() {
        let params = PhysicalParams { e_charge: 1.602e-19, ..Default::default() };
        let s = KorhonenSolver::new(&segment(50.0, 1e9), &params, &SolverConfig::default()).unwrap();
        let next = s.step(&s.initial_state(), 1e12).unwrap();
        let g = crate::model::driving_force_for(1e9, &params) * 1e-6;
        for (k, v) in next.iter().enumerate() {
            let x = k as f64 + 0.5;
            let expected = g * (25.0 - x);
            // within 1% of the profile amplitude
            assert!((v - expected).abs() <= 0.01 * g * 25.0, "cell {k}: {v} vs {expected}");
        }
    }

    #[test]
    fn junction_state_satisfies_flux_balance() {
        let s = KorhonenSolver::new(
            &t_tree([1e8, 1e8, 1e8], [2.0, 1.0, 1.0]),
            &PhysicalParams::default(),
            &SolverConfig::default(),
        )
        .unwrap();
        let mut state = s.initial_state();
        for _ in 0..5 {
            state = s.step(&state, 3e4).unwrap();
            let bal = s.junction_balance(&state);
            let flux_scale = 0.0435 * 3.05e5;
            assert!(bal[0].abs() < 1e-9 * flux_scale, "{bal:?}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = KorhonenSolver::new(&segment(20.0, 1e8), &PhysicalParams::default(), &SolverConfig::default()).unwrap();
        assert!(matches!(s.step(&[0.0; 3], 1.0), Err(Error::Solver(_))));
        assert!(matches!(s.step(&s.initial_state(), 0.0), Err(Error::Solver(_))));
        assert!(matches!(s.step(&s.initial_state(), f64::NAN), Err(Error::Solver(_))));
        let mut poisoned = s.initial_state();
        poisoned[3] = f64::INFINITY;
        assert!(matches!(s.step(&poisoned, 1.0), Err(Error::Solver(_))));
        assert!(matches!(s.run(&[2.0, 1.0]), Err(Error::Config(_))));
        assert!(matches!(s.run(&[-1.0]), Err(Error::Config(_))));
        let bad = PhysicalParams { temperature: 0.0, ..Default::default() };
        assert!(matches!(KorhonenSolver::new(&segment(20.0, 1e8), &bad, &SolverConfig::default()), Err(Error::Config(_))));
    }

    #[test]
    fn report_time_zero_is_initial_condition() {
        let params = PhysicalParams { sigma_t: 2e7, ..Default::default() };
        let f = solve_transient(&t_tree([1e8, 1e8, 1e8], [2.0, 1.0, 1.0]), &params, &SolverConfig::default(), &[0.0])
            .unwrap();
        assert_eq!(f.times, vec![0.0]);
        assert!(f.snapshots[0].branches.iter().flatten().all(|&v| v == 2e7));
        assert_eq!(f.snapshots[0].junctions, vec![2e7]);
    }

    #[test]
    fn run_lands_exactly_on_report_times() {
        let s = KorhonenSolver::new(&segment(20.0, 1e8), &PhysicalParams::default(), &SolverConfig::default()).unwrap();
        let f = s.run(&[1.5e4, 1e5, 3.3e6]).unwrap();
        assert_eq!(f.times, vec![1.5e4, 1e5, 3.3e6]);
        assert_eq!(f.snapshots.len(), 3);
    }
}
