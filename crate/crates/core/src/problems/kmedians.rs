//! K-medians clustering as a DC program.
//!
//! With `D_il = ‖μ_l − a_i‖₁`, the objective `(1/n) Σ_i min_l D_il` equals
//! `φ(μ) − ψ(μ)` where `φ(μ) = (1/n) Σ_i Σ_l D_il` and
//! `ψ(μ) = (1/n) Σ_i max_j Σ_{l≠j} D_il`. A piece of ψ is an assignment
//! `π ∈ [K]ⁿ`. Centers are flattened row-major: coordinate `r` of center `l` lives
//! at `l·d + r`.

use nalgebra::DMatrix;
use rand::Rng;

use super::sgn;
use crate::error::{DcError, Result};
use crate::problem::{DcProblem, PieceId, PieceSelection, SolverRng, Vector, WarmStart};
use crate::subsolvers::SortedBreakpoints;

#[derive(Clone, Debug)]
pub struct KmediansProblem {
    data: DMatrix<f64>,
    k: usize,
    columns: Vec<SortedBreakpoints>,
}

impl KmediansProblem {
    /// `data` holds one point per row.
    pub fn new(data: DMatrix<f64>, k: usize) -> Result<Self> {
        let n = data.nrows();
        if k < 1 || k > n {
            return Err(DcError::Config(format!("K must satisfy 1 <= K <= n = {n}, got {k}")));
        }
        if data.ncols() == 0 {
            return Err(DcError::Config("data must have at least one feature".into()));
        }
        let columns = (0..data.ncols())
            .map(|r| SortedBreakpoints::new(data.column(r).iter().copied().collect()))
            .collect();
        Ok(KmediansProblem { data, k, columns })
    }

    pub fn n_points(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.data.ncols()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// K × d center matrix from the flat variable.
    pub fn centers(&self, mu: &Vector) -> DMatrix<f64> {
        let d = self.n_features();
        DMatrix::from_fn(self.k, d, |l, r| mu[l * d + r])
    }

    pub fn flatten(centers: &DMatrix<f64>) -> Vector {
        let (k, d) = centers.shape();
        Vector::from_fn(k * d, |i, _| centers[(i / d, i % d)])
    }

    /// `D_il = ‖μ_l − a_i‖₁` as an n × K matrix.
    pub fn distances(&self, mu: &Vector) -> DMatrix<f64> {
        let (n, d) = self.data.shape();
        DMatrix::from_fn(n, self.k, |i, l| {
            (0..d).map(|r| (mu[l * d + r] - self.data[(i, r)]).abs()).sum()
        })
    }

    /// The clustering objective `(1/n) Σ_i min_l ‖μ_l − a_i‖₁`.
    pub fn clustering_objective(&self, mu: &Vector) -> f64 {
        let dist = self.distances(mu);
        let n = self.n_points();
        dist.row_iter()
            .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
            .sum::<f64>()
            / n as f64
    }

    /// Nearest centers for every point, lowest index first on ties.
    pub fn nearest(&self, mu: &Vector) -> Vec<Vec<usize>> {
        let dist = self.distances(mu);
        dist.row_iter()
            .map(|row| {
                let m = row.iter().copied().fold(f64::INFINITY, f64::min);
                (0..self.k).filter(|&l| row[l] == m).collect()
            })
            .collect()
    }

    /// `∇ψ_π(μ)`: entry `(l, r)` is `(1/n) Σ_{i: π(i) ≠ l} sgn(μ_l^r − a_i^r)`.
    pub fn assignment_gradient(&self, mu: &Vector, assign: &[i32]) -> Vector {
        let (n, d) = self.data.shape();
        let mut g = Vector::zeros(self.k * d);
        for (i, &own) in assign.iter().enumerate().take(n) {
            let own = own as usize;
            for l in 0..self.k {
                if l == own {
                    continue;
                }
                for r in 0..d {
                    g[l * d + r] += sgn(mu[l * d + r] - self.data[(i, r)]);
                }
            }
        }
        g / n as f64
    }

    pub fn kmedians_active_gradient(&self, mu: &Vector) -> PieceSelection {
        let nearest = self.nearest(mu);
        let ties: Vec<usize> = (0..nearest.len()).filter(|&i| nearest[i].len() > 1).collect();
        if !ties.is_empty() {
            return PieceSelection::Ambiguous { ties };
        }
        let assign: Vec<i32> = nearest.iter().map(|s| s[0] as i32).collect();
        let gradient = self.assignment_gradient(mu, &assign);
        PieceSelection::Singleton {
            piece: PieceId(assign),
            gradient,
        }
    }

    /// Solves the K·d independent 1-D problems
    /// `(1/n)Σ_i|x − a_i^r| + (σ/2)x² − c x` with `c = G_l^r + σ μ̂_l^r`.
    pub fn kmedians_subproblem(&self, g: &Vector, mu_hat: &Vector, sigma: f64) -> Vector {
        let d = self.n_features();
        let w = 1.0 / self.n_points() as f64;
        Vector::from_fn(self.k * d, |idx, _| {
            let r = idx % d;
            let c = g[idx] + sigma * mu_hat[idx];
            self.columns[r].minimize(w, sigma, c)
        })
    }
}

impl DcProblem for KmediansProblem {
    fn dim(&self) -> usize {
        self.k * self.n_features()
    }

    fn name(&self) -> &str {
        "kmedians"
    }

    fn phi1(&self, mu: &Vector) -> f64 {
        let d = self.n_features();
        let total: f64 = (0..self.k * d).map(|idx| self.columns[idx % d].abs_sum(mu[idx])).sum();
        total / self.n_points() as f64
    }

    fn prox_phi1(&self, v: &Vector, t: f64) -> Vector {
        let d = self.n_features();
        let w = 1.0 / self.n_points() as f64;
        Vector::from_fn(v.len(), |idx, _| self.columns[idx % d].minimize(w, 1.0 / t, v[idx] / t))
    }

    fn phi2(&self, _mu: &Vector) -> f64 {
        0.0
    }

    fn grad_phi2(&self, mu: &Vector) -> Vector {
        Vector::zeros(mu.len())
    }

    fn psi(&self, mu: &Vector) -> f64 {
        let dist = self.distances(mu);
        let n = self.n_points() as f64;
        dist.row_iter()
            .map(|row| {
                let s: f64 = row.iter().sum();
                let m = row.iter().copied().fold(f64::INFINITY, f64::min);
                s - m
            })
            .sum::<f64>()
            / n
    }

    fn psi_piece(&self, piece: &PieceId, mu: &Vector) -> f64 {
        let dist = self.distances(mu);
        let n = self.n_points() as f64;
        dist.row_iter()
            .enumerate()
            .map(|(i, row)| row.iter().sum::<f64>() - row[piece.0[i] as usize])
            .sum::<f64>()
            / n
    }

    fn grad_psi_piece(&self, piece: &PieceId, mu: &Vector) -> Vector {
        self.assignment_gradient(mu, &piece.0)
    }

    fn active_pieces(&self, mu: &Vector, tol: f64, cap: usize) -> Result<Vec<PieceId>> {
        let dist = self.distances(mu);
        let n = self.n_points();
        let psi = self.psi(mu);
        let budget = tol + 1e-14 * (1.0 + psi.abs());
        let mut base = vec![0i32; n];
        let mut branching: Vec<(usize, Vec<(i32, f64)>)> = Vec::new();
        for (i, row) in dist.row_iter().enumerate() {
            let m = row.iter().copied().fold(f64::INFINITY, f64::min);
            let mut opts: Vec<(i32, f64)> = (0..self.k)
                .map(|l| (l as i32, (row[l] - m) / n as f64))
                .filter(|(_, loss)| *loss <= budget)
                .collect();
            opts.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            base[i] = opts[0].0;
            if opts.len() > 1 {
                branching.push((i, opts));
            }
        }

        fn walk(
            branching: &[(usize, Vec<(i32, f64)>)],
            pos: usize,
            budget: f64,
            assign: &mut Vec<i32>,
            out: &mut Vec<PieceId>,
            cap: usize,
        ) -> Result<()> {
            if pos == branching.len() {
                if out.len() == cap {
                    return Err(DcError::EnumerationOverflow { cap });
                }
                out.push(PieceId(assign.clone()));
                return Ok(());
            }
            let (i, opts) = &branching[pos];
            for &(l, loss) in opts {
                if loss > budget {
                    break;
                }
                assign[*i] = l;
                walk(branching, pos + 1, budget - loss, assign, out, cap)?;
            }
            assign[*i] = opts[0].0;
            Ok(())
        }

        let mut out = Vec::new();
        walk(&branching, 0, budget, &mut base, &mut out, cap)?;
        Ok(out)
    }

    fn singleton_gradient(&self, mu: &Vector) -> PieceSelection {
        self.kmedians_active_gradient(mu)
    }

    fn random_active_piece(&self, mu: &Vector, rng: &mut SolverRng, _cap: usize) -> Result<PieceId> {
        let assign = self
            .nearest(mu)
            .into_iter()
            .map(|s| s[rng.random_range(0..s.len())] as i32)
            .collect();
        Ok(PieceId(assign))
    }

    fn solve_subproblem(
        &self,
        g: &Vector,
        center: &Vector,
        sigma: f64,
        _warm: &mut WarmStart,
    ) -> Result<Vector> {
        Ok(self.kmedians_subproblem(g, center, sigma))
    }

    fn zeta(&self, mu: &Vector) -> f64 {
        self.clustering_objective(mu)
    }

    fn piece_label(&self, piece: &PieceId) -> String {
        let mut sizes = vec![0usize; self.k];
        for &l in &piece.0 {
            sizes[l as usize] += 1;
        }
        let parts: Vec<String> = sizes.iter().map(|s| s.to_string()).collect();
        format!("sizes {}", parts.join("/"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturbation::seeded_rng;
    use crate::problem::objective;

    fn line(points: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(points.len(), 1, points)
    }

    #[test]
    fn single_cluster_has_zero_psi() {
        let p = KmediansProblem::new(line(&[0.0, 1.0, 5.0]), 1).unwrap();
        let mu = Vector::from_vec(vec![0.7]);
        assert_eq!(p.psi(&mu), 0.0);
        match p.kmedians_active_gradient(&mu) {
            PieceSelection::Singleton { gradient, .. } => assert_eq!(gradient, Vector::zeros(1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn two_points_gradient_matches_finite_differences() {
        let p = KmediansProblem::new(line(&[0.0, 10.0]), 2).unwrap();
        assert!(p.kmedians_active_gradient(&Vector::from_vec(vec![0.0, 10.0])).is_singleton());
        let mu = Vector::from_vec(vec![0.3, 9.4]);
        let PieceSelection::Singleton { piece, gradient } = p.kmedians_active_gradient(&mu) else {
            panic!("expected singleton");
        };
        let h = 1e-6;
        for idx in 0..2 {
            let mut up = mu.clone();
            let mut dn = mu.clone();
            up[idx] += h;
            dn[idx] -= h;
            let fd = (p.psi_piece(&piece, &up) - p.psi_piece(&piece, &dn)) / (2.0 * h);
            assert!((fd - gradient[idx]).abs() < 1e-5);
        }
    }

    #[test]
    fn equidistant_point_is_reported() {
        let p = KmediansProblem::new(line(&[0.0, 5.0, 10.0]), 2).unwrap();
        let mu = Vector::from_vec(vec![2.0, 8.0]);
        assert_eq!(p.kmedians_active_gradient(&mu), PieceSelection::Ambiguous { ties: vec![1] });
        assert_eq!(p.active_pieces(&mu, 0.0, 16).unwrap().len(), 2);
    }

    #[test]
    fn reformulation_matches_clustering_objective() {
        let mut rng = seeded_rng(4);
        let data = DMatrix::from_fn(25, 3, |_, _| rng.random_range(-3.0..3.0));
        let p = KmediansProblem::new(data, 4).unwrap();
        for _ in 0..50 {
            let mu = Vector::from_fn(12, |_, _| rng.random_range(-3.0..3.0));
            let z = p.phi1(&mu) + p.phi2(&mu) - p.psi(&mu);
            assert!((z - p.clustering_objective(&mu)).abs() < 1e-12);
            assert_eq!(objective(&p, &mu).unwrap(), p.clustering_objective(&mu));
        }
    }

    #[test]
    fn subproblem_with_huge_sigma_returns_center() {
        let mut rng = seeded_rng(6);
        let data = DMatrix::from_fn(30, 2, |_, _| rng.random_range(-1.0..1.0));
        let p = KmediansProblem::new(data, 2).unwrap();
        let mu_hat = Vector::from_vec(vec![0.3, -0.2, 0.9, 0.1]);
        let out = p.kmedians_subproblem(&Vector::zeros(4), &mu_hat, 1e6);
        assert!((out - mu_hat).norm() < 1e-5);
    }

    #[test]
    fn single_coordinate_kink() {
        let p = KmediansProblem::new(line(&[0.0, 0.0]), 1).unwrap();
        let out = p.kmedians_subproblem(&Vector::zeros(1), &Vector::zeros(1), 1.0);
        assert_eq!(out[0], 0.0);
    }

    #[test]
    fn subproblem_beats_random_trial_points() {
        let mut rng = seeded_rng(12);
        let data = DMatrix::from_fn(30, 2, |_, _| rng.random_range(-2.0..2.0));
        let p = KmediansProblem::new(data, 2).unwrap();
        let mu_hat = Vector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
        let g = match p.kmedians_active_gradient(&mu_hat) {
            PieceSelection::Singleton { gradient, .. } => gradient,
            _ => panic!("generic point expected"),
        };
        let sigma = 1.0;
        let sub = |mu: &Vector| p.phi1(mu) - g.dot(mu) + 0.5 * sigma * (mu - &mu_hat).norm_squared();
        let best = p.kmedians_subproblem(&g, &mu_hat, sigma);
        let v = sub(&best);
        for _ in 0..10_000 {
            let trial = &best + Vector::from_fn(4, |_, _| rng.random_range(-0.5..0.5));
            assert!(v <= sub(&trial) + 1e-12);
        }
    }
}
