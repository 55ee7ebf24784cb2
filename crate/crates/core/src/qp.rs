//! Dense convex quadratic programs.
//!
//! ```text
//! minimize    ½ xᵀPx + qᵀx
//! subject to  A x = b
//!             G x ≤ h
//! ```
//!
//! Inequality-constrained instances are solved with a primal-dual
//! interior-point method using Mehrotra's predictor-corrector; equality-only
//! instances go straight to the KKT system.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-8;
const PSD_SHIFT: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct QpInstance {
    p: DMatrix<f64>,
    q: DVector<f64>,
    a_eq: DMatrix<f64>,
    b_eq: DVector<f64>,
    g: DMatrix<f64>,
    h: DVector<f64>,
    g_rows: Vec<Vec<(usize, f64)>>,
    shift: f64,
}

impl QpInstance {
    /// Validates `P` (symmetric, PSD up to a tiny shift) once; later calls
    /// can swap `q` and `h` cheaply.
    pub fn new(p: DMatrix<f64>, q: DVector<f64>) -> Result<Self> {
        let n = q.len();
        if p.nrows() != n || p.ncols() != n {
            return Err(Error::Dimension(format!("P is {}x{}, q has length {n}", p.nrows(), p.ncols())));
        }
        if p.iter().chain(q.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("P or q has non-finite entries".into()));
        }
        let scale = p.amax().max(1.0);
        for j in 0..n {
            for i in 0..j {
                if (p[(i, j)] - p[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::Asymmetric {
                        i: i + 1,
                        j: j + 1,
                        upper: p[(i, j)],
                        lower: p[(j, i)],
                    });
                }
            }
        }
        let mut p = (&p + p.transpose()) * 0.5;
        let mut shift = 0.0;
        if n > 0 {
            let min_eig = SymmetricEigen::new(p.clone()).eigenvalues.min();
            if min_eig < -PSD_TOL * scale {
                return Err(Error::NotPositiveSemidefinite(min_eig));
            }
            if min_eig < 0.0 {
                shift = PSD_SHIFT * scale;
                for i in 0..n {
                    p[(i, i)] += shift;
                }
            }
        }
        Ok(Self {
            p,
            q,
            a_eq: DMatrix::zeros(0, n),
            b_eq: DVector::zeros(0),
            g: DMatrix::zeros(0, n),
            h: DVector::zeros(0),
            g_rows: Vec::new(),
            shift,
        })
    }

    pub fn with_equalities(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.ncols() != self.n() || a.nrows() != b.len() {
            return Err(Error::Dimension(format!(
                "A_eq is {}x{}, b_eq has length {}, n = {}",
                a.nrows(),
                a.ncols(),
                b.len(),
                self.n()
            )));
        }
        self.a_eq = a;
        self.b_eq = b;
        Ok(self)
    }

    pub fn with_inequalities(mut self, g: DMatrix<f64>, h: DVector<f64>) -> Result<Self> {
        if g.ncols() != self.n() || g.nrows() != h.len() {
            return Err(Error::Dimension(format!(
                "G is {}x{}, h has length {}, n = {}",
                g.nrows(),
                g.ncols(),
                h.len(),
                self.n()
            )));
        }
        self.g_rows = (0..g.nrows())
            .map(|i| (0..g.ncols()).filter(|&j| g[(i, j)] != 0.0).map(|j| (j, g[(i, j)])).collect())
            .collect();
        self.g = g;
        self.h = h;
        Ok(self)
    }

    pub fn set_q(&mut self, q: DVector<f64>) -> Result<()> {
        if q.len() != self.n() {
            return Err(Error::Dimension(format!("q has length {}, expected {}", q.len(), self.n())));
        }
        self.q = q;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn q(&self) -> &DVector<f64> {
        &self.q
    }

    pub fn a_eq(&self) -> &DMatrix<f64> {
        &self.a_eq
    }

    pub fn b_eq(&self) -> &DVector<f64> {
        &self.b_eq
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn h(&self) -> &DVector<f64> {
        &self.h
    }

    /// Diagonal shift added to `P` to repair tiny negative eigenvalues.
    pub fn psd_shift(&self) -> f64 {
        self.shift
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.p * x)) + self.q.dot(x)
    }

    fn gx(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.g_rows.len(),
            self.g_rows.iter().map(|row| row.iter().map(|&(j, v)| v * x[j]).sum::<f64>()),
        )
    }

    fn gt(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n());
        for (row, &zi) in self.g_rows.iter().zip(z.iter()) {
            for &(j, v) in row {
                out[j] += v * zi;
            }
        }
        out
    }

    /// `P + Gᵀ diag(w) G`, exploiting the sparsity of `G`'s rows.
    fn newton_matrix(&self, w: &DVector<f64>) -> DMatrix<f64> {
        let mut hm = self.p.clone();
        for (row, &wi) in self.g_rows.iter().zip(w.iter()) {
            for &(a, va) in row {
                let s = wi * va;
                for &(b, vb) in row {
                    hm[(a, b)] += s * vb;
                }
            }
        }
        hm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QpOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Re-solve on the detected active set after convergence.
    pub polish: bool,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 200,
            polish: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

/// Infinity norms of the KKT residuals at the returned point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub equality: f64,
    pub inequality: f64,
    pub complementarity: f64,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Multipliers of the equality rows.
    pub y: DVector<f64>,
    /// Multipliers of the inequality rows (nonnegative).
    pub z: DVector<f64>,
    pub status: QpStatus,
    pub iterations: usize,
    pub objective: f64,
    pub residuals: KktResiduals,
    /// Phase-1 value `min_x max_i (Gx - h)_i` when infeasibility was detected.
    pub infeasibility: Option<f64>,
}

impl QpSolution {
    /// Turns a non-optimal status into an error.
    pub fn into_result(self) -> Result<Self> {
        match self.status {
            QpStatus::Optimal => Ok(self),
            QpStatus::Infeasible => Err(Error::Infeasible(self.infeasibility.unwrap_or(f64::NAN))),
            QpStatus::MaxIter => Err(Error::InvalidArgument(format!(
                "QP did not converge in {} iterations (residuals {:?})",
                self.iterations, self.residuals
            ))),
        }
    }
}

fn residuals(inst: &QpInstance, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>, s: &DVector<f64>) -> KktResiduals {
    let rd = &inst.p * x + &inst.q + inst.a_eq.transpose() * y + inst.gt(z);
    let rp = &inst.a_eq * x - &inst.b_eq;
    let gx = inst.gx(x);
    let viol = (&gx - &inst.h).iter().fold(0.0f64, |m, &v| m.max(v));
    let comp = s.iter().zip(z.iter()).fold(0.0f64, |m, (a, b)| m.max((a * b).abs()));
    KktResiduals {
        stationarity: rd.amax(),
        equality: if rp.is_empty() { 0.0 } else { rp.amax() },
        inequality: viol,
        complementarity: comp,
    }
}

/// Solves the KKT block system `[P Aᵀ; A 0] [x; λ] = [-q; b]`.
pub fn solve_equality_kkt(
    p: &DMatrix<f64>,
    q: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = q.len();
    let k = b.len();
    if p.nrows() != n || p.ncols() != n || a.nrows() != k || a.ncols() != n {
        return Err(Error::Dimension("KKT blocks have inconsistent shapes".into()));
    }
    let mut kkt = DMatrix::zeros(n + k, n + k);
    kkt.view_mut((0, 0), (n, n)).copy_from(p);
    kkt.view_mut((0, n), (n, k)).copy_from(&a.transpose());
    kkt.view_mut((n, 0), (k, n)).copy_from(a);
    let mut rhs = DVector::zeros(n + k);
    rhs.rows_mut(0, n).copy_from(&(-q));
    rhs.rows_mut(n, k).copy_from(b);
    let sol = solve_dense(kkt, &rhs)?;
    Ok((sol.rows(0, n).into_owned(), sol.rows(n, k).into_owned()))
}

/// LU solve that treats a relative pivot below 1e-13 as singular.
fn solve_dense(mat: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let scale = mat.amax().max(f64::MIN_POSITIVE);
    let lu = mat.lu();
    let u = lu.u();
    let min_pivot = u.diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if min_pivot <= 1e-13 * scale {
        return Err(Error::SingularKkt);
    }
    let x = lu.solve(rhs).ok_or(Error::SingularKkt)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularKkt);
    }
    Ok(x)
}

enum Factor {
    Chol(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl Factor {
    fn new(h: DMatrix<f64>, a: &DMatrix<f64>) -> Result<Self> {
        let n = h.nrows();
        let k = a.nrows();
        if k == 0 {
            if let Some(c) = h.clone().cholesky() {
                return Ok(Factor::Chol(c));
            }
            let scale = h.amax().max(1.0);
            let mut reg = h;
            for i in 0..n {
                reg[(i, i)] += 1e-12 * scale;
            }
            if let Some(c) = reg.clone().cholesky() {
                return Ok(Factor::Chol(c));
            }
            return Ok(Factor::Lu(reg.lu()));
        }
        let mut kkt = DMatrix::zeros(n + k, n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(&h);
        kkt.view_mut((0, n), (n, k)).copy_from(&a.transpose());
        kkt.view_mut((n, 0), (k, n)).copy_from(a);
        Ok(Factor::Lu(kkt.lu()))
    }

    fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        let x = match self {
            Factor::Chol(c) => c.solve(rhs),
            Factor::Lu(lu) => lu.solve(rhs).ok_or(Error::SingularKkt)?,
        };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularKkt);
        }
        Ok(x)
    }
}

fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .fold(1.0f64, |a, (x, d)| a.min(-x / d))
}

/// Solves the instance. `x0` is an optional starting point.
pub fn solve(inst: &QpInstance, opts: &QpOptions) -> Result<QpSolution> {
    solve_from(inst, opts, None)
}

pub fn solve_from(inst: &QpInstance, opts: &QpOptions, x0: Option<&DVector<f64>>) -> Result<QpSolution> {
    solve_inner(inst, opts, x0, true)
}

fn solve_inner(inst: &QpInstance, opts: &QpOptions, x0: Option<&DVector<f64>>, phase1: bool) -> Result<QpSolution> {
    let n = inst.n();
    let k = inst.a_eq.nrows();
    let r = inst.h.len();
    if r == 0 {
        let (x, y) = if k == 0 {
            let x = Factor::new(inst.p.clone(), &inst.a_eq)?.solve(&(-&inst.q))?;
            let rd = &inst.p * &x + &inst.q;
            if rd.amax() > opts.tol.sqrt() * (1.0 + inst.q.amax()) {
                return Err(Error::SingularKkt);
            }
            (x, DVector::zeros(0))
        } else {
            solve_equality_kkt(&inst.p, &inst.q, &inst.a_eq, &inst.b_eq)?
        };
        let z = DVector::zeros(0);
        let res = residuals(inst, &x, &y, &z, &z);
        return Ok(QpSolution {
            objective: inst.objective(&x),
            x,
            y,
            z,
            status: QpStatus::Optimal,
            iterations: 1,
            residuals: res,
            infeasibility: None,
        });
    }

    // Dual and complementarity tolerances follow the objective's magnitude so
    // that scaling (P, q) by c > 0 leaves the stopping point unchanged.
    let d_scale = inst.q.amax().max(inst.p.amax()).max(f64::MIN_POSITIVE);
    let p_scale = 1.0 + if k > 0 { inst.b_eq.amax() } else { 0.0 };
    let h_scale = 1.0 + inst.h.amax();

    // Starting point: least-squares fit with unit scaling, slacks pushed to ≥ 1.
    let ones = DVector::from_element(r, 1.0);
    let mut x = match x0 {
        Some(x0) => x0.clone(),
        None => {
            let fac = Factor::new(inst.newton_matrix(&ones), &inst.a_eq)?;
            let mut rhs = DVector::zeros(n + k);
            rhs.rows_mut(0, n).copy_from(&(inst.gt(&inst.h) - &inst.q));
            if k > 0 {
                rhs.rows_mut(n, k).copy_from(&inst.b_eq);
            }
            match fac.solve(&rhs) {
                Ok(sol) => sol.rows(0, n).into_owned(),
                Err(_) => DVector::zeros(n),
            }
        }
    };
    let mut y = DVector::zeros(k);
    let mut s = (&inst.h - inst.gx(&x)).map(|v| v.max(1.0));
    let mut z = ones.clone();

    let mut status = QpStatus::MaxIter;
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it;
        let rd = &inst.p * &x + &inst.q + inst.a_eq.transpose() * &y + inst.gt(&z);
        let rp = &inst.a_eq * &x - &inst.b_eq;
        let ri = inst.gx(&x) + &s - &inst.h;
        let comp = s.component_mul(&z);
        let mu = comp.sum() / r as f64;
        let done = rd.amax() <= opts.tol * d_scale
            && (k == 0 || rp.amax() <= opts.tol * p_scale)
            && ri.amax() <= opts.tol * h_scale
            && comp.amax() <= opts.tol * d_scale * h_scale;
        if done {
            status = QpStatus::Optimal;
            break;
        }
        if !mu.is_finite() || x.iter().any(|v| !v.is_finite()) {
            break;
        }

        let w = z.component_div(&s);
        let fac = match Factor::new(inst.newton_matrix(&w), &inst.a_eq) {
            Ok(f) => f,
            Err(_) => break,
        };
        let newton = |rc: &DVector<f64>| -> Result<(DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>)> {
            let t = (z.component_mul(&ri) - rc).component_div(&s);
            let mut rhs = DVector::zeros(n + k);
            rhs.rows_mut(0, n).copy_from(&(-&rd - inst.gt(&t)));
            if k > 0 {
                rhs.rows_mut(n, k).copy_from(&(-&rp));
            }
            let sol = fac.solve(&rhs)?;
            let dx = sol.rows(0, n).into_owned();
            let dy = sol.rows(n, k).into_owned();
            let gdx = inst.gx(&dx);
            let dz = t + w.component_mul(&gdx);
            let ds = -&ri - gdx;
            Ok((dx, dy, dz, ds))
        };

        let Ok((_, _, dz_a, ds_a)) = newton(&comp) else { break };
        let a_aff = max_step(&s, &ds_a).min(max_step(&z, &dz_a));
        let mu_aff = (&s + &ds_a * a_aff).dot(&(&z + &dz_a * a_aff)) / r as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let rc = comp + ds_a.component_mul(&dz_a) - DVector::from_element(r, sigma * mu);
        let Ok((dx, dy, dz, ds)) = newton(&rc) else { break };
        let step = (0.99 * max_step(&s, &ds).min(max_step(&z, &dz))).min(1.0);
        x += &dx * step;
        y += &dy * step;
        z += &dz * step;
        s += &ds * step;
        iterations = it + 1;
    }

    if status == QpStatus::Optimal && opts.polish {
        if let Some((px, py, pz, ps)) = polish(inst, &z, &s, opts.tol * h_scale, opts.tol * d_scale) {
            x = px;
            y = py;
            z = pz;
            s = ps;
        }
    }
    let res = residuals(inst, &x, &y, &z, &s);
    let mut infeasibility = None;
    if phase1 && status != QpStatus::Optimal && res.inequality.max(res.equality) > opts.tol.sqrt() * h_scale {
        let t = phase_one(inst, opts)?;
        if t > opts.tol.sqrt() * h_scale {
            status = QpStatus::Infeasible;
            infeasibility = Some(t);
        }
    }
    Ok(QpSolution {
        objective: inst.objective(&x),
        x,
        y,
        z,
        status,
        iterations,
        residuals: res,
        infeasibility,
    })
}

type Iterate = (DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>);

/// Solves the equality-constrained problem on the active set `z > s` and
/// keeps it if it is primal feasible with nonnegative multipliers.
fn polish(inst: &QpInstance, z: &DVector<f64>, s: &DVector<f64>, ptol: f64, dtol: f64) -> Option<Iterate> {
    let n = inst.n();
    let k = inst.a_eq.nrows();
    let active: Vec<usize> = (0..z.len()).filter(|&i| z[i] > s[i]).collect();
    let na = active.len();
    let mut a = DMatrix::zeros(k + na, n);
    let mut b = DVector::zeros(k + na);
    a.view_mut((0, 0), (k, n)).copy_from(&inst.a_eq);
    b.rows_mut(0, k).copy_from(&inst.b_eq);
    for (r, &i) in active.iter().enumerate() {
        a.row_mut(k + r).copy_from(&inst.g.row(i));
        b[k + r] = inst.h[i];
    }
    let (x, lam) = solve_equality_kkt(&inst.p, &inst.q, &a, &b).ok()?;
    let gx = inst.gx(&x);
    if (0..gx.len()).any(|i| gx[i] - inst.h[i] > ptol) {
        return None;
    }
    let mut zn = DVector::zeros(z.len());
    for (r, &i) in active.iter().enumerate() {
        if lam[k + r] < -dtol {
            return None;
        }
        zn[i] = lam[k + r].max(0.0);
    }
    let y = lam.rows(0, k).into_owned();
    let sn = (&inst.h - gx).map(|v| v.max(0.0));
    Some((x, y, zn, sn))
}

/// Smallest uniform relaxation `t` of `Gx ≤ h` (subject to `Ax = b`) that is
/// feasible, floored at -1. Positive means infeasible.
fn phase_one(inst: &QpInstance, opts: &QpOptions) -> Result<f64> {
    let n = inst.n();
    let r = inst.h.len();
    let k = inst.a_eq.nrows();
    let mut p = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        p[(i, i)] = 1e-10;
    }
    let mut q = DVector::zeros(n + 1);
    q[n] = 1.0;
    let mut g = DMatrix::zeros(r + 1, n + 1);
    g.view_mut((0, 0), (r, n)).copy_from(&inst.g);
    for i in 0..r {
        g[(i, n)] = -1.0;
    }
    g[(r, n)] = -1.0;
    let mut h = DVector::zeros(r + 1);
    h.rows_mut(0, r).copy_from(&inst.h);
    h[r] = 1.0;
    let mut a = DMatrix::zeros(k, n + 1);
    a.view_mut((0, 0), (k, n)).copy_from(&inst.a_eq);
    let sub = QpInstance::new(p, q)?
        .with_equalities(a, inst.b_eq.clone())?
        .with_inequalities(g, h)?;
    let sol = solve_inner(
        &sub,
        &QpOptions {
            tol: opts.tol,
            max_iter: opts.max_iter.max(100),
            polish: false,
        },
        None,
        false,
    )?;
    Ok(sol.x[n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn active_lower_bound() {
        let inst = QpInstance::new(DMatrix::identity(1, 1), DVector::zeros(1))
            .unwrap()
            .with_inequalities(DMatrix::from_element(1, 1, -1.0), DVector::from_element(1, -1.0))
            .unwrap();
        let sol = solve(&inst, &QpOptions::default()).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-8);
        assert!(sol.z[0] >= 0.0);
    }

    #[test]
    fn uniform_under_sum_constraint() {
        let n = 5;
        let m = 3.0;
        let p = DMatrix::identity(n, n) * 2.0;
        let a = DMatrix::from_element(1, n, 1.0);
        let b = DVector::from_element(1, m);
        let (x, _) = solve_equality_kkt(&p, &DVector::zeros(n), &a, &b).unwrap();
        for v in x.iter() {
            assert_relative_eq!(*v, m / n as f64, epsilon = 1e-12);
        }
        // the same instance through the interior-point path, with a slack bound
        let inst = QpInstance::new(p, DVector::zeros(n))
            .unwrap()
            .with_equalities(a, b)
            .unwrap()
            .with_inequalities(-DMatrix::identity(n, n), DVector::zeros(n))
            .unwrap();
        let sol = solve(&inst, &QpOptions::default()).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        for (u, v) in sol.x.iter().zip(x.iter()) {
            assert_relative_eq!(*u, *v, epsilon = 1e-8);
        }
    }

    #[test]
    fn infeasible_is_detected() {
        // x ≥ 1 and x ≤ 0
        let g = DMatrix::from_row_slice(2, 1, &[-1.0, 1.0]);
        let h = DVector::from_vec(vec![-1.0, 0.0]);
        let inst = QpInstance::new(DMatrix::identity(1, 1), DVector::zeros(1))
            .unwrap()
            .with_inequalities(g, h)
            .unwrap();
        let sol = solve(&inst, &QpOptions::default()).unwrap();
        assert_eq!(sol.status, QpStatus::Infeasible);
        assert_relative_eq!(sol.infeasibility.unwrap(), 0.5, epsilon = 1e-6);
        assert!(matches!(sol.into_result(), Err(Error::Infeasible(_))));
    }

    #[test]
    fn non_psd_is_rejected_and_tiny_negatives_repaired() {
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            QpInstance::new(p, DVector::zeros(2)),
            Err(Error::NotPositiveSemidefinite(_))
        ));
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-11]);
        let inst = QpInstance::new(p, DVector::zeros(2)).unwrap();
        assert!(inst.psd_shift() > 0.0);
    }

    #[test]
    fn singular_kkt() {
        let p = DMatrix::zeros(2, 2);
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let r = solve_equality_kkt(&p, &DVector::zeros(2), &a, &DVector::from_element(1, 1.0));
        assert!(matches!(r, Err(Error::SingularKkt)));
    }

    #[test]
    fn box_constrained_least_squares() {
        // min ½‖x - t‖² over 0 ≤ x ≤ 1 is the clamp of t
        let t: [f64; 4] = [-0.5, 0.3, 1.7, 0.999];
        let n = t.len();
        let q = DVector::from_iterator(n, t.iter().map(|v| -v));
        let mut g = DMatrix::zeros(2 * n, n);
        let mut h = DVector::zeros(2 * n);
        for i in 0..n {
            g[(i, i)] = 1.0;
            h[i] = 1.0;
            g[(n + i, i)] = -1.0;
        }
        let inst = QpInstance::new(DMatrix::identity(n, n), q)
            .unwrap()
            .with_inequalities(g, h)
            .unwrap();
        let sol = solve(&inst, &QpOptions::default()).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        for (x, v) in sol.x.iter().zip(t) {
            assert_relative_eq!(*x, v.clamp(0.0, 1.0), epsilon = 1e-8);
        }
        assert!(sol.residuals.complementarity <= 1e-9 * 3.0);
    }
}
