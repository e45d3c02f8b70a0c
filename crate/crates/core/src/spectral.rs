//! Conjugate gradients, a profile (skyline) Cholesky factorisation and
//! Lanczos-based 2-norm condition numbers.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Precond {
    None,
    #[default]
    Jacobi,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// `‖A x − b‖₂ / ‖b‖₂` (absolute when `b = 0`).
    pub residual: f64,
    pub converged: bool,
}

/// Relative residual of `x` for `A x = b`.
pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    let nb = math::vec_norm(b);
    let nr = math::vec_norm(&r);
    if nb > 0.0 {
        nr / nb
    } else {
        nr
    }
}

/// Preconditioned CG from a zero initial guess. `maxit = None` means `10 n`.
pub fn solve_cg(
    a: &CsrMatrix,
    b: &[f64],
    rtol: f64,
    maxit: Option<usize>,
    precond: Precond,
) -> SolveReport {
    let n = b.len();
    let maxit = maxit.unwrap_or(10 * n.max(1));
    let inv_diag: Vec<f64> = match precond {
        Precond::None => vec![1.0; n],
        Precond::Jacobi => a
            .diagonal()
            .iter()
            .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
            .collect(),
    };
    let mut x = vec![0.0; n];
    let nb = math::vec_norm(b);
    if nb == 0.0 {
        return SolveReport {
            solution: x,
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut rz = math::vec_dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut it = 0;
    let mut replaced = 0;
    while it < maxit {
        a.matvec(&p, &mut ap);
        let pap = math::vec_dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        it += 1;
        let mut res = math::vec_norm(&r) / nb;
        if res <= rtol {
            // Confirm with the true residual; on drift restart from it.
            a.matvec(&x, &mut ap);
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
            res = math::vec_norm(&r) / nb;
            if res <= rtol || replaced >= 3 {
                break;
            }
            replaced += 1;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = math::vec_dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let residual = relative_residual(a, &x, b);
    SolveReport {
        converged: residual <= rtol,
        solution: x,
        iterations: it,
        residual,
    }
}

/// Reverse Cuthill–McKee ordering: `perm[new] = old`.
pub fn rcm_ordering(a: &CsrMatrix) -> Vec<usize> {
    let n = a.rows;
    let degree: Vec<usize> = (0..n).map(|i| a.row_ptr[i + 1] - a.row_ptr[i]).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let bfs = |start: usize, visited: &mut Vec<bool>, out: &mut Vec<usize>| -> (usize, usize) {
        // Returns (last node, depth); appends visit order to `out`.
        let begin = out.len();
        visited[start] = true;
        out.push(start);
        let mut head = begin;
        let mut level_end = out.len();
        let mut depth = 0;
        while head < out.len() {
            let v = out[head];
            head += 1;
            let mut nb: Vec<usize> = a.row(v).map(|e| e.0).filter(|&j| !visited[j]).collect();
            nb.sort_by_key(|&j| (degree[j], j));
            for j in nb {
                if !visited[j] {
                    visited[j] = true;
                    out.push(j);
                }
            }
            if head == level_end && head < out.len() {
                depth += 1;
                level_end = out.len();
            }
        }
        (*out.last().unwrap(), depth)
    };
    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // Pseudo-peripheral start: repeat BFS from the farthest node while depth grows.
        let mut start = seed;
        let mut best_depth = 0;
        for _ in 0..4 {
            let mut tmp_visited = visited.clone();
            let mut tmp = Vec::new();
            let (last, depth) = bfs(start, &mut tmp_visited, &mut tmp);
            if depth <= best_depth && start != seed {
                break;
            }
            best_depth = depth;
            let candidate = tmp[tmp.len() - 1..]
                .iter()
                .copied()
                .min_by_key(|&j| degree[j])
                .unwrap_or(last);
            if candidate == start {
                break;
            }
            start = candidate;
        }
        bfs(start, &mut visited, &mut order);
    }
    order.reverse();
    order
}

/// Lower profile of `a` under a permutation: `Σ_i (i − first_i + 1)`, and the
/// factorisation work `Σ_i (i − first_i + 1)²`.
pub fn profile_size(a: &CsrMatrix, perm: &[usize]) -> (usize, f64) {
    let n = a.rows;
    let mut inv = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let mut entries = 0usize;
    let mut work = 0.0;
    for (new, &old) in perm.iter().enumerate() {
        let first = a
            .row(old)
            .map(|(j, _)| inv[j])
            .min()
            .unwrap_or(new)
            .min(new);
        let w = new - first + 1;
        entries += w;
        work += (w * w) as f64;
    }
    (entries, work)
}

/// Row-oriented skyline `L D Lᵀ` factor of a permuted symmetric matrix,
/// without pivoting. Indefinite matrices are accepted as long as no pivot
/// vanishes.
#[derive(Clone, Debug)]
pub struct SkylineLdl {
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    /// Unit lower rows; the diagonal slot holds `D`.
    values: Vec<f64>,
}

impl SkylineLdl {
    /// Factors `P A Pᵀ = L D Lᵀ` with RCM ordering. Fails with the original
    /// row of the first zero pivot.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let perm = rcm_ordering(a);
        Self::factor_with(a, perm)
    }

    pub fn factor_with(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.rows;
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first = vec![0usize; n];
        let mut start = vec![0usize; n + 1];
        for (new, &old) in perm.iter().enumerate() {
            first[new] = a
                .row(old)
                .map(|(j, _)| inv[j])
                .min()
                .unwrap_or(new)
                .min(new);
            start[new + 1] = start[new] + (new - first[new] + 1);
        }
        let mut values = vec![0.0; start[n]];
        for (new, &old) in perm.iter().enumerate() {
            for (j, v) in a.row(old) {
                let jn = inv[j];
                if jn <= new {
                    values[start[new] + jn - first[new]] += v;
                }
            }
        }
        // t[k] = l_ik d_k for the current row.
        let mut t = vec![0.0; n];
        for i in 0..n {
            let fi = first[i];
            let ri = start[i] - fi;
            for j in fi..i {
                let fj = first[j];
                let rj = start[j] - fj;
                let mut s = values[ri + j];
                for k in fi.max(fj)..j {
                    s -= t[k] * values[rj + k];
                }
                t[j] = s;
                values[ri + j] = s / values[rj + j];
            }
            let mut d = values[ri + i];
            for k in fi..i {
                d -= t[k] * values[ri + k];
            }
            if d == 0.0 || !d.is_finite() {
                return Err(Error::SingularPivot { row: perm[i] });
            }
            values[ri + i] = d;
        }
        Ok(Self {
            perm,
            first,
            start,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Number of negative pivots, which equals the number of negative
    /// eigenvalues (Sylvester's law of inertia).
    pub fn negative_pivots(&self) -> usize {
        (0..self.dim())
            .filter(|&i| self.values[self.start[i] + i - self.first[i]] < 0.0)
            .count()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let ri = self.start[i] - fi;
            let mut s = y[i];
            for k in fi..i {
                s -= self.values[ri + k] * y[k];
            }
            y[i] = s;
        }
        for i in 0..n {
            y[i] /= self.values[self.start[i] + i - self.first[i]];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let ri = self.start[i] - fi;
            let yi = y[i];
            for k in fi..i {
                y[k] -= self.values[ri + k] * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// Number of eigenvalues of the symmetric tridiagonal `(alpha, beta)` below `x`.
fn sturm_count(alpha: &[f64], beta: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..alpha.len() {
        let b2 = if i == 0 {
            0.0
        } else {
            beta[i - 1] * beta[i - 1]
        };
        d = alpha[i] - x - if i == 0 { 0.0 } else { b2 / d };
        if d == 0.0 {
            d = -f64::EPSILON * (alpha[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// `k`-th smallest eigenvalue (0-based) of a symmetric tridiagonal matrix by
/// bisection on the Sturm count.
pub fn tridiagonal_eigenvalue(alpha: &[f64], beta: &[f64], k: usize) -> f64 {
    let n = alpha.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { beta[i - 1].abs() } else { 0.0 }
            + if i + 1 < n { beta[i].abs() } else { 0.0 };
        lo = lo.min(alpha[i] - r);
        hi = hi.max(alpha[i] + r);
    }
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    lo -= 1e-12 * span;
    hi += 1e-12 * span;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(alpha, beta, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LanczosOutcome {
    pub ritz_min: f64,
    pub ritz_max: f64,
    pub iterations: usize,
    /// Largest Ritz value after each step.
    pub history: Vec<f64>,
}

/// Lanczos with full reorthogonalisation on a symmetric operator, stopped when
/// the largest Ritz value changes by less than `tol` (relative) over three
/// steps, on breakdown, or after `max_iter` steps.
pub fn lanczos<F>(n: usize, max_iter: usize, tol: f64, mut op: F) -> Result<LanczosOutcome>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let max_iter = max_iter.min(n).max(1);
    // Deterministic pseudo-random start vector.
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            0.5 + (state >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect();
    let nv = math::vec_norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let mut history = Vec::new();
    let mut ritz_min = 0.0;
    let mut ritz_max = 0.0;
    for k in 0..max_iter {
        op(&v, &mut w)?;
        let a = math::vec_dot(&v, &w);
        basis.push(v.clone());
        alpha.push(a);
        // Full reorthogonalisation (twice for stability).
        for _ in 0..2 {
            for q in &basis {
                let c = math::vec_dot(q, &w);
                for i in 0..n {
                    w[i] -= c * q[i];
                }
            }
        }
        let m = alpha.len();
        ritz_min = tridiagonal_eigenvalue(&alpha, &beta, 0);
        ritz_max = tridiagonal_eigenvalue(&alpha, &beta, m - 1);
        history.push(ritz_max);
        let b = math::vec_norm(&w);
        let scale = ritz_max.abs().max(ritz_min.abs()).max(f64::MIN_POSITIVE);
        if b <= 1e-12 * scale {
            break;
        }
        if k >= 3 {
            let old = history[k - 3];
            if (ritz_max - old).abs() <= tol * ritz_max.abs() && k >= 10 {
                break;
            }
        }
        beta.push(b);
        for i in 0..n {
            v[i] = w[i] / b;
        }
    }
    Ok(LanczosOutcome {
        ritz_min,
        ritz_max,
        iterations: alpha.len(),
        history,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CondMethod {
    /// Inverse Lanczos with a sparse `L D Lᵀ` factor.
    Direct,
    /// Inverse Lanczos with inner CG solves.
    InnerCg,
    /// Inner solves failed: `kappa` is the ratio of the largest to the
    /// smallest Ritz magnitude of the forward run, a lower bound.
    LowerBound,
}

/// Extreme eigenvalue magnitudes and their ratio. For indefinite matrices
/// `lambda_max`/`lambda_min` are the largest/smallest `|λ|`, so `kappa` is
/// still the 2-norm condition number.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CondEstimate {
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub kappa: f64,
    pub method: CondMethod,
    pub lanczos_iterations: usize,
    /// At least one negative eigenvalue was detected.
    pub indefinite: bool,
}

impl CondEstimate {
    pub fn is_lower_bound(&self) -> bool {
        self.method == CondMethod::LowerBound
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CondOptions {
    pub max_iter: usize,
    /// Stagnation tolerance on the extreme Ritz values.
    pub tol: f64,
    /// Use the skyline factor when its work estimate is below this many flops.
    pub direct_work_limit: f64,
    pub inner_rtol: f64,
}

impl Default for CondOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-5,
            direct_work_limit: 2e10,
            inner_rtol: 1e-10,
        }
    }
}

/// Direct factor when affordable, else `None`.
pub fn try_factor(a: &CsrMatrix, work_limit: f64) -> Option<Result<SkylineLdl>> {
    let perm = rcm_ordering(a);
    let (_, work) = profile_size(a, &perm);
    (work <= work_limit).then(|| SkylineLdl::factor_with(a, perm))
}

/// 2-norm condition number `max |λ| / min |λ|` of a symmetric matrix.
pub fn cond_estimate(a: &CsrMatrix, opts: &CondOptions) -> Result<CondEstimate> {
    let n = a.rows;
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let forward = lanczos(n, opts.max_iter, opts.tol, |x, y| {
        a.matvec(x, y);
        Ok(())
    })?;
    let lambda_max = forward.ritz_max.abs().max(forward.ritz_min.abs());
    let lower_bound = |iters: usize| {
        let lmin = if forward.ritz_min > 0.0 {
            forward.ritz_min
        } else {
            0.0
        };
        CondEstimate {
            lambda_max,
            lambda_min: lmin,
            kappa: if lmin > 0.0 {
                lambda_max / lmin
            } else {
                f64::INFINITY
            },
            method: CondMethod::LowerBound,
            lanczos_iterations: iters,
            indefinite: forward.ritz_min < 0.0,
        }
    };
    let finish = |mu: &LanczosOutcome, method, indefinite: bool| {
        let lambda_min = 1.0 / mu.ritz_max.abs().max(mu.ritz_min.abs());
        CondEstimate {
            lambda_max,
            lambda_min,
            kappa: (lambda_max / lambda_min).max(1.0),
            method,
            lanczos_iterations: forward.iterations + mu.iterations,
            indefinite,
        }
    };
    match try_factor(a, opts.direct_work_limit) {
        Some(Ok(ldl)) => {
            let indefinite = ldl.negative_pivots() > 0;
            let mu = lanczos(n, opts.max_iter, opts.tol, |x, y| {
                y.copy_from_slice(&ldl.solve(x));
                Ok(())
            })?;
            let scale = mu.ritz_max.abs().max(mu.ritz_min.abs());
            if scale > 0.0 && scale.is_finite() {
                Ok(finish(&mu, CondMethod::Direct, indefinite))
            } else {
                Ok(lower_bound(forward.iterations + mu.iterations))
            }
        }
        Some(Err(_)) => Ok(lower_bound(forward.iterations)),
        None => {
            let mu = lanczos(n, opts.max_iter, opts.tol, |x, y| {
                let r = solve_cg(a, x, opts.inner_rtol, None, Precond::Jacobi);
                if !r.converged {
                    return Err(Error::Unsupported("inner solve did not converge".into()));
                }
                y.copy_from_slice(&r.solution);
                Ok(())
            });
            match mu {
                Ok(mu) if mu.ritz_min > 0.0 => Ok(finish(&mu, CondMethod::InnerCg, false)),
                _ => Ok(lower_bound(forward.iterations)),
            }
        }
    }
}

/// Solves a symmetric system with the skyline `L D Lᵀ` factor when
/// affordable, CG otherwise. A direct solve counts as converged when the
/// factorisation succeeds and the relative residual is at most
/// `max(rtol, 1e-8)`.
pub fn solve_symmetric(a: &CsrMatrix, b: &[f64], rtol: f64, work_limit: f64) -> SolveReport {
    match try_factor(a, work_limit) {
        Some(Ok(ldl)) => {
            let x = ldl.solve(b);
            let residual = relative_residual(a, &x, b);
            SolveReport {
                converged: residual.is_finite() && residual <= rtol.max(1e-8),
                solution: x,
                iterations: 1,
                residual,
            }
        }
        Some(Err(_)) => {
            let mut r = solve_cg(a, b, rtol, None, Precond::Jacobi);
            r.converged = false;
            r
        }
        None => solve_cg(a, b, rtol, None, Precond::Jacobi),
    }
}
