//! Joint radar/communication transmit beamforming.
//!
//! For fixed surface coefficients the radar SNR denominator does not depend
//! on the precoders, so the design problem is
//!
//! ```text
//! maximize   tr(H_T W Wᴴ H_Tᴴ) = ‖a‖²·aᴴ(W Wᴴ)a
//! over       W_r ∈ C^{M×M}, w_1..w_K ∈ C^M
//! subject to SINR_k ≥ ξ for every user, tr(W Wᴴ) = P_BS,
//! ```
//!
//! with a the one-way echo cascade. Substituting covariances
//! R_r = W_r W_rᴴ and R_k = w_k w_kᴴ and relaxing the rank-one requirement
//! turns each SINR constraint into a linear one,
//!
//! ```text
//! (1 + 1/ξ)·u_kᴴ R_k u_k  ≥  u_kᴴ R u_k + σ² + d_k,    R = R_r + Σ_i R_i,
//! ```
//!
//! (multiply the SINR inequality through by its denominator and collect
//! terms; d_k is the dynamic noise the surface forwards to user k), and the
//! objective into a linear function of R. The relaxation is tight: from any
//! feasible covariance point, w_k = R_k u_k/√(u_kᴴR_ku_k) and
//! W_r = (R − Σ w_kw_kᴴ)^{1/2} reproduce the objective value, the transmit
//! power, and every user's SINR *exactly* (the remainder is PSD because
//! R_k ⪰ w_kw_kᴴ is a Schur complement of [[R_k, R_ku_k],[u_kᴴR_k, u_kᴴR_ku_k]]).
//!
//! Two structural reductions keep the semidefinite program small:
//!
//! * Every quadratic form above involves only a and u_1..u_K, so projecting
//!   any feasible R onto S = span{a, u_1..u_K} preserves the objective and
//!   the constraint left-hand sides while freeing transmit power (the
//!   projection can only shrink the trace); rescaling back to the full
//!   budget then only helps. An optimum therefore lives on S, and the
//!   solver works with (K+1) Hermitian blocks of dimension r = dim S ≤ K+1
//!   instead of M×M matrices.
//! * The power constraint holds with equality at any optimum, because
//!   scaling all covariances up is feasible and increases the objective.
//!
//! The reduced problem is solved by a log-barrier path-following method
//! written directly against this structure (blocks of at most K+1 rows and
//! a handful of linear constraints — a generic SDP solver would be far more
//! machinery than the problem warrants). A zero-forcing construction gives
//! the strictly feasible start; when it fails, a max-min-slack phase I
//! either produces one or certifies infeasibility together with the most
//! violated user constraint.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{
    c, hermitian_cholesky, hermitian_part, hermitian_sqrt, pd_inverse, CMat, CVec,
};
use crate::signal::Precoders;
use crate::{Error, Result};

// ─── Problem statement ──────────────────────────────────────────────────────

/// One beamforming instance: echo cascade, effective user channels, and the
/// scalar constants of the constraint set.
#[derive(Debug, Clone)]
pub struct BeamformProblem {
    /// One-way echo cascade a = Gᴴ Ψ_r h_at.
    pub cascade: CVec,
    /// Effective user channels u_k (each length M).
    pub users: Vec<CVec>,
    /// Dynamic noise forwarded to each user, σ_v²‖Ψ_tᴴt_k‖² (0 when the
    /// surface is passive). Same length as `users`.
    pub forwarded_noise: Vec<f64>,
    /// User receiver noise power σ².
    pub sigma2: f64,
    /// Per-user SINR target ξ, linear. `f64::INFINITY` is accepted and
    /// yields the (always infeasible for σ² > 0) limiting constraint.
    pub xi: f64,
    /// Transmit power budget P_BS.
    pub p_bs: f64,
}

impl BeamformProblem {
    pub fn validate(&self) -> Result<()> {
        let m = self.cascade.len();
        if m == 0 {
            return Err(Error::Dimension("antenna count must be positive".to_string()));
        }
        if self.users.len() != self.forwarded_noise.len() {
            return Err(Error::Dimension(format!(
                "{} users but {} forwarded-noise entries",
                self.users.len(),
                self.forwarded_noise.len()
            )));
        }
        for (k, u) in self.users.iter().enumerate() {
            if u.len() != m {
                return Err(Error::Dimension(format!(
                    "user {k} channel has {} entries, expected {m}",
                    u.len()
                )));
            }
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(Error::Domain(format!(
                "σ² must be positive and finite, got {}",
                self.sigma2
            )));
        }
        if !(self.xi > 0.0) || self.xi.is_nan() {
            return Err(Error::Domain(format!(
                "SINR target must be positive, got {}",
                self.xi
            )));
        }
        if !(self.p_bs > 0.0) || !self.p_bs.is_finite() {
            return Err(Error::Domain(format!(
                "power budget must be positive and finite, got {}",
                self.p_bs
            )));
        }
        if let Some(d) = self.forwarded_noise.iter().find(|d| !(**d >= 0.0)) {
            return Err(Error::Domain(format!(
                "forwarded noise must be non-negative, got {d}"
            )));
        }
        Ok(())
    }
}

// ─── SINR constraint in linear form ─────────────────────────────────────────

/// The linearized SINR constraint of one user:
/// `desired_gain`·u_kᴴR_ku_k − u_kᴴRu_k ≥ `rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSinrConstraint {
    pub user: usize,
    /// 1 + 1/ξ (exactly 1 in the ξ → ∞ limit).
    pub desired_gain: f64,
    /// σ² + d_k.
    pub rhs: f64,
}

/// Rewrites SINR_k ≥ ξ as a constraint linear in the covariances. The
/// ξ → ∞ limit is emitted as stated (gain 1), even though it is infeasible
/// whenever σ² > 0 — callers relying on feasibility get the honest verdict
/// from the solver instead of a silently clamped target.
pub fn compile_sinr_constraint(
    user: usize,
    xi: f64,
    sigma2: f64,
    forwarded_noise: f64,
) -> Result<LinearSinrConstraint> {
    if !(xi > 0.0) || xi.is_nan() {
        return Err(Error::Domain(format!(
            "SINR target must be positive, got {xi}"
        )));
    }
    if !(sigma2 > 0.0) || !forwarded_noise.is_finite() || forwarded_noise < 0.0 {
        return Err(Error::Domain(format!(
            "need σ² > 0 and forwarded noise ≥ 0, got {sigma2} and {forwarded_noise}"
        )));
    }
    Ok(LinearSinrConstraint {
        user,
        desired_gain: 1.0 + 1.0 / xi,
        rhs: sigma_rhs(sigma2, forwarded_noise),
    })
}

fn sigma_rhs(sigma2: f64, forwarded_noise: f64) -> f64 {
    sigma2 + forwarded_noise
}

impl LinearSinrConstraint {
    /// Slack of this constraint at a covariance point; non-negative exactly
    /// when the SINR target is met. `covariances` is [R_r, R_1, …, R_K].
    pub fn slack(&self, users: &[CVec], covariances: &[CMat]) -> Result<f64> {
        if covariances.len() != users.len() + 1 {
            return Err(Error::Dimension(format!(
                "expected {} covariance blocks, got {}",
                users.len() + 1,
                covariances.len()
            )));
        }
        let u = users.get(self.user).ok_or_else(|| {
            Error::Dimension(format!("constraint references missing user {}", self.user))
        })?;
        let own = quadratic_form(&covariances[self.user + 1], u);
        let total: f64 = covariances.iter().map(|r| quadratic_form(r, u)).sum();
        Ok(self.desired_gain * own - total - self.rhs)
    }
}

/// SINR of user k implied by a covariance point (the value the exact
/// rank-one recovery attains): u_kᴴR_ku_k / (u_kᴴ(R−R_k)u_k + σ² + d_k).
pub fn covariance_sinr(
    k: usize,
    users: &[CVec],
    covariances: &[CMat],
    sigma2: f64,
    forwarded_noise: f64,
) -> Result<f64> {
    if covariances.len() != users.len() + 1 {
        return Err(Error::Dimension(format!(
            "expected {} covariance blocks, got {}",
            users.len() + 1,
            covariances.len()
        )));
    }
    let u = users
        .get(k)
        .ok_or_else(|| Error::Dimension(format!("no user {k}")))?;
    let own = quadratic_form(&covariances[k + 1], u);
    let rest: f64 = covariances
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != k + 1)
        .map(|(_, r)| quadratic_form(r, u))
        .sum();
    Ok(own / (rest + sigma_rhs(sigma2, forwarded_noise)))
}

fn quadratic_form(r: &CMat, v: &CVec) -> f64 {
    (v.adjoint() * r * v)[(0, 0)].re
}

// ─── Hermitian ↔ real coordinates ───────────────────────────────────────────
//
// hvec is the isometry between d×d Hermitian matrices and R^{d²}: the d real
// diagonal entries first, then (√2·Re A_ij, √2·Im A_ij) for each pair i < j
// in lexicographic order, so that tr(AB) = hvec(A)·hvec(B).

fn hvec_dim(d: usize) -> usize {
    d * d
}

fn hvec(a: &CMat, out: &mut [f64]) {
    let d = a.nrows();
    for q in 0..d {
        out[q] = a[(q, q)].re;
    }
    let mut idx = d;
    let sqrt2 = std::f64::consts::SQRT_2;
    for i in 0..d {
        for j in (i + 1)..d {
            out[idx] = sqrt2 * a[(i, j)].re;
            out[idx + 1] = sqrt2 * a[(i, j)].im;
            idx += 2;
        }
    }
}

fn unhvec(v: &[f64], d: usize) -> CMat {
    let mut a = CMat::zeros(d, d);
    for q in 0..d {
        a[(q, q)] = c(v[q], 0.0);
    }
    let mut idx = d;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        for j in (i + 1)..d {
            let entry = c(v[idx] * inv_sqrt2, v[idx + 1] * inv_sqrt2);
            a[(i, j)] = entry;
            a[(j, i)] = entry.conj();
            idx += 2;
        }
    }
    a
}

/// The α-th orthonormal Hermitian basis element of dimension d, matching
/// the hvec ordering.
fn hvec_basis(d: usize, alpha: usize) -> CMat {
    let mut e = CMat::zeros(d, d);
    if alpha < d {
        e[(alpha, alpha)] = c(1.0, 0.0);
        return e;
    }
    let mut idx = d;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        for j in (i + 1)..d {
            if alpha == idx {
                e[(i, j)] = c(inv_sqrt2, 0.0);
                e[(j, i)] = c(inv_sqrt2, 0.0);
                return e;
            }
            if alpha == idx + 1 {
                e[(i, j)] = c(0.0, inv_sqrt2);
                e[(j, i)] = c(0.0, -inv_sqrt2);
                return e;
            }
            idx += 2;
        }
    }
    unreachable!("basis index {alpha} out of range for dimension {d}")
}

// ─── Barrier solver over products of PSD cones ──────────────────────────────

/// maximize objective·x over Hermitian PSD blocks (in hvec coordinates)
/// plus optional free scalars, subject to strict linear inequalities
/// γ_i·x ≥ rhs_i and one linear equality.
struct ConeProgram {
    block_dims: Vec<usize>,
    n_scalars: usize,
    objective: DVector<f64>,
    ineq: Vec<(DVector<f64>, f64)>,
    eq: (DVector<f64>, f64),
}

struct ConeSolution {
    x: DVector<f64>,
    newton_iters: usize,
    rounds: usize,
    converged: bool,
}

/// Path-following parameters. The gap target is relative to the current
/// objective magnitude (with an absolute floor for objectives near zero).
struct PathParams {
    rel_gap: f64,
    gap_floor: f64,
    t0_scale: f64,
    max_newton: usize,
}

impl ConeProgram {
    fn n(&self) -> usize {
        self.block_dims.iter().map(|d| hvec_dim(*d)).sum::<usize>() + self.n_scalars
    }

    fn block_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.block_dims.len());
        let mut off = 0;
        for d in &self.block_dims {
            offsets.push(off);
            off += hvec_dim(*d);
        }
        offsets
    }

    /// Barrier parameter ν: each d-dimensional PSD block contributes d,
    /// each scalar log constraint 1.
    fn nu(&self) -> f64 {
        self.block_dims.iter().sum::<usize>() as f64 + self.ineq.len() as f64
    }

    /// −Σ log det X_b − Σ log s_i at x, or None outside the interior.
    fn barrier(&self, x: &DVector<f64>) -> Option<f64> {
        let mut value = 0.0;
        for (off, d) in self.block_offsets().iter().zip(&self.block_dims) {
            let block = unhvec(&x.as_slice()[*off..*off + hvec_dim(*d)], *d);
            let l = hermitian_cholesky(&block)?;
            let logdet: f64 = (0..*d).map(|i| l[(i, i)].re.ln()).sum::<f64>() * 2.0;
            value -= logdet;
        }
        for (gamma, rhs) in &self.ineq {
            let s = gamma.dot(x) - rhs;
            if !(s > 0.0) {
                return None;
            }
            value -= s.ln();
        }
        Some(value)
    }

    fn solve(&self, x0: DVector<f64>, params: &PathParams) -> Result<ConeSolution> {
        let offsets = self.block_offsets();
        let nu = self.nu();
        let mut x = x0;
        if self.barrier(&x).is_none() {
            return Err(Error::Numerical(
                "barrier start is not strictly feasible".to_string(),
            ));
        }

        let mut t = nu / params.t0_scale.max(1e-300);
        let mut newton_total = 0usize;
        let mut rounds = 0usize;
        let mut converged = false;

        'outer: for _ in 0..80 {
            rounds += 1;
            // Center at the current t.
            for _ in 0..60 {
                if newton_total >= params.max_newton {
                    break 'outer;
                }
                let (grad, hess) = self.derivatives(&x, t, &offsets);
                let Some((dx, decrement)) = self.newton_step(&grad, &hess, &x) else {
                    break 'outer; // Newton system beyond rescue at this t
                };
                newton_total += 1;
                if decrement / 2.0 <= 1e-11 {
                    break;
                }
                let slope = grad.dot(&dx);
                if !(slope < 0.0) {
                    break; // no descent direction left at this t
                }
                let f0 = -t * self.objective.dot(&x) + self.barrier(&x).expect("interior");
                let mut alpha = 1.0;
                let mut stepped = false;
                for _ in 0..70 {
                    let cand = &x + &dx * alpha;
                    if let Some(bar) = self.barrier(&cand) {
                        let f = -t * self.objective.dot(&cand) + bar;
                        if f <= f0 + 0.25 * alpha * slope {
                            x = cand;
                            stepped = true;
                            break;
                        }
                    }
                    alpha *= 0.5;
                }
                if !stepped {
                    break; // no further progress possible at this t
                }
            }
            let obj = self.objective.dot(&x);
            if nu / t <= params.rel_gap * obj.abs().max(params.gap_floor) {
                converged = true;
                break;
            }
            t *= 10.0;
        }
        Ok(ConeSolution {
            x,
            newton_iters: newton_total,
            rounds,
            converged,
        })
    }

    /// Gradient and Hessian of f_t(x) = −t·objective·x + barrier(x).
    fn derivatives(
        &self,
        x: &DVector<f64>,
        t: f64,
        offsets: &[usize],
    ) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n();
        let mut grad = -&self.objective * t;
        let mut hess = DMatrix::<f64>::zeros(n, n);
        let mut scratch = vec![0.0f64; n];

        for (off, d) in offsets.iter().zip(&self.block_dims) {
            let dim = hvec_dim(*d);
            let block = unhvec(&x.as_slice()[*off..*off + dim], *d);
            let inv = pd_inverse(&block).expect("interior point has PD blocks");
            hvec(&inv, &mut scratch[..dim]);
            for (i, v) in scratch[..dim].iter().enumerate() {
                grad[*off + i] -= v;
            }
            // Hessian of −log det: H[α,β] = tr(X⁻¹E_α X⁻¹ E_β), assembled
            // column by column through the basis.
            for alpha in 0..dim {
                let e = hvec_basis(*d, alpha);
                let s = &inv * e * &inv;
                hvec(&s, &mut scratch[..dim]);
                for beta in 0..dim {
                    hess[(*off + beta, *off + alpha)] += scratch[beta];
                }
            }
        }

        for (gamma, rhs) in &self.ineq {
            let s = gamma.dot(x) - rhs;
            grad.axpy(-1.0 / s, gamma, 1.0);
            // Rank-one update (1/s²)·γγᵀ.
            let w = 1.0 / (s * s);
            hess.syger(w, gamma, gamma, 1.0);
        }
        // syger fills only the lower triangle; mirror it.
        for i in 0..n {
            for j in (i + 1)..n {
                hess[(i, j)] = hess[(j, i)];
            }
        }
        (grad, hess)
    }

    /// Equality-constrained Newton step: solve the KKT system
    /// [H aᵀ; a 0]·[dx; ν] = [−g; r_eq]. Returns (dx, Newton decrement²).
    fn newton_step(
        &self,
        grad: &DVector<f64>,
        hess: &DMatrix<f64>,
        x: &DVector<f64>,
    ) -> Option<(DVector<f64>, f64)> {
        let n = self.n();
        let (a_eq, b_eq) = &self.eq;
        let mut kkt = DMatrix::<f64>::zeros(n + 1, n + 1);
        kkt.view_mut((0, 0), (n, n)).copy_from(hess);
        for i in 0..n {
            kkt[(n, i)] = a_eq[i];
            kkt[(i, n)] = a_eq[i];
        }
        let mut rhs = DVector::<f64>::zeros(n + 1);
        for i in 0..n {
            rhs[i] = -grad[i];
        }
        rhs[n] = b_eq - a_eq.dot(x);

        let solve = |m: DMatrix<f64>| m.lu().solve(&rhs);
        let solution = solve(kkt.clone()).or_else(|| {
            // Ridge fallback for a numerically singular Hessian.
            let mut ridged = kkt;
            for i in 0..n {
                ridged[(i, i)] += 1e-12;
            }
            solve(ridged)
        })?;
        let mut dx = solution.rows(0, n).into_owned();
        if dx.iter().any(|v| !v.is_finite()) {
            return None;
        }
        // An ill-conditioned solve can leave dx drifting off the equality
        // manifold, and the line search would not notice: project the step
        // back so a_eq·(x + dx) = b_eq holds exactly. This is what makes
        // runaway along the objective impossible — the trace stays pinned.
        let r_eq = b_eq - a_eq.dot(x);
        let correction = (a_eq.dot(&dx) - r_eq) / a_eq.norm_squared();
        dx.axpy(-correction, a_eq, 1.0);
        let decrement = -grad.dot(&dx);
        Some((dx, decrement.max(0.0)))
    }
}

// ─── Reduced-space setup ────────────────────────────────────────────────────

struct ReducedSpace {
    /// Orthonormal basis of span{a, u_1..u_K}, M×r.
    basis: CMat,
    /// Vᴴa.
    cascade: CVec,
    /// Vᴴu_k.
    users: Vec<CVec>,
}

fn reduce_to_signal_span(cascade: &CVec, users: &[CVec]) -> ReducedSpace {
    let m = cascade.len();
    let mut cols = Vec::with_capacity(users.len() + 1);
    cols.push(cascade.clone());
    cols.extend(users.iter().cloned());
    let stacked = CMat::from_columns(&cols);
    let qr = stacked.clone().col_piv_qr();
    let q = qr.q();
    let r = qr.r();
    let scale = r.get((0, 0)).map(|v| v.norm()).unwrap_or(0.0);
    let mut rank = 0;
    for i in 0..r.nrows().min(r.ncols()) {
        if r[(i, i)].norm() > 1e-12 * scale.max(1e-300) {
            rank += 1;
        }
    }
    // A completely zero stack still needs a one-dimensional space to carry
    // the power.
    let rank = rank.max(1).min(m);
    let basis = q.columns(0, rank).into_owned();
    let cascade_red = basis.adjoint() * cascade;
    let users_red = users.iter().map(|u| basis.adjoint() * u).collect();
    ReducedSpace {
        basis,
        cascade: cascade_red,
        users: users_red,
    }
}

// ─── Strictly feasible starts ───────────────────────────────────────────────

/// Zero-forcing start in the reduced space: beam k is the k-th column of
/// Ũ(ŨᴴŨ)⁻¹ (unit gain to its own user, none to the others), powered 50%
/// above its SINR requirement; leftover power goes to the radar block along
/// the interference-free part of the cascade, or proportionally into the
/// user beams when no such direction exists. Returns None when the
/// construction fails or ends up outside the strict interior.
fn zero_forcing_start(
    space: &ReducedSpace,
    constraints: &[LinearSinrConstraint],
    program: &ConeProgram,
    p_bs: f64,
) -> Option<DVector<f64>> {
    let r = space.cascade.len();
    let k_users = space.users.len();
    let u_mat = CMat::from_columns(&space.users.iter().cloned().collect::<Vec<_>>());
    let gram = u_mat.adjoint() * &u_mat;
    let gram_inv = pd_inverse(&gram)?;
    let w_zf = &u_mat * &gram_inv;

    let mut blocks: Vec<CMat> = Vec::with_capacity(k_users + 1);
    blocks.push(CMat::zeros(r, r));
    let mut spent = 0.0;
    for (k, cst) in constraints.iter().enumerate() {
        // With unit own-gain and zero cross-gain, the slack is p_k/ξ − rhs.
        let inv_xi = cst.desired_gain - 1.0;
        if inv_xi <= 0.0 {
            return None; // ξ = ∞: zero forcing can never satisfy this
        }
        let p_k = cst.rhs / inv_xi * 1.5;
        let w_k = w_zf.column(k).into_owned();
        spent += p_k * w_k.norm_squared();
        blocks.push(&w_k * w_k.adjoint() * c(p_k, 0.0));
    }
    if !(spent < p_bs) {
        return None;
    }
    let leftover = p_bs - spent;
    // Interference-free radar direction: the cascade component orthogonal
    // to every user channel.
    let proj = &u_mat * (&gram_inv * (u_mat.adjoint() * &space.cascade));
    let a_perp = &space.cascade - proj;
    if a_perp.norm_squared() > 1e-10 * space.cascade.norm_squared().max(1e-300) {
        let dir = &a_perp * c(1.0 / a_perp.norm(), 0.0);
        blocks[0] = &dir * dir.adjoint() * c(leftover, 0.0);
    } else {
        // Scale the user beams up to absorb the budget; their slacks grow.
        let scale = p_bs / spent;
        for block in blocks.iter_mut().skip(1) {
            *block *= c(scale, 0.0);
        }
    }

    // Blend with a trace-preserving multiple of the identity so every block
    // is strictly positive definite, then verify the interior conditions.
    let theta = 1e-4;
    let iso = p_bs / ((k_users + 1) * r) as f64;
    let mut x = DVector::<f64>::zeros(program.n());
    let offsets = program.block_offsets();
    let mut scratch = vec![0.0f64; hvec_dim(r)];
    for (b, block) in blocks.iter().enumerate() {
        let blended = block * c(1.0 - theta, 0.0) + CMat::identity(r, r) * c(theta * iso, 0.0);
        hvec(&blended, &mut scratch);
        for (i, v) in scratch.iter().enumerate() {
            x[offsets[b] + i] = *v;
        }
    }
    program.barrier(&x).map(|_| x)
}

/// Phase I: maximize the minimum constraint slack s over the same cone,
/// from the always-interior isotropic start. Returns a strictly feasible
/// point for the target program, or the infeasibility certificate.
fn phase_one_start(
    program: &ConeProgram,
    constraints: &[LinearSinrConstraint],
    p_bs: f64,
) -> Result<DVector<f64>> {
    let n = program.n();
    let r = program.block_dims[0];
    let blocks = program.block_dims.len();

    let mut aug = ConeProgram {
        block_dims: program.block_dims.clone(),
        n_scalars: 1,
        objective: DVector::zeros(n + 1),
        ineq: Vec::with_capacity(program.ineq.len()),
        eq: (DVector::zeros(n + 1), program.eq.1),
    };
    aug.objective[n] = 1.0;
    for (gamma, rhs) in &program.ineq {
        let mut g = DVector::zeros(n + 1);
        g.rows_mut(0, n).copy_from(gamma);
        g[n] = -1.0; // γ·x − s ≥ rhs
        aug.ineq.push((g, *rhs));
    }
    aug.eq.0.rows_mut(0, n).copy_from(&program.eq.0);

    // Isotropic start: X_b = (P/(blocks·r))·I, s below the minimum slack.
    let mut x = DVector::<f64>::zeros(n + 1);
    let iso = p_bs / (blocks * r) as f64;
    let offsets = program.block_offsets();
    for off in &offsets {
        for q in 0..r {
            x[off + q] = iso;
        }
    }
    let x_main = x.rows(0, n).into_owned();
    let min_slack = program
        .ineq
        .iter()
        .map(|(gamma, rhs)| gamma.dot(&x_main) - rhs)
        .fold(f64::INFINITY, f64::min);
    let s0 = min_slack - 0.1 * (1.0 + min_slack.abs());
    x[n] = s0;

    let rhs_scale = constraints
        .iter()
        .map(|c| c.rhs)
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let solution = aug.solve(
        x,
        &PathParams {
            rel_gap: 0.02,
            gap_floor: 1e-9 * rhs_scale,
            t0_scale: rhs_scale.max(s0.abs()),
            max_newton: 400,
        },
    )?;
    let s_star = solution.x[n];
    if s_star <= 0.0 {
        // Certify: find the most violated constraint at the max-min point.
        let x_best = solution.x.rows(0, n).into_owned();
        let (worst, violation) = program
            .ineq
            .iter()
            .enumerate()
            .map(|(i, (gamma, rhs))| (i, rhs - gamma.dot(&x_best)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least one constraint in phase I");
        return Err(Error::Infeasible {
            most_violated: format!("user {} SINR target", constraints[worst].user),
            violation: violation.max(0.0),
        });
    }
    Ok(solution.x.rows(0, n).into_owned())
}

// ─── Main solver ────────────────────────────────────────────────────────────

/// Result of one beamforming solve.
#[derive(Debug, Clone)]
pub struct BeamformSolution {
    /// Recovered precoders, rescaled to the exact power budget.
    pub precoders: Precoders,
    /// Optimal covariance blocks [R_r, R_1, …, R_K] in the full space.
    pub covariances: Vec<CMat>,
    /// Radar SNR numerator ‖a‖²·aᴴ(W Wᴴ)a at the recovered precoders.
    pub objective: f64,
    /// Achieved SINR per user at the recovered precoders.
    pub achieved_sinrs: Vec<f64>,
    /// achieved_sinr − ξ per user (≥ −tolerance at a feasible solution).
    pub sinr_slacks: Vec<f64>,
    /// Whether the barrier reached its duality-gap target (false only when
    /// the iteration cap intervened).
    pub converged: bool,
    pub newton_iters: usize,
    pub barrier_rounds: usize,
}

/// Solves the beamforming problem to global optimality (the relaxation is
/// tight, so the recovered precoders are optimal for the original problem).
///
/// Errors with [`Error::Infeasible`] when no precoders can meet every SINR
/// target within the power budget, naming the most violated user.
pub fn optimize_beamformers(problem: &BeamformProblem) -> Result<BeamformSolution> {
    problem.validate()?;
    let m = problem.cascade.len();
    let k_users = problem.users.len();
    let a_norm2 = problem.cascade.norm_squared();

    // No users: all power into the echo direction, in closed form.
    if k_users == 0 {
        let w_r = if a_norm2 > 0.0 {
            let mut w = CMat::zeros(m, m);
            let dir = &problem.cascade * c((problem.p_bs / a_norm2).sqrt(), 0.0);
            w.column_mut(0).copy_from(&dir);
            w
        } else {
            CMat::identity(m, m) * c((problem.p_bs / m as f64).sqrt(), 0.0)
        };
        let precoders = Precoders {
            w_r: w_r.clone(),
            w_c: CMat::zeros(m, 0),
        };
        let objective = a_norm2 * quadratic_form(&(&w_r * w_r.adjoint()), &problem.cascade);
        return Ok(BeamformSolution {
            covariances: vec![&w_r * w_r.adjoint()],
            precoders,
            objective,
            achieved_sinrs: Vec::new(),
            sinr_slacks: Vec::new(),
            converged: true,
            newton_iters: 0,
            barrier_rounds: 0,
        });
    }

    // A user with a zero channel can never reach a positive SINR target.
    for (k, u) in problem.users.iter().enumerate() {
        if u.norm_squared() == 0.0 {
            return Err(Error::Infeasible {
                most_violated: format!("user {k} SINR target"),
                violation: problem.xi,
            });
        }
    }

    let constraints: Vec<LinearSinrConstraint> = (0..k_users)
        .map(|k| {
            compile_sinr_constraint(k, problem.xi, problem.sigma2, problem.forwarded_noise[k])
        })
        .collect::<Result<_>>()?;

    let space = reduce_to_signal_span(&problem.cascade, &problem.users);
    let r = space.cascade.len();
    let blocks = k_users + 1;
    let dim = hvec_dim(r);
    let n = blocks * dim;

    // Objective: ‖a‖²·Σ_b ⟨ããᴴ, X_b⟩.
    let c_tilde = &space.cascade * space.cascade.adjoint() * c(a_norm2, 0.0);
    let mut c_block = vec![0.0; dim];
    hvec(&c_tilde, &mut c_block);
    let mut objective = DVector::<f64>::zeros(n);
    for b in 0..blocks {
        for (i, v) in c_block.iter().enumerate() {
            objective[b * dim + i] = *v;
        }
    }

    // Inequalities: per user, coefficient (gain−1) on its own block and −1
    // on every other block, applied to ũ_kũ_kᴴ.
    let mut ineq = Vec::with_capacity(k_users);
    let mut scratch = vec![0.0; dim];
    for cst in &constraints {
        let outer = &space.users[cst.user] * space.users[cst.user].adjoint();
        let mut gamma = DVector::<f64>::zeros(n);
        for b in 0..blocks {
            let coeff = if b == cst.user + 1 {
                cst.desired_gain - 1.0
            } else {
                -1.0
            };
            hvec(&(&outer * c(coeff, 0.0)), &mut scratch);
            for (i, v) in scratch.iter().enumerate() {
                gamma[b * dim + i] = *v;
            }
        }
        ineq.push((gamma, cst.rhs));
    }

    // Equality: total trace equals the power budget.
    let mut a_eq = DVector::<f64>::zeros(n);
    for b in 0..blocks {
        for q in 0..r {
            a_eq[b * dim + q] = 1.0;
        }
    }

    let program = ConeProgram {
        block_dims: vec![r; blocks],
        n_scalars: 0,
        objective,
        ineq,
        eq: (a_eq, problem.p_bs),
    };

    let x0 = match zero_forcing_start(&space, &constraints, &program, problem.p_bs) {
        Some(x0) => x0,
        None => phase_one_start(&program, &constraints, problem.p_bs)?,
    };

    let obj0 = program.objective.dot(&x0).abs();
    let solution = program.solve(
        x0,
        &PathParams {
            rel_gap: 1e-8,
            gap_floor: 1e-30,
            t0_scale: (obj0 * 10.0).max(1e-30),
            max_newton: 500,
        },
    )?;

    // Lift the blocks back to the antenna space and recover precoders.
    let offsets = program.block_offsets();
    let covariances: Vec<CMat> = offsets
        .iter()
        .map(|off| {
            let x_b = unhvec(&solution.x.as_slice()[*off..*off + dim], r);
            hermitian_part(&(&space.basis * x_b * space.basis.adjoint()))
        })
        .collect();
    let r_total: CMat = covariances
        .iter()
        .skip(1)
        .fold(covariances[0].clone(), |acc, r| acc + r);

    let mut w_cols = Vec::with_capacity(k_users);
    let mut rank1_sum = CMat::zeros(m, m);
    for (k, u) in problem.users.iter().enumerate() {
        let gain = quadratic_form(&covariances[k + 1], u);
        if gain <= 0.0 {
            return Err(Error::Numerical(format!(
                "covariance of user {k} lost its channel component"
            )));
        }
        let w_k = (&covariances[k + 1] * u) * c(1.0 / gain.sqrt(), 0.0);
        rank1_sum += &w_k * w_k.adjoint();
        w_cols.push(w_k);
    }
    let remainder = hermitian_part(&(&r_total - &rank1_sum));
    let w_r = hermitian_sqrt(&remainder, 1e-7)?;
    let mut precoders = Precoders {
        w_r,
        w_c: CMat::from_columns(&w_cols),
    };

    // The barrier keeps the trace equality to rounding error; make the
    // returned power exact.
    let scale = (problem.p_bs / precoders.total_power()).sqrt();
    precoders.w_r *= c(scale, 0.0);
    precoders.w_c *= c(scale, 0.0);

    let objective = a_norm2
        * ((problem.cascade.adjoint() * precoders.stacked()).norm_squared());
    let mut achieved = Vec::with_capacity(k_users);
    let mut slacks = Vec::with_capacity(k_users);
    for (k, u) in problem.users.iter().enumerate() {
        let sinr = precoder_sinr(u, &precoders, k, problem.sigma2, problem.forwarded_noise[k]);
        achieved.push(sinr);
        slacks.push(sinr - problem.xi);
    }

    Ok(BeamformSolution {
        precoders,
        covariances,
        objective,
        achieved_sinrs: achieved,
        sinr_slacks: slacks,
        converged: solution.converged,
        newton_iters: solution.newton_iters,
        barrier_rounds: solution.rounds,
    })
}

/// SINR of user k at explicit precoders, with the forwarded-noise constant
/// already folded in.
pub fn precoder_sinr(
    u_k: &CVec,
    precoders: &Precoders,
    k: usize,
    sigma2: f64,
    forwarded_noise: f64,
) -> f64 {
    let desired = u_k.dotc(&precoders.w_c.column(k).into_owned()).norm_sqr();
    let mut denom = (u_k.adjoint() * &precoders.w_r).norm_squared();
    for i in 0..precoders.w_c.ncols() {
        if i != k {
            denom += u_k.dotc(&precoders.w_c.column(i).into_owned()).norm_sqr();
        }
    }
    desired / (denom + sigma_rhs(sigma2, forwarded_noise))
}

// ─── Closed-form reference for M = 2, K = 1 ────────────────────────────────
//
// With a single user it is never harmful to move radar power into the
// user's covariance: the objective and the power are unchanged and the
// constraint slack only grows. The problem therefore reduces to one 2×2
// PSD matrix R with tr R = P, which the Pauli parametrization
// R = (P/2)I + x σ_x + y σ_y + z σ_z turns into optimizing a linear
// function of w = (x,y,z) over the ball ‖w‖ ≤ P/2 cut by one half-space —
// solvable in closed form with entirely different machinery than the
// barrier method, which is what makes it a trustworthy cross-check.

/// Optimal objective ‖a‖²·aᴴRa for the two-antenna, single-user problem,
/// by direct geometry. Also enforces the same feasibility verdict contract
/// as [`optimize_beamformers`].
pub fn two_antenna_single_user_optimum(
    cascade: &CVec,
    user: &CVec,
    xi: f64,
    sigma2: f64,
    forwarded_noise: f64,
    p_bs: f64,
) -> Result<f64> {
    if cascade.len() != 2 || user.len() != 2 {
        return Err(Error::Dimension(
            "the closed-form reference handles exactly two antennas".to_string(),
        ));
    }
    if !(xi > 0.0) || !(sigma2 > 0.0) || !(p_bs > 0.0) {
        return Err(Error::Domain(
            "need positive SINR target, noise power, and power budget".to_string(),
        ));
    }
    let s = p_bs / 2.0;
    let pauli = |v: &CVec| -> [f64; 3] {
        let cross = v[0].conj() * v[1];
        [2.0 * cross.re, 2.0 * cross.im, v[0].norm_sqr() - v[1].norm_sqr()]
    };
    let c_vec = pauli(cascade);
    let q_vec = pauli(user);
    let a_norm2 = cascade.norm_squared();
    let u_norm2 = user.norm_squared();
    // Constraint: uᴴRu ≥ ξ(σ² + d)  ⇔  q·w ≥ b.
    let b = xi * sigma_rhs(sigma2, forwarded_noise) - s * u_norm2;

    let norm3 = |v: &[f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let dot3 = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let c_norm = norm3(&c_vec);
    let q_norm = norm3(&q_vec);

    if b > s * q_norm {
        return Err(Error::Infeasible {
            most_violated: "user 0 SINR target".to_string(),
            violation: (b - s * q_norm) / xi,
        });
    }

    let obj_of = |w: &[f64; 3]| a_norm2 * (s * a_norm2 + dot3(&c_vec, w));

    if c_norm == 0.0 {
        // Objective is constant; any feasible point attains it.
        return Ok(obj_of(&[0.0, 0.0, 0.0]));
    }
    let w_free = [
        s * c_vec[0] / c_norm,
        s * c_vec[1] / c_norm,
        s * c_vec[2] / c_norm,
    ];
    if dot3(&q_vec, &w_free) >= b {
        return Ok(obj_of(&w_free));
    }
    // The constraint is active: optimize over the circle {‖w‖ = S, q·w = b}.
    let h = b / q_norm;
    let q_hat = [q_vec[0] / q_norm, q_vec[1] / q_norm, q_vec[2] / q_norm];
    let radius = (s * s - h * h).max(0.0).sqrt();
    let c_par = dot3(&c_vec, &q_hat);
    let c_perp = [
        c_vec[0] - c_par * q_hat[0],
        c_vec[1] - c_par * q_hat[1],
        c_vec[2] - c_par * q_hat[2],
    ];
    let c_perp_norm = norm3(&c_perp);
    let w = if c_perp_norm > 0.0 {
        [
            h * q_hat[0] + radius * c_perp[0] / c_perp_norm,
            h * q_hat[1] + radius * c_perp[1] / c_perp_norm,
            h * q_hat[2] + radius * c_perp[2] / c_perp_norm,
        ]
    } else {
        [h * q_hat[0], h * q_hat[1], h * q_hat[2]]
    };
    Ok(obj_of(&w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample_rayleigh;
    use crate::rng::{standalone_stream, Purpose};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn random_vec(len: usize, rng: &mut rand_chacha::ChaCha12Rng) -> CVec {
        sample_rayleigh(len, 1, 1.0, rng).unwrap().column(0).into_owned()
    }

    fn random_problem(m: usize, k_users: usize, seed: u64) -> BeamformProblem {
        let mut rng = standalone_stream(seed, 0, Purpose::Oracle);
        BeamformProblem {
            cascade: random_vec(m, &mut rng) * c(0.02, 0.0),
            users: (0..k_users).map(|_| random_vec(m, &mut rng) * c(0.1, 0.0)).collect(),
            forwarded_noise: (0..k_users).map(|_| 1e-5).collect(),
            sigma2: 1e-4,
            xi: 10.0,
            p_bs: 1.0,
        }
    }

    // ─── hvec ───────────────────────────────────────────────────────────

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn hvec_is_an_isometry(seed in 0u64..1000) {
            let mut rng = standalone_stream(seed, 1, Purpose::Oracle);
            let z = sample_rayleigh(4, 4, 1.0, &mut rng).unwrap();
            let a = hermitian_part(&z);
            let z2 = sample_rayleigh(4, 4, 1.0, &mut rng).unwrap();
            let b = hermitian_part(&z2);
            let mut va = vec![0.0; 16];
            let mut vb = vec![0.0; 16];
            hvec(&a, &mut va);
            hvec(&b, &mut vb);
            let dot: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
            let trace = (&a * &b).trace().re;
            prop_assert!((dot - trace).abs() <= 1e-10 * trace.abs().max(1.0));
            // Round trip.
            let back = unhvec(&va, 4);
            prop_assert!((&back - &a).norm() < 1e-12);
        }
    }

    #[test]
    fn hvec_basis_is_orthonormal() {
        let d = 3;
        let mut coords = vec![0.0; hvec_dim(d)];
        for alpha in 0..hvec_dim(d) {
            let e = hvec_basis(d, alpha);
            assert!((&e - e.adjoint()).norm() < 1e-15, "basis must be Hermitian");
            hvec(&e, &mut coords);
            for (beta, v) in coords.iter().enumerate() {
                let expected = if beta == alpha { 1.0 } else { 0.0 };
                assert!((v - expected).abs() < 1e-15, "⟨E_{alpha}, E_{beta}⟩");
            }
        }
    }

    // ─── barrier solver on a known instance ─────────────────────────────

    #[test]
    fn barrier_solver_finds_top_eigenvalue() {
        // maximize ⟨C, X⟩ with tr X = 1, X ⪰ 0 → λ_max(C).
        let c_mat = CMat::from_diagonal(&CVec::from_vec(vec![
            c(1.0, 0.0),
            c(2.0, 0.0),
            c(5.0, 0.0),
        ]));
        let dim = hvec_dim(3);
        let mut obj = DVector::zeros(dim);
        let mut buf = vec![0.0; dim];
        hvec(&c_mat, &mut buf);
        for (i, v) in buf.iter().enumerate() {
            obj[i] = *v;
        }
        let mut a_eq = DVector::zeros(dim);
        for q in 0..3 {
            a_eq[q] = 1.0;
        }
        let program = ConeProgram {
            block_dims: vec![3],
            n_scalars: 0,
            objective: obj,
            ineq: vec![],
            eq: (a_eq, 1.0),
        };
        let mut x0 = DVector::zeros(dim);
        for q in 0..3 {
            x0[q] = 1.0 / 3.0;
        }
        let sol = program
            .solve(
                x0,
                &PathParams {
                    rel_gap: 1e-9,
                    gap_floor: 1e-30,
                    t0_scale: 10.0,
                    max_newton: 500,
                },
            )
            .unwrap();
        assert!(sol.converged);
        let value = program.objective.dot(&sol.x);
        assert_relative_eq!(value, 5.0, max_relative = 1e-7);
    }

    #[test]
    fn barrier_solver_respects_linear_constraints() {
        // Same but cap X₃₃ ≤ 0.3: the best split is diag(0, 0.7, 0.3) → 2.9.
        let c_mat = CMat::from_diagonal(&CVec::from_vec(vec![
            c(1.0, 0.0),
            c(2.0, 0.0),
            c(5.0, 0.0),
        ]));
        let dim = hvec_dim(3);
        let mut obj = DVector::zeros(dim);
        let mut buf = vec![0.0; dim];
        hvec(&c_mat, &mut buf);
        for (i, v) in buf.iter().enumerate() {
            obj[i] = *v;
        }
        let mut a_eq = DVector::zeros(dim);
        for q in 0..3 {
            a_eq[q] = 1.0;
        }
        let mut gamma = DVector::zeros(dim);
        gamma[2] = -1.0; // −X₃₃ ≥ −0.3
        let program = ConeProgram {
            block_dims: vec![3],
            n_scalars: 0,
            objective: obj,
            ineq: vec![(gamma, -0.3)],
            eq: (a_eq, 1.0),
        };
        let mut x0 = DVector::zeros(dim);
        x0[0] = 0.36;
        x0[1] = 0.35;
        x0[2] = 0.29;
        let sol = program
            .solve(
                x0,
                &PathParams {
                    rel_gap: 1e-9,
                    gap_floor: 1e-30,
                    t0_scale: 10.0,
                    max_newton: 500,
                },
            )
            .unwrap();
        let value = program.objective.dot(&sol.x);
        assert_relative_eq!(value, 2.9, max_relative = 1e-6);
    }

    // ─── solver behaviour ────────────────────────────────────────────────

    #[test]
    fn solution_is_feasible_with_exact_power() {
        for seed in 0..6u64 {
            let problem = random_problem(8, 3, seed);
            let sol = optimize_beamformers(&problem).unwrap();
            assert!(sol.converged, "seed {seed}");
            assert_relative_eq!(
                sol.precoders.total_power(),
                problem.p_bs,
                max_relative = 1e-12
            );
            for (k, slack) in sol.sinr_slacks.iter().enumerate() {
                assert!(
                    *slack >= -1e-6 * problem.xi,
                    "seed {seed} user {k} slack {slack}"
                );
            }
            assert!(sol.objective > 0.0);
        }
    }

    #[test]
    fn covariance_objective_matches_recovered_precoders() {
        let problem = random_problem(6, 2, 11);
        let sol = optimize_beamformers(&problem).unwrap();
        let r_total = sol
            .covariances
            .iter()
            .skip(1)
            .fold(sol.covariances[0].clone(), |acc, r| acc + r);
        let cov_obj =
            problem.cascade.norm_squared() * quadratic_form(&r_total, &problem.cascade);
        assert_relative_eq!(cov_obj, sol.objective, max_relative = 1e-6);

        // Per-user: covariance-implied SINR equals recovered-precoder SINR.
        for k in 0..2 {
            let cov_sinr = covariance_sinr(
                k,
                &problem.users,
                &sol.covariances,
                problem.sigma2,
                problem.forwarded_noise[k],
            )
            .unwrap();
            assert_relative_eq!(cov_sinr, sol.achieved_sinrs[k], max_relative = 1e-6);
        }
    }

    #[test]
    fn doubling_the_budget_at_least_doubles_the_objective() {
        let problem = random_problem(6, 2, 12);
        let sol1 = optimize_beamformers(&problem).unwrap();
        let mut bigger = problem.clone();
        bigger.p_bs = 2.0;
        let sol2 = optimize_beamformers(&bigger).unwrap();
        assert!(sol2.objective >= 1.99 * sol1.objective);
    }

    #[test]
    fn no_users_reduces_to_matched_beam() {
        let mut rng = standalone_stream(13, 0, Purpose::Oracle);
        let a = random_vec(5, &mut rng);
        let problem = BeamformProblem {
            cascade: a.clone(),
            users: vec![],
            forwarded_noise: vec![],
            sigma2: 1e-4,
            xi: 10.0,
            p_bs: 2.5,
        };
        let sol = optimize_beamformers(&problem).unwrap();
        assert_relative_eq!(
            sol.objective,
            2.5 * a.norm_squared() * a.norm_squared(),
            max_relative = 1e-12
        );
        assert_relative_eq!(sol.precoders.total_power(), 2.5, max_relative = 1e-12);
    }

    #[test]
    fn impossible_targets_are_reported_infeasible() {
        let mut problem = random_problem(4, 2, 14);
        problem.xi = 1e9;
        problem.p_bs = 1e-6;
        match optimize_beamformers(&problem) {
            Err(Error::Infeasible { most_violated, violation }) => {
                assert!(most_violated.contains("user"), "{most_violated}");
                assert!(violation > 0.0);
            }
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn infinite_target_is_compiled_but_infeasible() {
        let cst = compile_sinr_constraint(0, f64::INFINITY, 1e-4, 0.0).unwrap();
        assert_eq!(cst.desired_gain, 1.0);
        let mut problem = random_problem(4, 1, 15);
        problem.xi = f64::INFINITY;
        assert!(matches!(
            optimize_beamformers(&problem),
            Err(Error::Infeasible { .. })
        ));
    }

    // ─── closed-form reference ──────────────────────────────────────────

    #[test]
    fn reference_matches_grid_search() {
        // Independent cross-check of the closed form itself: exhaustive
        // Bloch-ball grid plus local refinement.
        for seed in 0..8u64 {
            let mut rng = standalone_stream(seed, 2, Purpose::Oracle);
            let a = random_vec(2, &mut rng);
            let u = random_vec(2, &mut rng);
            let (xi, sigma2, d, p) = (4.0, 0.05, 0.01, 1.0);
            let closed = two_antenna_single_user_optimum(&a, &u, xi, sigma2, d, p);

            let s = p / 2.0;
            let pauli = |v: &CVec| -> [f64; 3] {
                let cr = v[0].conj() * v[1];
                [2.0 * cr.re, 2.0 * cr.im, v[0].norm_sqr() - v[1].norm_sqr()]
            };
            let c_vec = pauli(&a);
            let q_vec = pauli(&u);
            let b = xi * (sigma2 + d) - s * u.norm_squared();
            let mut best = f64::NEG_INFINITY;
            let steps = 60;
            for ix in 0..=steps {
                for iy in 0..=steps {
                    for iz in 0..=steps {
                        let w = [
                            s * (2.0 * ix as f64 / steps as f64 - 1.0),
                            s * (2.0 * iy as f64 / steps as f64 - 1.0),
                            s * (2.0 * iz as f64 / steps as f64 - 1.0),
                        ];
                        if w[0] * w[0] + w[1] * w[1] + w[2] * w[2] > s * s {
                            continue;
                        }
                        if q_vec[0] * w[0] + q_vec[1] * w[1] + q_vec[2] * w[2] < b {
                            continue;
                        }
                        let obj = a.norm_squared()
                            * (s * a.norm_squared()
                                + c_vec[0] * w[0]
                                + c_vec[1] * w[1]
                                + c_vec[2] * w[2]);
                        best = best.max(obj);
                    }
                }
            }
            match closed {
                Ok(value) => {
                    // The grid can miss a sliver-thin feasible set entirely;
                    // when it does find points, the closed form must beat
                    // every one of them, and must not exceed the best by
                    // more than the grid resolution allows.
                    if best > f64::NEG_INFINITY {
                        let scale = p * a.norm_squared() * a.norm_squared();
                        assert!(value >= best - 1e-12, "seed {seed}: {value} < {best}");
                        assert!(
                            value <= best + 0.2 * scale,
                            "seed {seed}: {value} vs grid {best}"
                        );
                    }
                }
                Err(Error::Infeasible { .. }) => {
                    assert!(best == f64::NEG_INFINITY, "seed {seed}: grid found a point");
                }
                Err(other) => panic!("unexpected error: {other:?}"),
            }
        }
    }

    #[test]
    fn solver_agrees_with_reference_on_two_antennas() {
        for seed in 0..10u64 {
            let mut rng = standalone_stream(seed, 3, Purpose::Oracle);
            let a = random_vec(2, &mut rng);
            let u = random_vec(2, &mut rng);
            let problem = BeamformProblem {
                cascade: a.clone(),
                users: vec![u.clone()],
                forwarded_noise: vec![0.01],
                sigma2: 0.05,
                xi: 4.0,
                p_bs: 1.0,
            };
            let reference =
                two_antenna_single_user_optimum(&a, &u, 4.0, 0.05, 0.01, 1.0);
            match (optimize_beamformers(&problem), reference) {
                (Ok(sol), Ok(expected)) => {
                    assert!(
                        (sol.objective - expected).abs() <= 0.01 * expected.abs().max(1e-30),
                        "seed {seed}: solver {} vs reference {expected}",
                        sol.objective
                    );
                }
                (Err(Error::Infeasible { .. }), Err(Error::Infeasible { .. })) => {}
                (solver, reference) => {
                    panic!("verdicts disagree on seed {seed}: {solver:?} vs {reference:?}")
                }
            }
        }
    }
}
